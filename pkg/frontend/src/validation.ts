/**
 * Client-side validation mirroring the server's 422 rules.
 *
 * Every rule here is a strict subset of what the server enforces: a form
 * this module accepts must never be rejected by the server for a reason the
 * client could have checked locally. Keep the bounds in lockstep with the
 * service API (text nonempty, palette_k 1..16, whitespace_ratio 0..0.9,
 * style_strength 0..1, weights: five nonnegative values not all zero,
 * integer seed, rating 1..5).
 */
import type { StudioFormState } from "./types.js";

export interface FieldError {
  field: string;
  message: string;
}

export const LIMITS = {
  paletteK: { min: 1, max: 16 },
  whitespaceRatio: { min: 0, max: 0.9 },
  styleStrength: { min: 0, max: 1 },
  weightCount: 5,
  rating: { min: 1, max: 5 },
} as const;

export function validateForm(
  state: StudioFormState,
  knownStyleIds?: string[],
): FieldError[] {
  const errors: FieldError[] = [];
  if (state.text.length === 0) {
    errors.push({ field: "text", message: "must be a nonempty string" });
  }
  if (
    !Number.isInteger(state.paletteK) ||
    state.paletteK < LIMITS.paletteK.min ||
    state.paletteK > LIMITS.paletteK.max
  ) {
    errors.push({ field: "palette_k", message: "must be in [1, 16]" });
  }
  if (
    !Number.isFinite(state.whitespaceRatio) ||
    state.whitespaceRatio < LIMITS.whitespaceRatio.min ||
    state.whitespaceRatio > LIMITS.whitespaceRatio.max
  ) {
    errors.push({ field: "whitespace_ratio", message: "must be in [0, 0.9]" });
  }
  if (
    !Number.isFinite(state.styleStrength) ||
    state.styleStrength < LIMITS.styleStrength.min ||
    state.styleStrength > LIMITS.styleStrength.max
  ) {
    errors.push({ field: "style_strength", message: "must be in [0, 1]" });
  }
  if (state.weights.length !== LIMITS.weightCount) {
    errors.push({ field: "weights", message: "must have length 5" });
  } else if (state.weights.some((w) => !Number.isFinite(w) || w < 0)) {
    errors.push({ field: "weights", message: "must be nonnegative" });
  } else if (state.weights.reduce((a, b) => a + b, 0) <= 0) {
    errors.push({ field: "weights", message: "must not be all zero" });
  }
  if (
    state.styleId !== null &&
    knownStyleIds !== undefined &&
    !knownStyleIds.includes(state.styleId)
  ) {
    errors.push({ field: "style_id", message: `unknown style '${state.styleId}'` });
  }
  return errors;
}

export function validateRating(rating: number): FieldError[] {
  if (
    !Number.isInteger(rating) ||
    rating < LIMITS.rating.min ||
    rating > LIMITS.rating.max
  ) {
    return [{ field: "rating", message: "must be an integer in 1..5" }];
  }
  return [];
}

/** Clamp a slider value into its permitted range (sliders never go invalid). */
export function clamp(value: number, min: number, max: number): number {
  if (!Number.isFinite(value)) return min;
  return Math.min(max, Math.max(min, value));
}
