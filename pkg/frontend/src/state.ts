/**
 * UI state helpers, kept framework-free so they are trivially unit-testable.
 *
 * All durable state (artworks, ratings) lives on the server; this module only
 * tracks the form, the in-flight flag, and a retry queue for feedback that
 * failed to send. A page refresh loses nothing that matters.
 */
import type { ArtworkRecord, GenerationRequestBody, StudioFormState } from "./types.js";
import { clamp, LIMITS } from "./validation.js";

export const EQUAL_WEIGHTS: [number, number, number, number, number] = [
  0.2, 0.2, 0.2, 0.2, 0.2,
];

export function defaultFormState(): StudioFormState {
  return {
    text: "",
    dishImageFile: null,
    paletteK: 5,
    whitespaceRatio: 0.3,
    styleId: null,
    styleStrength: 0.7,
    weights: [...EQUAL_WEIGHTS],
    seedLock: false,
    caption: "",
  };
}

/** Apply a slider change, clamping into the server-permitted range. */
export function setSlider(
  state: StudioFormState,
  field: "paletteK" | "whitespaceRatio" | "styleStrength",
  value: number,
): StudioFormState {
  const next = { ...state };
  switch (field) {
    case "paletteK":
      next.paletteK = Math.round(
        clamp(value, LIMITS.paletteK.min, LIMITS.paletteK.max),
      );
      break;
    case "whitespaceRatio":
      next.whitespaceRatio = clamp(
        value,
        LIMITS.whitespaceRatio.min,
        LIMITS.whitespaceRatio.max,
      );
      break;
    case "styleStrength":
      next.styleStrength = clamp(
        value,
        LIMITS.styleStrength.min,
        LIMITS.styleStrength.max,
      );
      break;
  }
  return next;
}

export function setWeight(
  state: StudioFormState,
  index: number,
  value: number,
): StudioFormState {
  const weights = [...state.weights] as StudioFormState["weights"];
  if (index < 0 || index >= weights.length) return state;
  weights[index] = clamp(value, 0, 1);
  return { ...state, weights };
}

/**
 * Build the request body for a submission. With seedLock on and a previous
 * seed available the same seed is re-sent (the server is deterministic, so
 * the artwork reproduces exactly); otherwise the seed field is omitted and
 * the server picks a fresh one.
 */
export function buildRequest(
  state: StudioFormState,
  lastSeed: number | null,
): GenerationRequestBody {
  const body: GenerationRequestBody = {
    text: state.text,
    palette_k: state.paletteK,
    whitespace_ratio: state.whitespaceRatio,
  };
  if (state.styleId !== null) {
    body.style_id = state.styleId;
    body.style_strength = state.styleStrength;
  }
  if (!weightsAreEqual(state.weights)) {
    body.weights = [...state.weights];
  }
  if (state.seedLock && lastSeed !== null) {
    body.seed = lastSeed;
  }
  if (state.caption.length > 0) {
    body.caption = state.caption;
  }
  return body;
}

function weightsAreEqual(weights: readonly number[]): boolean {
  const first = weights[0];
  return first !== undefined && weights.every((w) => Math.abs(w - first) < 1e-9);
}

/** At most one generation request in flight per session. */
export interface SessionState {
  pending: boolean;
  lastSeed: number | null;
  gallery: ArtworkRecord[];
  feedbackQueue: { artworkId: string; rating: number; comment: string }[];
}

export function initialSession(): SessionState {
  return { pending: false, lastSeed: null, gallery: [], feedbackQueue: [] };
}

export function beginGeneration(session: SessionState): SessionState | null {
  if (session.pending) return null; // submit is disabled while pending
  return { ...session, pending: true };
}

export function completeGeneration(
  session: SessionState,
  record: ArtworkRecord,
): SessionState {
  return {
    ...session,
    pending: false,
    lastSeed: record.request.seed,
    gallery: [record, ...session.gallery.filter((r) => r.id !== record.id)],
  };
}

export function failGeneration(session: SessionState): SessionState {
  return { ...session, pending: false };
}

/** Feedback that failed on a network error waits here for a retry pass. */
export function queueFeedback(
  session: SessionState,
  artworkId: string,
  rating: number,
  comment: string,
): SessionState {
  return {
    ...session,
    feedbackQueue: [...session.feedbackQueue, { artworkId, rating, comment }],
  };
}

export function dequeueFeedback(session: SessionState): SessionState {
  return { ...session, feedbackQueue: session.feedbackQueue.slice(1) };
}

/** Presentation data for one gallery card. */
export interface ArtworkCardView {
  id: string;
  imageUrl: string;
  seed: number;
  characters: string;
  paletteCss: string[];
  bestScore: number | null;
  rating: number | null;
}

export function cardViewModel(record: ArtworkRecord, imageUrl: string): ArtworkCardView {
  const chars = record.metadata.characters ?? [];
  const palette = record.metadata.palette ?? [];
  const chosen = record.metadata.chosen_index;
  const best =
    typeof chosen === "number" && record.scores[chosen] !== undefined
      ? record.scores[chosen]
      : null;
  const lastFeedback = record.feedback[record.feedback.length - 1];
  return {
    id: record.id,
    imageUrl,
    seed: record.request.seed,
    characters: chars.map((c) => c.character).join(""),
    paletteCss: palette.map(
      (rgb) => `rgb(${rgb[0] ?? 0}, ${rgb[1] ?? 0}, ${rgb[2] ?? 0})`,
    ),
    bestScore: best,
    rating: lastFeedback ? lastFeedback.rating : null,
  };
}
