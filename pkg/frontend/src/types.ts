/** Shared types for the studio UI, mirroring the service's JSON shapes. */

export interface StudioFormState {
  text: string;
  dishImageFile: File | null;
  paletteK: number; // 1..16
  whitespaceRatio: number; // 0..0.9
  styleId: string | null;
  styleStrength: number; // 0..1
  weights: [number, number, number, number, number];
  seedLock: boolean;
  caption: string;
}

export interface GenerationRequestBody {
  text: string;
  palette_k: number;
  whitespace_ratio: number;
  style_id?: string;
  style_strength?: number;
  weights?: number[];
  seed?: number;
  caption?: string;
}

export interface ArtworkRecord {
  id: string;
  created_at: string;
  request: GenerationRequestBody & { seed: number; has_dish_image: boolean };
  metadata: {
    characters?: { character: string; similarity: number }[];
    palette?: number[][];
    chosen_index?: number;
    [key: string]: unknown;
  };
  scores: number[];
  feedback: { rating: number; comment: string; created_at: string }[];
}

export interface StyleInfo {
  style_id: string;
  display_name: string;
  preview_url: string;
}

export interface ApiFieldError {
  field: string;
  message: string;
}
