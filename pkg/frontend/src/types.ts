/** Shared types mirroring the generation service's JSON contracts. */

export const FEATURE_KEYS = [
  "pitch.range",
  "pitch.avg",
  "pitch.var",
  "duration.range",
  "duration.avg",
  "duration.var",
  "rest.range",
  "rest.avg",
  "rest.var",
] as const;

export type FeatureKey = (typeof FEATURE_KEYS)[number];

export type StyleControls = Record<FeatureKey, number>;

/** (midi pitch, duration, rest) with times in quarter notes. */
export type NoteTriplet = [number, number, number];

export interface GenerateRequest {
  lyrics: string;
  controls: StyleControls;
  seed: number | null;
  checkpoint: string | null;
  tempo_bpm: number;
}

export interface LyricsPayload {
  syllables: string[];
  word_spans: [number, number][];
}

export interface GenerateResponse {
  generation_id: string;
  checkpoint: string;
  seed: number;
  lyrics: LyricsPayload;
  controls: Partial<StyleControls> | null;
  melody: NoteTriplet[];
  tokens: Record<string, number[]>;
  realized_style: Record<string, number>;
  tempo_bpm: number;
}

export interface CheckpointList {
  checkpoints: string[];
  default: string | null;
}
