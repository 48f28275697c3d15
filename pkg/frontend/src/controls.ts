/** Control panel state: nine style sliders, lyrics, seed lock, checkpoint.
 *
 * Slider positions are integers in [0, SLIDER_MAX]; they map affinely onto
 * request control values so 0 -> 0.0, SLIDER_MAX -> 1.0, and the midpoint
 * is exactly 0.5. The mapping is a single division, so a given position
 * always produces the identical float.
 */

import { FEATURE_KEYS, type FeatureKey, type GenerateRequest, type StyleControls } from "./types.js";

export const SLIDER_MAX = 1000;

export interface ControlPanelState {
  sliders: Record<FeatureKey, number>; // integer slider positions
  lyrics: string;
  seedLock: boolean;
  seed: number | null; // sent only while locked
  checkpoint: string | null;
  tempoBpm: number;
}

export function initialState(): ControlPanelState {
  const sliders = {} as Record<FeatureKey, number>;
  for (const key of FEATURE_KEYS) sliders[key] = SLIDER_MAX / 2;
  return {
    sliders,
    lyrics: "",
    seedLock: false,
    seed: null,
    checkpoint: null,
    tempoBpm: 120,
  };
}

export function clampPosition(position: number): number {
  if (!Number.isFinite(position)) return 0;
  return Math.min(Math.max(Math.round(position), 0), SLIDER_MAX);
}

export function setSlider(
  state: ControlPanelState,
  key: FeatureKey,
  position: number,
): ControlPanelState {
  return { ...state, sliders: { ...state.sliders, [key]: clampPosition(position) } };
}

export function positionToControl(position: number): number {
  return clampPosition(position) / SLIDER_MAX;
}

export function controlToPosition(value: number): number {
  return clampPosition(value * SLIDER_MAX);
}

export function controlValues(state: ControlPanelState): StyleControls {
  const controls = {} as StyleControls;
  for (const key of FEATURE_KEYS) controls[key] = positionToControl(state.sliders[key]!);
  return controls;
}

export function canSubmit(state: ControlPanelState): boolean {
  return state.lyrics.trim().length > 0;
}

export function buildRequest(state: ControlPanelState): GenerateRequest {
  return {
    lyrics: state.lyrics,
    controls: controlValues(state),
    seed: state.seedLock ? state.seed : null,
    checkpoint: state.checkpoint,
    tempo_bpm: state.tempoBpm,
  };
}
