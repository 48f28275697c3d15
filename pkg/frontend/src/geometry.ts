/** Pure piano-roll geometry: time in quarter notes on x, MIDI pitch on y.
 *
 * A note's rectangle spans [onset, onset + duration); its trailing rest is
 * a gap before the next rectangle. Higher pitches sit higher on the roll.
 */

import type { LyricsPayload, NoteTriplet } from "./types.js";

export interface NoteRect {
  index: number;
  pitch: number;
  syllable: string | null;
  x: number;
  y: number;
  width: number;
  height: number;
  onsetQ: number;
  offsetQ: number;
}

export interface RollLayout {
  rects: NoteRect[];
  width: number;
  height: number;
  totalQuarters: number;
  pitchLow: number;
  pitchHigh: number;
  pxPerQuarter: number;
  rowHeight: number;
}

export interface LayoutOptions {
  pxPerQuarter?: number;
  rowHeight?: number;
  minPitchSpan?: number;
  padRows?: number;
}

export function computeLayout(
  melody: NoteTriplet[],
  lyrics: LyricsPayload | null = null,
  options: LayoutOptions = {},
): RollLayout {
  const pxPerQuarter = options.pxPerQuarter ?? 48;
  const rowHeight = options.rowHeight ?? 12;
  const minPitchSpan = options.minPitchSpan ?? 12;
  const padRows = options.padRows ?? 2;
  if (melody.length === 0) {
    return {
      rects: [], width: 0, height: 0, totalQuarters: 0,
      pitchLow: 60, pitchHigh: 72, pxPerQuarter, rowHeight,
    };
  }
  const pitches = melody.map((n) => n[0]);
  let pitchLow = Math.min(...pitches) - padRows;
  let pitchHigh = Math.max(...pitches) + padRows;
  if (pitchHigh - pitchLow < minPitchSpan) {
    const extra = minPitchSpan - (pitchHigh - pitchLow);
    pitchLow -= Math.floor(extra / 2);
    pitchHigh += Math.ceil(extra / 2);
  }
  const rects: NoteRect[] = [];
  let clock = 0;
  melody.forEach(([pitch, duration, rest], index) => {
    rects.push({
      index,
      pitch,
      syllable: lyrics?.syllables[index] ?? null,
      x: clock * pxPerQuarter,
      y: (pitchHigh - pitch) * rowHeight,
      width: duration * pxPerQuarter,
      height: rowHeight,
      onsetQ: clock,
      offsetQ: clock + duration,
    });
    clock += duration + rest;
  });
  return {
    rects,
    width: clock * pxPerQuarter,
    height: (pitchHigh - pitchLow + 1) * rowHeight,
    totalQuarters: clock,
    pitchLow,
    pitchHigh,
    pxPerQuarter,
    rowHeight,
  };
}
