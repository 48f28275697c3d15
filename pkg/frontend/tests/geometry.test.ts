import { describe, expect, it } from "vitest";

import { computeLayout } from "../src/geometry";
import type { NoteTriplet } from "../src/types";

const PPQ = 48;

describe("piano-roll geometry", () => {
  it("places the next note after duration plus rest", () => {
    // note (60, 1.0, 0.5) then (62, ...): second left edge at 1.5 quarters
    const melody: NoteTriplet[] = [
      [60, 1.0, 0.5],
      [62, 1.0, 0.0],
    ];
    const layout = computeLayout(melody, null, { pxPerQuarter: PPQ });
    expect(layout.rects[0]!.x).toBe(0);
    expect(layout.rects[0]!.width).toBe(1.0 * PPQ);
    expect(layout.rects[1]!.x).toBe(1.5 * PPQ);
    expect(layout.rects[1]!.onsetQ).toBe(1.5);
  });

  it("renders rests as gaps, not rectangles", () => {
    const melody: NoteTriplet[] = [
      [60, 1.0, 1.0],
      [60, 1.0, 0.0],
    ];
    const layout = computeLayout(melody, null, { pxPerQuarter: PPQ });
    const gap = layout.rects[1]!.x - (layout.rects[0]!.x + layout.rects[0]!.width);
    expect(gap).toBe(1.0 * PPQ);
    expect(layout.totalQuarters).toBe(3.0);
  });

  it("keeps a constant-pitch melody horizontally flat", () => {
    const melody: NoteTriplet[] = Array.from({ length: 6 }, () => [64, 0.5, 0.0]);
    const layout = computeLayout(melody);
    const ys = new Set(layout.rects.map((r) => r.y));
    expect(ys.size).toBe(1);
  });

  it("puts higher pitches higher on the roll", () => {
    const layout = computeLayout([
      [60, 1.0, 0.0],
      [72, 1.0, 0.0],
    ]);
    expect(layout.rects[1]!.y).toBeLessThan(layout.rects[0]!.y);
  });

  it("produces one labeled rectangle per note", () => {
    const melody: NoteTriplet[] = Array.from({ length: 20 }, (_, i) => [60 + (i % 5), 1.0, 0.0]);
    const lyrics = {
      syllables: Array.from({ length: 20 }, (_, i) => `s${i}`),
      word_spans: Array.from({ length: 20 }, (_, i) => [i, i + 1] as [number, number]),
    };
    const layout = computeLayout(melody, lyrics);
    expect(layout.rects).toHaveLength(20);
    expect(layout.rects.map((r) => r.syllable)).toEqual(lyrics.syllables);
  });

  it("total width tracks the cumulative timeline", () => {
    const melody: NoteTriplet[] = [
      [60, 1.0, 0.0],
      [62, 1.0, 1.0],
    ];
    const layout = computeLayout(melody, null, { pxPerQuarter: PPQ });
    expect(layout.totalQuarters).toBe(3.0);
    expect(layout.width).toBe(3.0 * PPQ);
  });

  it("handles an empty melody", () => {
    const layout = computeLayout([]);
    expect(layout.rects).toHaveLength(0);
    expect(layout.width).toBe(0);
  });
});
