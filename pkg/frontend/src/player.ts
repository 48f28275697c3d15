/** Monophonic Web Audio playback with note-index highlighting.
 *
 * Scheduling is pure arithmetic (exported for tests): a note starting at
 * cumulative quarter q plays at q * 60 / tempo seconds.
 */

import type { NoteTriplet } from "./types.js";

export interface ScheduledNote {
  index: number;
  startSec: number;
  endSec: number;
  frequencyHz: number;
}

export function midiToFrequency(pitch: number): number {
  return 440 * Math.pow(2, (pitch - 69) / 12);
}

export function schedule(melody: NoteTriplet[], tempoBpm: number): ScheduledNote[] {
  if (!(tempoBpm > 0)) throw new Error(`tempo must be positive, got ${tempoBpm}`);
  const secPerQuarter = 60 / tempoBpm;
  const notes: ScheduledNote[] = [];
  let clock = 0;
  melody.forEach(([pitch, duration, rest], index) => {
    notes.push({
      index,
      startSec: clock * secPerQuarter,
      endSec: (clock + duration) * secPerQuarter,
      frequencyHz: midiToFrequency(pitch),
    });
    clock += duration + rest;
  });
  return notes;
}

export function totalDurationSec(melody: NoteTriplet[], tempoBpm: number): number {
  const quarters = melody.reduce((acc, [, d, r]) => acc + d + r, 0);
  return (quarters * 60) / tempoBpm;
}

/** Note index sounding at a playback time, or null during rests/after end. */
export function highlightIndexAt(notes: ScheduledNote[], timeSec: number): number | null {
  for (const note of notes) {
    if (timeSec >= note.startSec && timeSec < note.endSec) return note.index;
  }
  return null;
}

export class MelodyPlayer {
  private ctx: AudioContext | null = null;
  private stopHooks: (() => void)[] = [];
  private raf = 0;
  playing = false;

  constructor(private onHighlight: (index: number | null) => void = () => {}) {}

  async play(melody: NoteTriplet[], tempoBpm: number): Promise<void> {
    this.stop();
    const ctx = new AudioContext();
    this.ctx = ctx;
    this.playing = true;
    const plan = schedule(melody, tempoBpm);
    const t0 = ctx.currentTime + 0.05;
    const master = ctx.createGain();
    master.gain.value = 0.25;
    master.connect(ctx.destination);
    for (const note of plan) {
      const osc = ctx.createOscillator();
      const gain = ctx.createGain();
      osc.type = "triangle";
      osc.frequency.value = note.frequencyHz;
      gain.gain.setValueAtTime(0, t0 + note.startSec);
      gain.gain.linearRampToValueAtTime(1, t0 + note.startSec + 0.01);
      gain.gain.setValueAtTime(1, t0 + note.endSec - 0.02);
      gain.gain.linearRampToValueAtTime(0, t0 + note.endSec);
      osc.connect(gain).connect(master);
      osc.start(t0 + note.startSec);
      osc.stop(t0 + note.endSec);
    }
    const tick = () => {
      if (!this.playing || !this.ctx) return;
      this.onHighlight(highlightIndexAt(plan, this.ctx.currentTime - t0));
      this.raf = requestAnimationFrame(tick);
    };
    this.raf = requestAnimationFrame(tick);
    const endsIn = totalDurationSec(melody, tempoBpm) + 0.1;
    await new Promise<void>((resolve) => {
      const timer = setTimeout(() => resolve(), endsIn * 1000);
      this.stopHooks.push(() => {
        clearTimeout(timer);
        resolve();
      });
    });
    this.stop();
  }

  /** Play two records back to back for side-by-side comparison. */
  async playSequence(items: { melody: NoteTriplet[]; tempoBpm: number }[]): Promise<void> {
    for (const item of items) {
      await this.play(item.melody, item.tempoBpm);
      if (!this.ctx && !this.playing) break;
    }
  }

  stop(): void {
    this.playing = false;
    cancelAnimationFrame(this.raf);
    for (const hook of this.stopHooks.splice(0)) hook();
    if (this.ctx) {
      void this.ctx.close().catch(() => {});
      this.ctx = null;
    }
    this.onHighlight(null);
  }
}
