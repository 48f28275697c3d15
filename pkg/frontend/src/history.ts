/** Append-only generation history with an A/B comparison selection.
 *
 * Records are frozen on entry: re-rendering any history item works purely
 * from the stored response, never by re-contacting the service.
 */

import type { GenerateRequest, GenerateResponse } from "./types.js";

export interface GenerationRecord {
  readonly id: string;
  readonly request: GenerateRequest;
  readonly response: GenerateResponse;
  readonly receivedAt: number;
}

function deepFreeze<T>(value: T): T {
  if (value && typeof value === "object") {
    for (const key of Object.keys(value as object)) {
      deepFreeze((value as Record<string, unknown>)[key]);
    }
    Object.freeze(value);
  }
  return value;
}

export class GenerationHistory {
  private records: GenerationRecord[] = [];
  private ab: [string | null, string | null] = [null, null];

  add(request: GenerateRequest, response: GenerateResponse, now?: number): GenerationRecord {
    const record: GenerationRecord = deepFreeze({
      id: response.generation_id,
      request: structuredClone(request),
      response: structuredClone(response),
      receivedAt: now ?? Date.now(),
    });
    this.records.push(record);
    return record;
  }

  list(): readonly GenerationRecord[] {
    return this.records;
  }

  get(id: string): GenerationRecord | undefined {
    return this.records.find((r) => r.id === id);
  }

  latest(): GenerationRecord | undefined {
    return this.records[this.records.length - 1];
  }

  /** Pin a record into the A or B comparison slot. */
  pin(slot: "A" | "B", id: string): void {
    if (!this.get(id)) throw new Error(`unknown generation ${id}`);
    this.ab[slot === "A" ? 0 : 1] = id;
  }

  comparison(): [GenerationRecord | null, GenerationRecord | null] {
    return [
      this.ab[0] ? this.get(this.ab[0]) ?? null : null,
      this.ab[1] ? this.get(this.ab[1]) ?? null : null,
    ];
  }

  /** Records queued for sequential A/B playback, in slot order. */
  playbackQueue(): GenerationRecord[] {
    return this.comparison().filter((r): r is GenerationRecord => r !== null);
  }
}
