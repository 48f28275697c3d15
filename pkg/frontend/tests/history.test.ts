import { describe, expect, it } from "vitest";

import { GenerationHistory } from "../src/history";
import type { GenerateRequest, GenerateResponse } from "../src/types";
import { FEATURE_KEYS, type StyleControls } from "../src/types";

function request(): GenerateRequest {
  const controls = {} as StyleControls;
  for (const key of FEATURE_KEYS) controls[key] = 0.5;
  return { lyrics: "la la", controls, seed: 1, checkpoint: null, tempo_bpm: 120 };
}

function response(id: string, seed = 1): GenerateResponse {
  return {
    generation_id: id,
    checkpoint: "mini",
    seed,
    lyrics: { syllables: ["la", "la"], word_spans: [[0, 1], [1, 2]] },
    controls: null,
    melody: [
      [60, 1.0, 0.0],
      [62, 1.0, 0.5],
    ],
    tokens: { pitch: [1, 3] },
    realized_style: {},
    tempo_bpm: 120,
  };
}

describe("generation history", () => {
  it("is append-only and ordered by arrival time", () => {
    const history = new GenerationHistory();
    history.add(request(), response("a"), 100);
    history.add(request(), response("b"), 200);
    const before = history.list().map((r) => r.id);
    history.add(request(), response("c"), 300);
    expect(history.list().map((r) => r.id)).toEqual(["a", "b", "c"]);
    expect(before).toEqual(["a", "b", "c"].slice(0, 2));
    expect(history.list().map((r) => r.receivedAt)).toEqual([100, 200, 300]);
  });

  it("freezes records so nothing can mutate a rendered result", () => {
    const history = new GenerationHistory();
    const record = history.add(request(), response("a"));
    expect(Object.isFrozen(record)).toBe(true);
    expect(Object.isFrozen(record.response.melody)).toBe(true);
    expect(() => {
      (record.response.melody as unknown as number[][])[0] = [0, 0, 0];
    }).toThrow();
  });

  it("snapshots the request: later panel edits do not leak in", () => {
    const history = new GenerationHistory();
    const req = request();
    const record = history.add(req, response("a"));
    req.lyrics = "changed";
    expect(record.request.lyrics).toBe("la la");
  });

  it("pins A/B selections and queues them in slot order", () => {
    const history = new GenerationHistory();
    history.add(request(), response("a"));
    history.add(request(), response("b"));
    history.pin("B", "a");
    history.pin("A", "b");
    const [a, b] = history.comparison();
    expect(a?.id).toBe("b");
    expect(b?.id).toBe("a");
    expect(history.playbackQueue().map((r) => r.id)).toEqual(["b", "a"]);
    expect(() => history.pin("A", "zzz")).toThrow();
  });

  it("finds records by id without any service round trip", () => {
    const history = new GenerationHistory();
    history.add(request(), response("abc"));
    expect(history.get("abc")?.response.melody).toHaveLength(2);
    expect(history.get("nope")).toBeUndefined();
    expect(history.latest()?.id).toBe("abc");
  });
});
