/** DOM wiring for the studio: panel on the left, roll and history right. */

import { StudioApi } from "./api.js";
import { StudioController } from "./app.js";
import {
  SLIDER_MAX,
  canSubmit,
  initialState,
  setSlider,
  type ControlPanelState,
} from "./controls.js";
import type { GenerationRecord } from "./history.js";
import { renderPianoRoll } from "./pianoroll.js";
import { MelodyPlayer } from "./player.js";
import { FEATURE_KEYS, type FeatureKey } from "./types.js";

const GROUPS: { attr: string; label: string }[] = [
  { attr: "pitch", label: "Pitch" },
  { attr: "duration", label: "Duration" },
  { attr: "rest", label: "Rest" },
];
const STATS = [
  { stat: "range", label: "range" },
  { stat: "avg", label: "average" },
  { stat: "var", label: "variance" },
];

let state: ControlPanelState = initialState();
const api = new StudioApi("");
const controller = new StudioController(api);
let currentHighlight: (index: number | null) => void = () => {};
const player = new MelodyPlayer((index) => currentHighlight(index));

const el = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

function sliderRow(key: FeatureKey, label: string): HTMLElement {
  const row = document.createElement("label");
  row.className = "slider-row";
  row.id = `row-${key}`;
  const name = document.createElement("span");
  name.textContent = label;
  const value = document.createElement("output");
  value.textContent = "0.50";
  const input = document.createElement("input");
  input.type = "range";
  input.min = "0";
  input.max = String(SLIDER_MAX);
  input.step = "1";
  input.value = String(SLIDER_MAX / 2);
  input.addEventListener("input", () => {
    state = setSlider(state, key, Number(input.value));
    value.textContent = (Number(input.value) / SLIDER_MAX).toFixed(2);
    clearFieldError();
  });
  row.append(name, input, value);
  return row;
}

function buildPanel(): void {
  const panel = el<HTMLDivElement>("sliders");
  for (const group of GROUPS) {
    const box = document.createElement("fieldset");
    const legend = document.createElement("legend");
    legend.textContent = group.label;
    box.appendChild(legend);
    for (const { stat, label } of STATS) {
      box.appendChild(sliderRow(`${group.attr}.${stat}` as FeatureKey, label));
    }
    panel.appendChild(box);
  }
}

function setBanner(message: string | null): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = message ?? "";
  banner.hidden = message === null;
}

function clearFieldError(): void {
  document.querySelectorAll(".field-error").forEach((node) => node.classList.remove("field-error"));
}

function markFieldError(field: FeatureKey | "lyrics" | null, message: string): void {
  clearFieldError();
  if (field === "lyrics") el<HTMLTextAreaElement>("lyrics").classList.add("field-error");
  else if (field) el<HTMLElement>(`row-${field}`).classList.add("field-error");
  setBanner(message);
}

function showRecord(record: GenerationRecord): void {
  const host = el<HTMLDivElement>("roll");
  host.replaceChildren();
  const rendered = renderPianoRoll(record);
  currentHighlight = rendered.highlight;
  host.appendChild(rendered.svg);
  el<HTMLSpanElement>("seed-value").textContent = String(record.response.seed);
  el<HTMLAnchorElement>("midi-link").href = api.midiUrl(record.id);
  el<HTMLButtonElement>("play").disabled = false;
  if (state.seedLock) state = { ...state, seed: record.response.seed };
}

function refreshHistory(): void {
  const list = el<HTMLUListElement>("history");
  list.replaceChildren();
  for (const record of [...controller.history.list()].reverse()) {
    const item = document.createElement("li");
    const show = document.createElement("button");
    show.textContent = `#${record.id.slice(0, 6)} seed ${record.response.seed}`;
    show.addEventListener("click", () => showRecord(record));
    const pinA = document.createElement("button");
    pinA.textContent = "A";
    pinA.addEventListener("click", () => controller.history.pin("A", record.id));
    const pinB = document.createElement("button");
    pinB.textContent = "B";
    pinB.addEventListener("click", () => controller.history.pin("B", record.id));
    item.append(show, pinA, pinB);
    list.appendChild(item);
  }
}

async function submit(): Promise<void> {
  const button = el<HTMLButtonElement>("submit");
  button.disabled = true;
  setBanner(null);
  const outcome = await controller.submit(state);
  button.disabled = !canSubmit(state);
  if (outcome.kind === "ok") {
    showRecord(outcome.record);
    refreshHistory();
  } else if (outcome.kind === "invalid") {
    markFieldError(outcome.field, outcome.message);
  } else {
    setBanner(outcome.message);
  }
}

async function init(): Promise<void> {
  buildPanel();
  const lyrics = el<HTMLTextAreaElement>("lyrics");
  const submitBtn = el<HTMLButtonElement>("submit");
  submitBtn.disabled = true;
  lyrics.addEventListener("input", () => {
    state = { ...state, lyrics: lyrics.value };
    submitBtn.disabled = !canSubmit(state) || controller.busy;
    clearFieldError();
  });
  el<HTMLInputElement>("seed-lock").addEventListener("change", (event) => {
    const locked = (event.target as HTMLInputElement).checked;
    const latest = controller.history.latest();
    state = { ...state, seedLock: locked, seed: locked && latest ? latest.response.seed : null };
  });
  submitBtn.addEventListener("click", () => void submit());
  el<HTMLButtonElement>("play").addEventListener("click", () => {
    const latest = controller.history.latest();
    if (latest) void player.play(latest.response.melody, latest.response.tempo_bpm);
  });
  el<HTMLButtonElement>("play-ab").addEventListener("click", () => {
    const queue = controller.history.playbackQueue().map((record) => ({
      melody: record.response.melody,
      tempoBpm: record.response.tempo_bpm,
    }));
    if (queue.length > 0) void player.playSequence(queue);
  });
  el<HTMLButtonElement>("stop").addEventListener("click", () => player.stop());

  try {
    const checkpoints = await api.checkpoints();
    const select = el<HTMLSelectElement>("checkpoint");
    for (const id of checkpoints.checkpoints) {
      const option = document.createElement("option");
      option.value = id;
      option.textContent = id;
      option.selected = id === checkpoints.default;
      select.appendChild(option);
    }
    select.addEventListener("change", () => {
      state = { ...state, checkpoint: select.value || null };
    });
    state = { ...state, checkpoint: checkpoints.default };
  } catch {
    setBanner("service unreachable; start it with: stylemelody serve --checkpoint-dir <dir>");
  }
}

void init();
