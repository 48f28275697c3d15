/** Controller between the control panel, the service client, and history.
 *
 * Submission outcomes are explicit values so the DOM layer stays thin:
 * a success appends a record; a validation failure names the offending
 * slider/field; a transport failure raises a non-blocking banner and
 * leaves the panel state untouched.
 */

import { ApiError, offendingControl, type GenerationClient } from "./api.js";
import { buildRequest, canSubmit, type ControlPanelState } from "./controls.js";
import { GenerationHistory, type GenerationRecord } from "./history.js";
import type { FeatureKey } from "./types.js";

export interface SubmitSuccess {
  kind: "ok";
  record: GenerationRecord;
}

export interface SubmitRejected {
  kind: "invalid";
  field: FeatureKey | "lyrics" | null;
  message: string;
}

export interface SubmitUnavailable {
  kind: "unavailable";
  message: string;
}

export type SubmitOutcome = SubmitSuccess | SubmitRejected | SubmitUnavailable;

export class StudioController {
  readonly history = new GenerationHistory();
  busy = false;

  constructor(private api: GenerationClient) {}

  async submit(state: ControlPanelState): Promise<SubmitOutcome> {
    if (!canSubmit(state)) {
      return { kind: "invalid", field: "lyrics", message: "enter some lyrics first" };
    }
    const request = buildRequest(state);
    this.busy = true;
    try {
      const response = await this.api.generate(request);
      return { kind: "ok", record: this.history.add(request, response) };
    } catch (error) {
      if (error instanceof ApiError) {
        if (error.status === 400 || error.status === 422) {
          return {
            kind: "invalid",
            field: offendingControl(error.detail),
            message: error.message,
          };
        }
        return { kind: "unavailable", message: `service error ${error.status}: ${error.message}` };
      }
      return { kind: "unavailable", message: "service unreachable; your settings are preserved" };
    } finally {
      this.busy = false;
    }
  }

  /** Seed to lock in after a response, so resubmission replays exactly. */
  lockedSeed(record: GenerationRecord): number {
    return record.response.seed;
  }
}
