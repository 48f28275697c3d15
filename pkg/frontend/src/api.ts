/** Thin client for the generation service's JSON endpoints. */

import type { CheckpointList, FeatureKey, GenerateRequest, GenerateResponse } from "./types.js";
import { FEATURE_KEYS } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
  }
}

/** The style control named in a validation error, if any. */
export function offendingControl(detail: unknown): FeatureKey | null {
  const text = typeof detail === "string" ? detail : JSON.stringify(detail ?? "");
  for (const key of FEATURE_KEYS) {
    if (text.includes(key)) return key;
  }
  return null;
}

async function parseJson(response: Response): Promise<unknown> {
  try {
    return await response.json();
  } catch {
    return null;
  }
}

/** Structural contract the controller depends on; mocked in tests. */
export interface GenerationClient {
  generate(request: GenerateRequest): Promise<GenerateResponse>;
}

export class StudioApi implements GenerationClient {
  constructor(private baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      const body = (await parseJson(response)) as { detail?: unknown } | null;
      throw new ApiError(response.status, body?.detail ?? response.statusText);
    }
    return (await response.json()) as T;
  }

  generate(request: GenerateRequest): Promise<GenerateResponse> {
    return this.request<GenerateResponse>("/api/generate", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
  }

  checkpoints(): Promise<CheckpointList> {
    return this.request<CheckpointList>("/api/checkpoints");
  }

  health(): Promise<{ status: string }> {
    return this.request<{ status: string }>("/api/health");
  }

  midiUrl(generationId: string): string {
    return `${this.baseUrl}/api/generations/${generationId}/midi`;
  }
}
