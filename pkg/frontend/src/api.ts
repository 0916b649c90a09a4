// Thin fetch client for the sequencing service. Errors carry the HTTP
// status and the server's message so panels can surface them verbatim.

import type { SequenceResponse, TemplatesResponse, UploadResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
    public readonly body: unknown = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  let res: Response;
  try {
    res = await fetch(path, init);
  } catch (err) {
    throw new ApiError(0, `network error: ${(err as Error).message}`);
  }
  const text = await res.text();
  let body: unknown = null;
  if (text) {
    try {
      body = JSON.parse(text);
    } catch {
      body = text;
    }
  }
  if (!res.ok) {
    const detail =
      body && typeof body === "object" && "error" in (body as Record<string, unknown>)
        ? String((body as Record<string, unknown>).error)
        : res.statusText || `HTTP ${res.status}`;
    throw new ApiError(res.status, detail, body);
  }
  return body as T;
}

export function uploadCorpus(file: File): Promise<UploadResponse> {
  const form = new FormData();
  form.append("file", file);
  return request<UploadResponse>("/api/albums", { method: "POST", body: form });
}

export interface SequenceParams {
  session_id: string;
  album_id: string;
  method: "direct" | "template";
  template_name?: string;
  n?: number;
  seed?: number;
}

export function sequenceAlbum(params: SequenceParams): Promise<SequenceResponse> {
  return request<SequenceResponse>("/api/sequence", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(params),
  });
}

export function fetchTemplates(): Promise<TemplatesResponse> {
  return request<TemplatesResponse>("/api/templates");
}
