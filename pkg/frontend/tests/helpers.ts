// Shared fixtures: a fake service speaking the real wire format.

import { vi } from "vitest";
import type { SequenceResponse, TemplatesResponse, UploadResponse } from "../src/types.js";

export const UPLOAD_RESPONSE: UploadResponse = {
  session_id: "s-test",
  dimension: 4,
  albums: [
    {
      album_id: "alpha",
      n_tracks: 3,
      tracks: [
        { track_id: "a0", title: "Opening" },
        { track_id: "a1", title: "Middle" },
        { track_id: "a2", title: "Closing" },
      ],
    },
    {
      album_id: "beta",
      n_tracks: 4,
      tracks: [
        { track_id: "b0", title: "One" },
        { track_id: "b1", title: "Two" },
        { track_id: "b2", title: "Three" },
        { track_id: "b3", title: "Four" },
      ],
    },
  ],
};

export const TEMPLATES_RESPONSE: TemplatesResponse = {
  templates: [
    { name: "rising", points: [[0, 0], [0.5, 0.5], [1, 1]] },
    { name: "arch", points: [[0, 0], [0.5, 1], [1, 0]] },
  ],
};

export const TEMPLATE_SEQUENCE: SequenceResponse = {
  session_id: "s-test",
  album_id: "alpha",
  method: "template",
  orders: [
    {
      order: [1, 2, 0],
      track_ids: ["a1", "a2", "a0"],
      template: "rising",
      fit_cost: 0.333333,
      narrative_values: [0.1, 0.5, 0.9],
    },
  ],
};

export const DIRECT_SEQUENCE: SequenceResponse = {
  session_id: "s-test",
  album_id: "alpha",
  method: "direct",
  seed: 0,
  orders: [
    {
      order: [0, 1, 2],
      track_ids: ["a0", "a1", "a2"],
      log_likelihood: -0.4,
      narrative_values: [0.2, 0.4, 0.8],
    },
    {
      order: [1, 0, 2],
      track_ids: ["a1", "a0", "a2"],
      log_likelihood: -1.1,
      narrative_values: [0.4, 0.2, 0.8],
    },
    {
      order: [2, 1, 0],
      track_ids: ["a2", "a1", "a0"],
      log_likelihood: -2.7,
      narrative_values: [0.8, 0.4, 0.2],
    },
  ],
  shortfall: false,
};

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export type Route = (url: string, init?: RequestInit) => Response | Promise<Response> | null;

/** Install a fetch mock built from route functions; returns the spy. */
export function mockFetch(...routes: Route[]) {
  const spy = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    for (const route of routes) {
      const hit = route(url, init);
      if (hit) return hit;
    }
    throw new Error(`unmocked fetch: ${url}`);
  });
  vi.stubGlobal("fetch", spy);
  return spy;
}

export function flush(times = 4): Promise<void> {
  let p = Promise.resolve();
  for (let i = 0; i < times; i++) p = p.then(() => new Promise((r) => setTimeout(r, 0)));
  return p;
}
