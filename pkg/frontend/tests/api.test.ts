import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, fetchTemplates, sequenceAlbum, uploadCorpus } from "../src/api.js";
import { TEMPLATES_RESPONSE, UPLOAD_RESPONSE, jsonResponse, mockFetch } from "./helpers.js";

afterEach(() => vi.unstubAllGlobals());

describe("uploadCorpus", () => {
  it("posts multipart and parses the session", async () => {
    const spy = mockFetch((url) => (url === "/api/albums" ? jsonResponse(UPLOAD_RESPONSE) : null));
    const res = await uploadCorpus(new File(["csv"], "c.csv"));
    expect(res.session_id).toBe("s-test");
    expect(res.albums).toHaveLength(2);
    const [, init] = spy.mock.calls[0];
    expect(init?.method).toBe("POST");
    expect(init?.body).toBeInstanceOf(FormData);
  });

  it("surfaces the server's error message and status", async () => {
    mockFetch(() => jsonResponse({ error: "malformed feature f2", line: 3 }, 400));
    const err = await uploadCorpus(new File(["x"], "c.csv")).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(400);
    expect(err.message).toContain("malformed feature f2");
  });

  it("maps 413 with the server text", async () => {
    mockFetch(() => jsonResponse({ error: "request exceeds upload limit of 1024 bytes" }, 413));
    const err = await uploadCorpus(new File(["x"], "c.csv")).catch((e) => e);
    expect(err.status).toBe(413);
    expect(err.message).toMatch(/upload limit/);
  });

  it("wraps network failures with status 0", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => {
      throw new TypeError("connection refused");
    }));
    const err = await uploadCorpus(new File(["x"], "c.csv")).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(0);
  });
});

describe("sequenceAlbum", () => {
  it("sends the request body as JSON", async () => {
    const spy = mockFetch((url) =>
      url === "/api/sequence"
        ? jsonResponse({ session_id: "s", album_id: "a", method: "direct", orders: [] })
        : null,
    );
    await sequenceAlbum({ session_id: "s", album_id: "a", method: "direct", n: 2, seed: 7 });
    const [, init] = spy.mock.calls[0];
    expect(JSON.parse(String(init?.body))).toEqual({
      session_id: "s",
      album_id: "a",
      method: "direct",
      n: 2,
      seed: 7,
    });
  });

  it("propagates 409 so the panel can explain the missing model", async () => {
    mockFetch(() => jsonResponse({ error: "no model checkpoint loaded" }, 409));
    const err = await sequenceAlbum({ session_id: "s", album_id: "a", method: "direct" }).catch(
      (e) => e,
    );
    expect(err.status).toBe(409);
  });
});

describe("fetchTemplates", () => {
  it("returns the template list", async () => {
    mockFetch((url) => (url === "/api/templates" ? jsonResponse(TEMPLATES_RESPONSE) : null));
    const res = await fetchTemplates();
    expect(res.templates.map((t) => t.name)).toEqual(["rising", "arch"]);
  });
});
