import { describe, expect, it } from "vitest";

import { Store } from "../src/state.js";
import { DIRECT_SEQUENCE, TEMPLATE_SEQUENCE, UPLOAD_RESPONSE } from "./helpers.js";

function readyStore(): Store {
  const store = new Store();
  store.setSession(
    UPLOAD_RESPONSE.session_id,
    UPLOAD_RESPONSE.dimension,
    UPLOAD_RESPONSE.albums,
  );
  return store;
}

describe("session and selection", () => {
  it("selects the first album on upload", () => {
    const store = readyStore();
    expect(store.get().selectedAlbumId).toBe("alpha");
    expect(store.selectedAlbum()?.n_tracks).toBe(3);
  });

  it("switching albums clears previous results", () => {
    const store = readyStore();
    const t = store.beginSequence("alpha");
    store.applySequenceResult("alpha", t, TEMPLATE_SEQUENCE);
    expect(store.get().results).not.toBeNull();
    store.selectAlbum("beta");
    expect(store.get().results).toBeNull();
  });
});

describe("request tokens", () => {
  it("applies the newest response", () => {
    const store = readyStore();
    const token = store.beginSequence("alpha");
    expect(store.isPending("alpha")).toBe(true);
    expect(store.applySequenceResult("alpha", token, TEMPLATE_SEQUENCE)).toBe(true);
    expect(store.isPending("alpha")).toBe(false);
    expect(store.get().results?.orders).toHaveLength(1);
  });

  it("a superseded response never overwrites the newer result", () => {
    const store = readyStore();
    const stale = store.beginSequence("alpha");
    const fresh = store.beginSequence("alpha");
    expect(store.applySequenceResult("alpha", fresh, DIRECT_SEQUENCE)).toBe(true);
    // the old in-flight response lands afterwards and must be dropped
    expect(store.applySequenceResult("alpha", stale, TEMPLATE_SEQUENCE)).toBe(false);
    expect(store.get().results?.method).toBe("direct");
    expect(store.get().results?.orders).toHaveLength(3);
  });

  it("a stale failure cannot clobber the newer result either", () => {
    const store = readyStore();
    const stale = store.beginSequence("alpha");
    const fresh = store.beginSequence("alpha");
    store.applySequenceResult("alpha", fresh, DIRECT_SEQUENCE);
    expect(store.failSequence("alpha", stale, "boom")).toBe(false);
    expect(store.get().error).toBeNull();
  });

  it("responses for a deselected album are dropped but clear pending", () => {
    const store = readyStore();
    const token = store.beginSequence("alpha");
    store.selectAlbum("beta");
    expect(store.applySequenceResult("alpha", token, TEMPLATE_SEQUENCE)).toBe(false);
    expect(store.get().results).toBeNull();
    expect(store.isPending("alpha")).toBe(false);
  });

  it("tracks pending per album", () => {
    const store = readyStore();
    const ta = store.beginSequence("alpha");
    store.selectAlbum("beta");
    const tb = store.beginSequence("beta");
    expect(store.isPending("alpha")).toBe(true);
    expect(store.isPending("beta")).toBe(true);
    store.applySequenceResult("beta", tb, { ...DIRECT_SEQUENCE, album_id: "beta", orders: [] });
    expect(store.isPending("beta")).toBe(false);
    expect(store.isPending("alpha")).toBe(true);
    store.applySequenceResult("alpha", ta, TEMPLATE_SEQUENCE);
    expect(store.isPending("alpha")).toBe(false);
  });
});

describe("display invariants", () => {
  it("drops orders whose length mismatches the album", () => {
    const store = readyStore();
    const token = store.beginSequence("alpha");
    store.applySequenceResult("alpha", token, {
      ...TEMPLATE_SEQUENCE,
      orders: [
        ...TEMPLATE_SEQUENCE.orders,
        { order: [0, 1], track_ids: ["a0", "a1"], fit_cost: 0.1 },
      ],
    });
    expect(store.get().results?.orders).toHaveLength(1);
  });

  it("highlight stays within range", () => {
    const store = readyStore();
    const token = store.beginSequence("alpha");
    store.applySequenceResult("alpha", token, DIRECT_SEQUENCE);
    store.highlight(2);
    expect(store.get().highlighted).toBe(2);
    store.highlight(99);
    expect(store.get().highlighted).toBe(2);
    store.highlight(-1);
    expect(store.get().highlighted).toBe(2);
  });
});
