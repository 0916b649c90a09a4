// The page: an upload panel, a sequencing panel, and the results view
// (ranked orders, the narrative-arc chart, and the ordered track list).
// Everything displayed comes from the service's JSON.

import { ApiError, fetchTemplates, sequenceAlbum, uploadCorpus } from "./api.js";
import { renderCurve } from "./chart.js";
import { Store } from "./state.js";
import type { OrderItem } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  node.append(...children);
  return node;
}

function formatScore(item: OrderItem): string {
  if (item.log_likelihood !== undefined) return `log-likelihood ${item.log_likelihood.toFixed(3)}`;
  const name = item.template ? `${item.template}, ` : "";
  return `${name}fit cost ${item.fit_cost?.toFixed(4) ?? "?"}`;
}

export function createApp(root: HTMLElement, store = new Store()): Store {
  root.innerHTML = "";
  root.appendChild(
    el(
      "header",
      {},
      el("h1", {}, "albumseq"),
      el("p", { class: "tagline" }, "upload tracks, pick a narrative, get an order"),
    ),
  );

  // --- upload panel --------------------------------------------------------
  const fileInput = el("input", { type: "file", id: "corpus-file", accept: ".csv,.json" });
  const uploadButton = el("button", { id: "upload-button", disabled: "" }, "Upload");
  const uploadStatus = el("div", { id: "upload-status", class: "status" });
  const albumList = el("div", { id: "album-list" });
  root.appendChild(
    el(
      "section",
      { id: "upload-panel" },
      el("h2", {}, "1. Corpus"),
      el("p", { class: "hint" }, "CSV: album_id,track_id,track_position,title,f0,…"),
      fileInput,
      uploadButton,
      uploadStatus,
      albumList,
    ),
  );

  fileInput.addEventListener("change", () => {
    if (fileInput.files && fileInput.files.length) uploadButton.removeAttribute("disabled");
    else uploadButton.setAttribute("disabled", "");
  });

  uploadButton.addEventListener("click", async () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    uploadStatus.textContent = "uploading…";
    uploadStatus.className = "status";
    try {
      const res = await uploadCorpus(file);
      store.setSession(res.session_id, res.dimension, res.albums);
      uploadStatus.textContent =
        `${res.albums.length} album(s), dimension ${res.dimension}`;
    } catch (err) {
      const message =
        err instanceof ApiError && err.status === 413
          ? `file too large: ${err.message}`
          : (err as Error).message;
      uploadStatus.textContent = message;
      uploadStatus.className = "status error";
    }
  });

  // --- sequencing panel ----------------------------------------------------
  const methodSelect = el("select", { id: "method-select" });
  methodSelect.append(
    el("option", { value: "template" }, "template (narrative arc)"),
    el("option", { value: "direct" }, "direct (transformer sampling)"),
  );
  const templateSelect = el("select", { id: "template-select" });
  templateSelect.append(el("option", { value: "" }, "all templates"));
  const nInput = el("input", { type: "number", id: "n-input", value: "3", min: "1" });
  const seedInput = el("input", { type: "number", id: "seed-input", value: "0" });
  const goButton = el("button", { id: "sequence-button", disabled: "" }, "Sequence");
  const seqStatus = el("div", { id: "sequence-status", class: "status" });
  root.appendChild(
    el(
      "section",
      { id: "sequence-panel" },
      el("h2", {}, "2. Sequence"),
      el("label", {}, "method ", methodSelect),
      el("label", { id: "template-label" }, "template ", templateSelect),
      el("label", { id: "n-label", hidden: "" }, "orders ", nInput),
      el("label", { id: "seed-label", hidden: "" }, "seed ", seedInput),
      goButton,
      seqStatus,
    ),
  );

  fetchTemplates()
    .then((res) => {
      store.patch({ templates: res.templates });
      for (const t of res.templates) {
        templateSelect.append(el("option", { value: t.name }, t.name));
      }
    })
    .catch(() => {
      /* template overlay degrades gracefully */
    });

  methodSelect.addEventListener("change", () => {
    store.patch({ method: methodSelect.value as "direct" | "template" });
  });
  templateSelect.addEventListener("change", () => {
    store.patch({ templateName: templateSelect.value || null });
  });
  nInput.addEventListener("change", () => {
    store.patch({ n: Math.max(1, Number(nInput.value) || 1) });
  });
  seedInput.addEventListener("change", () => {
    store.patch({ seed: Number(seedInput.value) || 0 });
  });

  goButton.addEventListener("click", async () => {
    const state = store.get();
    if (!state.sessionId || !state.selectedAlbumId) return;
    if (store.isPending(state.selectedAlbumId)) return; // one in-flight request per album
    const albumId = state.selectedAlbumId;
    const token = store.beginSequence(albumId);
    try {
      const res = await sequenceAlbum({
        session_id: state.sessionId,
        album_id: albumId,
        method: state.method,
        ...(state.method === "template" && state.templateName
          ? { template_name: state.templateName }
          : {}),
        ...(state.method === "direct" ? { n: state.n, seed: state.seed } : {}),
      });
      store.applySequenceResult(albumId, token, res);
    } catch (err) {
      const message =
        err instanceof ApiError && err.status === 409
          ? `${err.message} — start the server with a model checkpoint (albumseq serve --model …)`
          : (err as Error).message;
      store.failSequence(albumId, token, message);
    }
  });

  // --- results -------------------------------------------------------------
  const orderList = el("div", { id: "order-list" });
  const curveHolder = el("div", { id: "curve-holder" });
  const trackList = el("ol", { id: "track-list" });
  root.appendChild(
    el(
      "section",
      { id: "results-panel" },
      el("h2", {}, "3. Explore"),
      orderList,
      el("div", { class: "results-grid" }, curveHolder, trackList),
    ),
  );

  // --- render loop ---------------------------------------------------------
  function render(): void {
    const state = store.get();

    albumList.innerHTML = "";
    for (const album of state.albums) {
      const card = el(
        "button",
        {
          class: "album-card" + (album.album_id === state.selectedAlbumId ? " selected" : ""),
          "data-album": album.album_id,
        },
        `${album.album_id} (${album.n_tracks} tracks)`,
      );
      card.addEventListener("click", () => store.selectAlbum(album.album_id));
      albumList.appendChild(card);
    }

    const templateLabel = root.querySelector<HTMLElement>("#template-label")!;
    const nLabel = root.querySelector<HTMLElement>("#n-label")!;
    const seedLabel = root.querySelector<HTMLElement>("#seed-label")!;
    templateLabel.hidden = state.method !== "template";
    nLabel.hidden = state.method !== "direct";
    seedLabel.hidden = state.method !== "direct";

    const pendingHere = store.isPending(state.selectedAlbumId);
    const ready = Boolean(state.sessionId && state.selectedAlbumId) && !pendingHere;
    if (ready) goButton.removeAttribute("disabled");
    else goButton.setAttribute("disabled", "");
    methodSelect.toggleAttribute("disabled", pendingHere);
    templateSelect.toggleAttribute("disabled", pendingHere);

    seqStatus.className = "status" + (state.error ? " error" : "");
    seqStatus.textContent = state.error ?? (pendingHere ? "sequencing…" : "");

    orderList.innerHTML = "";
    curveHolder.innerHTML = "";
    trackList.innerHTML = "";
    const album = store.selectedAlbum();
    if (!state.results || !album) return;

    if (state.results.shortfall) {
      orderList.appendChild(
        el("div", { class: "status" }, "fewer distinct orders than requested"),
      );
    }
    state.results.orders.forEach((item, i) => {
      const row = el(
        "button",
        { class: "order-row" + (i === state.highlighted ? " selected" : ""), "data-order": String(i) },
        `#${i + 1} — ${formatScore(item)}`,
      );
      row.addEventListener("click", () => store.highlight(i));
      orderList.appendChild(row);
    });

    const chosen = store.highlightedOrder();
    if (!chosen) return;
    const titleByTrackId = new Map(album.tracks.map((t) => [t.track_id, t.title]));
    const labels = chosen.track_ids.map((id) => titleByTrackId.get(id) ?? id);

    if (chosen.narrative_values && chosen.narrative_values.length === album.n_tracks) {
      const template =
        state.results.method === "template" && chosen.template
          ? state.templates.find((t) => t.name === chosen.template)
          : undefined;
      curveHolder.appendChild(
        renderCurve({ values: chosen.narrative_values, labels, template }),
      );
    }
    labels.forEach((title, pos) => {
      const value = chosen.narrative_values?.[pos];
      trackList.appendChild(
        el("li", {}, value !== undefined ? `${title} (${value})` : title),
      );
    });
  }

  store.subscribe(render);
  render();
  return store;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  createApp(document.getElementById("app")!);
}
