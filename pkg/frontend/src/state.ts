// Central view state. Mutations go through methods that enforce the two
// invariants that matter here: an order whose length does not match its
// album is never stored, and a sequence response is applied only if it
// belongs to the newest request for that album (older in-flight responses
// are discarded by token).

import type { AlbumSummary, Method, OrderItem, SequenceResponse, TemplateInfo } from "./types.js";

export interface SequenceView {
  method: Method;
  orders: OrderItem[];
  shortfall: boolean;
}

export interface ViewState {
  sessionId: string | null;
  dimension: number | null;
  albums: AlbumSummary[];
  selectedAlbumId: string | null;
  method: Method;
  templateName: string | null; // null = fit every template
  n: number;
  seed: number;
  templates: TemplateInfo[];
  results: SequenceView | null;
  highlighted: number; // index into results.orders
  pendingAlbums: string[]; // albums with a sequence request in flight
  error: string | null;
}

type Listener = (state: ViewState) => void;

export class Store {
  private state: ViewState = {
    sessionId: null,
    dimension: null,
    albums: [],
    selectedAlbumId: null,
    method: "template",
    templateName: null,
    n: 3,
    seed: 0,
    templates: [],
    results: null,
    highlighted: 0,
    pendingAlbums: [],
    error: null,
  };

  private listeners: Listener[] = [];
  private requestCounter = 0;
  private latestToken = new Map<string, number>(); // album_id -> newest token

  get(): ViewState {
    return this.state;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private notify(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  patch(partial: Partial<ViewState>): void {
    this.state = { ...this.state, ...partial };
    this.notify();
  }

  setSession(sessionId: string, dimension: number, albums: AlbumSummary[]): void {
    this.patch({
      sessionId,
      dimension,
      albums,
      selectedAlbumId: albums.length ? albums[0].album_id : null,
      results: null,
      highlighted: 0,
      error: null,
    });
  }

  selectAlbum(albumId: string): void {
    if (albumId === this.state.selectedAlbumId) return;
    this.patch({ selectedAlbumId: albumId, results: null, highlighted: 0, error: null });
  }

  selectedAlbum(): AlbumSummary | null {
    return this.state.albums.find((a) => a.album_id === this.state.selectedAlbumId) ?? null;
  }

  isPending(albumId: string | null): boolean {
    return albumId !== null && this.state.pendingAlbums.includes(albumId);
  }

  /** Register a new sequence request; the returned token wins over all older ones. */
  beginSequence(albumId: string): number {
    const token = ++this.requestCounter;
    this.latestToken.set(albumId, token);
    const pendingAlbums = this.state.pendingAlbums.includes(albumId)
      ? this.state.pendingAlbums
      : [...this.state.pendingAlbums, albumId];
    this.patch({ pendingAlbums, error: null });
    return token;
  }

  isCurrent(albumId: string, token: number): boolean {
    return this.latestToken.get(albumId) === token;
  }

  private clearPending(albumId: string): string[] {
    return this.state.pendingAlbums.filter((a) => a !== albumId);
  }

  /** Apply a sequence response; stale tokens and foreign albums are dropped. */
  applySequenceResult(albumId: string, token: number, response: SequenceResponse): boolean {
    if (!this.isCurrent(albumId, token)) return false; // superseded: the newer request owns the state
    if (albumId !== this.state.selectedAlbumId) {
      this.patch({ pendingAlbums: this.clearPending(albumId) });
      return false;
    }
    const album = this.selectedAlbum();
    const expected = album ? album.n_tracks : -1;
    const orders = response.orders.filter((o) => o.order.length === expected);
    this.patch({
      results: {
        method: response.method,
        orders,
        shortfall: Boolean(response.shortfall),
      },
      highlighted: 0,
      pendingAlbums: this.clearPending(albumId),
      error: null,
    });
    return true;
  }

  failSequence(albumId: string, token: number, message: string): boolean {
    if (!this.isCurrent(albumId, token)) return false;
    this.patch({ pendingAlbums: this.clearPending(albumId), error: message });
    return true;
  }

  highlight(index: number): void {
    const count = this.state.results?.orders.length ?? 0;
    if (index >= 0 && index < count) this.patch({ highlighted: index });
  }

  highlightedOrder(): OrderItem | null {
    return this.state.results?.orders[this.state.highlighted] ?? null;
  }
}
