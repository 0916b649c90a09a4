// Shapes of the service's JSON responses. The UI renders these verbatim and
// never re-computes any math client-side.

export interface TrackInfo {
  track_id: string;
  title: string;
}

export interface AlbumSummary {
  album_id: string;
  n_tracks: number;
  tracks: TrackInfo[];
}

export interface UploadResponse {
  session_id: string;
  dimension: number;
  albums: AlbumSummary[];
}

export interface OrderItem {
  order: number[];
  track_ids: string[];
  template?: string;
  log_likelihood?: number;
  fit_cost?: number;
  narrative_values?: number[];
}

export interface SequenceResponse {
  session_id: string;
  album_id: string;
  method: "direct" | "template";
  seed?: number;
  orders: OrderItem[];
  shortfall?: boolean;
}

export interface TemplateInfo {
  name: string;
  points: [number, number][];
}

export interface TemplatesResponse {
  templates: TemplateInfo[];
}

export type Method = "direct" | "template";
