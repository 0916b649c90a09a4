// Narrative-arc chart rendered as a plain SVG: one point per track across
// proposed positions, optionally overlaid with the target template polyline.
// Values come straight from server JSON; the only arithmetic here is axis
// scaling.

import type { TemplateInfo } from "./types.js";

export interface ChartGeometry {
  width: number;
  height: number;
  padding: number;
}

export const DEFAULT_GEOMETRY: ChartGeometry = { width: 560, height: 260, padding: 36 };

export interface PointXY {
  x: number;
  y: number;
}

/** Map position index i of m onto the template's 0..1 axis (midpoints). */
export function positionFraction(i: number, m: number): number {
  return m === 1 ? 0.5 : (i + 0.5) / m;
}

export function scalePoints(
  values: number[],
  lo: number,
  hi: number,
  geom: ChartGeometry = DEFAULT_GEOMETRY,
): PointXY[] {
  const span = hi - lo || 1;
  const innerW = geom.width - 2 * geom.padding;
  const innerH = geom.height - 2 * geom.padding;
  return values.map((v, i) => ({
    x: geom.padding + positionFraction(i, values.length) * innerW,
    y: geom.padding + (1 - (v - lo) / span) * innerH,
  }));
}

export function valueRange(values: number[], overlay?: [number, number][]): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (overlay && overlay.length) {
    // template values live in [0,1]; widen so both fit on one axis
    for (const [, y] of overlay) {
      lo = Math.min(lo, y);
      hi = Math.max(hi, y);
    }
  }
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return [lo, hi];
}

function svgEl<K extends keyof SVGElementTagNameMap>(tag: K): SVGElementTagNameMap[K] {
  return document.createElementNS("http://www.w3.org/2000/svg", tag);
}

export interface CurveSpec {
  values: number[]; // narrative value per proposed position
  labels: string[]; // track title per proposed position
  template?: TemplateInfo; // overlay, template method only
}

export function renderCurve(spec: CurveSpec, geom: ChartGeometry = DEFAULT_GEOMETRY): SVGSVGElement {
  const svg = svgEl("svg");
  svg.setAttribute("viewBox", `0 0 ${geom.width} ${geom.height}`);
  svg.setAttribute("class", "curve-chart");
  svg.setAttribute("role", "img");

  const [lo, hi] = valueRange(spec.values, spec.template?.points);

  const axis = svgEl("line");
  axis.setAttribute("x1", String(geom.padding));
  axis.setAttribute("y1", String(geom.height - geom.padding));
  axis.setAttribute("x2", String(geom.width - geom.padding));
  axis.setAttribute("y2", String(geom.height - geom.padding));
  axis.setAttribute("class", "axis");
  svg.appendChild(axis);

  if (spec.template) {
    const innerW = geom.width - 2 * geom.padding;
    const innerH = geom.height - 2 * geom.padding;
    const span = hi - lo || 1;
    const pts = spec.template.points
      .map(([x, y]) => {
        const px = geom.padding + x * innerW;
        const py = geom.padding + (1 - (y - lo) / span) * innerH;
        return `${px},${py}`;
      })
      .join(" ");
    const overlay = svgEl("polyline");
    overlay.setAttribute("points", pts);
    overlay.setAttribute("class", "template-overlay");
    overlay.setAttribute("fill", "none");
    svg.appendChild(overlay);
  }

  const points = scalePoints(spec.values, lo, hi, geom);
  if (points.length > 1) {
    const line = svgEl("polyline");
    line.setAttribute("points", points.map((p) => `${p.x},${p.y}`).join(" "));
    line.setAttribute("class", "narrative-line");
    line.setAttribute("fill", "none");
    svg.appendChild(line);
  }
  points.forEach((p, i) => {
    const dot = svgEl("circle");
    dot.setAttribute("cx", String(p.x));
    dot.setAttribute("cy", String(p.y));
    dot.setAttribute("r", "5");
    dot.setAttribute("class", "narrative-point");
    const tip = svgEl("title");
    tip.textContent = `${spec.labels[i]}: ${spec.values[i]}`;
    dot.appendChild(tip);
    svg.appendChild(dot);
  });
  return svg;
}
