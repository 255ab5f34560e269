/** Live trajectory view: top-down XY plot, altitude strip, and a velocity
 * magnitude sparkline, all rendered as SVG polylines from stream frames.
 *
 * The estimated trace is always drawn; the true trace only exists when the
 * session streams debug fields. Polylines split at gap notices, so a hole
 * in the stream is a visible break plus a marker, never an interpolated
 * line.
 */

import type { SessionStore, TracePoint } from "./state.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const W = 320;
const H = 240;
const STRIP_H = 60;
const PAD = 12;

interface Bounds {
  lo: [number, number];
  hi: [number, number];
}

function boundsOf(points: Array<[number, number]>): Bounds {
  const lo: [number, number] = [Infinity, Infinity];
  const hi: [number, number] = [-Infinity, -Infinity];
  for (const [x, y] of points) {
    lo[0] = Math.min(lo[0], x);
    lo[1] = Math.min(lo[1], y);
    hi[0] = Math.max(hi[0], x);
    hi[1] = Math.max(hi[1], y);
  }
  for (const k of [0, 1] as const) {
    if (!isFinite(lo[k])) {
      lo[k] = 0;
      hi[k] = 1;
    }
    if (hi[k] - lo[k] < 1e-9) hi[k] = lo[k] + 1; // degenerate span
  }
  return { lo, hi };
}

function scaler(b: Bounds, w: number, h: number, flipY: boolean) {
  return ([x, y]: [number, number]): string => {
    const sx = PAD + ((x - b.lo[0]) / (b.hi[0] - b.lo[0])) * (w - 2 * PAD);
    const fy = (y - b.lo[1]) / (b.hi[1] - b.lo[1]);
    const sy = flipY ? h - PAD - fy * (h - 2 * PAD) : PAD + fy * (h - 2 * PAD);
    return `${sx.toFixed(2)},${sy.toFixed(2)}`;
  };
}

export class TrajectoryView {
  private readonly doc: Document;
  private readonly counter: HTMLElement;
  private readonly xy: SVGSVGElement;
  private readonly alt: SVGSVGElement;
  private readonly vel: SVGSVGElement;
  private reference: Array<[number, number]> = [];

  constructor(readonly el: HTMLElement) {
    this.doc = el.ownerDocument;
    el.classList.add("trajectory-view");
    this.counter = this.doc.createElement("div");
    this.counter.className = "tick-counter";
    this.counter.textContent = "tick 0";
    el.appendChild(this.counter);
    this.xy = this.svg("xy-plot", W, H);
    this.alt = this.svg("altitude-strip", W, STRIP_H);
    this.vel = this.svg("velocity-sparkline", W, STRIP_H);
  }

  private svg(cls: string, w: number, h: number): SVGSVGElement {
    const svg = this.doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    svg.setAttribute("class", cls);
    svg.setAttribute("viewBox", `0 0 ${w} ${h}`);
    svg.setAttribute("width", String(w));
    svg.setAttribute("height", String(h));
    this.el.appendChild(svg);
    return svg;
  }

  /** Overlay polyline (world XY), e.g. a mission reference path. */
  setReference(points: Array<[number, number]>): void {
    this.reference = points.map(([x, y]) => [x, y]);
  }

  render(store: SessionStore): void {
    this.counter.textContent = `tick ${store.tick}`;
    this.renderXY(store);
    this.renderStrip(this.alt, store, (pt) => pt.p[2], "alt");
    this.renderStrip(
      this.vel,
      store,
      (pt) => Math.hypot(pt.v[0], pt.v[1], pt.v[2]),
      "vel",
    );
  }

  private clear(svg: SVGSVGElement): void {
    while (svg.firstChild) svg.removeChild(svg.firstChild);
  }

  private polyline(svg: SVGSVGElement, cls: string, points: string[]): void {
    const line = this.doc.createElementNS(SVG_NS, "polyline");
    line.setAttribute("class", cls);
    line.setAttribute("points", points.join(" "));
    svg.appendChild(line);
  }

  private renderXY(store: SessionStore): void {
    this.clear(this.xy);
    const estSegs = store.traceSegments("est");
    const truSegs = store.hasTrueTrace ? store.traceSegments("true") : [];
    const all: Array<[number, number]> = [...this.reference];
    for (const seg of [...estSegs, ...truSegs]) {
      for (const pt of seg) all.push([pt.p[0], pt.p[1]]);
    }
    const to = scaler(boundsOf(all), W, H, true);
    if (this.reference.length > 1) {
      this.polyline(this.xy, "ref-trace", this.reference.map(to));
    }
    for (const seg of truSegs) {
      this.polyline(this.xy, "true-trace", seg.map((pt) => to([pt.p[0], pt.p[1]])));
    }
    for (const seg of estSegs) {
      this.polyline(this.xy, "est-trace", seg.map((pt) => to([pt.p[0], pt.p[1]])));
    }
    // a dot where data resumed after each gap
    for (let i = 1; i < estSegs.length; i++) {
      const first = estSegs[i][0];
      const [x, y] = to([first.p[0], first.p[1]]).split(",");
      const mark = this.doc.createElementNS(SVG_NS, "circle");
      mark.setAttribute("class", "gap-marker");
      mark.setAttribute("cx", x);
      mark.setAttribute("cy", y);
      mark.setAttribute("r", "3");
      mark.setAttribute("data-from", String(store.gaps[i - 1]?.from ?? ""));
      mark.setAttribute("data-to", String(store.gaps[i - 1]?.to ?? ""));
      this.xy.appendChild(mark);
    }
  }

  private renderStrip(
    svg: SVGSVGElement,
    store: SessionStore,
    value: (pt: TracePoint) => number,
    cls: string,
  ): void {
    this.clear(svg);
    const segs = store.traceSegments("est");
    const all: Array<[number, number]> = [];
    for (const seg of segs) for (const pt of seg) all.push([pt.tick, value(pt)]);
    if (all.length === 0 && store.gaps.length === 0) return;
    const b = boundsOf(all);
    b.lo[1] = Math.min(b.lo[1], 0); // keep the zero line in frame
    const to = scaler(b, W, STRIP_H, true);
    for (const seg of segs) {
      this.polyline(svg, `${cls}-trace`, seg.map((pt) => to([pt.tick, value(pt)])));
    }
    for (const gap of store.gaps) {
      const [x] = to([gap.from, 0]).split(",");
      const mark = this.doc.createElementNS(SVG_NS, "line");
      mark.setAttribute("class", "gap-marker");
      mark.setAttribute("x1", x);
      mark.setAttribute("x2", x);
      mark.setAttribute("y1", "0");
      mark.setAttribute("y2", String(STRIP_H));
      mark.setAttribute("data-from", String(gap.from));
      mark.setAttribute("data-to", String(gap.to));
      svg.appendChild(mark);
    }
  }
}
