/** Action-grid panel: an n x n cell view with the active gesture quartile
 * outlined and the server-chosen speed cell highlighted. Cell and quartile
 * come straight from stream frames; speeds shown are the session config.
 */

import type { Quartile, TickFrame } from "./protocol.js";

export interface GridOptions {
  n?: number;
  /** Row-major speed labels, length n*n; display only. */
  speeds?: readonly number[];
}

/** (row, col) cells of one quartile block in an n x n grid, n even. */
export function quartileCells(n: number, quartile: Quartile): Array<[number, number]> {
  const half = n / 2;
  const r0 = quartile === "TL" || quartile === "TR" ? 0 : half;
  const c0 = quartile === "TL" || quartile === "BL" ? 0 : half;
  const cells: Array<[number, number]> = [];
  for (let r = r0; r < r0 + half; r++) {
    for (let c = c0; c < c0 + half; c++) cells.push([r, c]);
  }
  return cells;
}

export class ActionGridView {
  readonly n: number;
  private readonly cells = new Map<string, HTMLElement>();

  constructor(
    readonly el: HTMLElement,
    opts: GridOptions = {},
  ) {
    this.n = opts.n ?? 4;
    if (this.n < 2 || this.n % 2 !== 0) {
      throw new Error(`grid side must be even and >= 2, got ${this.n}`);
    }
    el.classList.add("action-grid");
    el.style.setProperty("--grid-n", String(this.n));
    for (let r = 0; r < this.n; r++) {
      for (let c = 0; c < this.n; c++) {
        const cell = el.ownerDocument.createElement("div");
        cell.className = "cell";
        cell.dataset.row = String(r);
        cell.dataset.col = String(c);
        const speed = opts.speeds?.[r * this.n + c];
        if (speed !== undefined) cell.textContent = String(speed);
        el.appendChild(cell);
        this.cells.set(`${r},${c}`, cell);
      }
    }
  }

  private cellAt(r: number, c: number): HTMLElement {
    const cell = this.cells.get(`${r},${c}`);
    if (!cell) throw new Error(`no cell (${r},${c}) in a ${this.n}x${this.n} grid`);
    return cell;
  }

  /** Reflect the latest tick frame; frames without a command clear nothing,
   * so a rejected gesture (which produces no frame) leaves the view as is.
   */
  render(frame: TickFrame | null): void {
    if (!frame || !frame.command) return;
    for (const cell of this.cells.values()) {
      cell.classList.remove("selected", "in-quartile");
    }
    if (frame.quartile) {
      this.el.dataset.quartile = frame.quartile;
      for (const [r, c] of quartileCells(this.n, frame.quartile)) {
        this.cellAt(r, c).classList.add("in-quartile");
      }
    }
    if (frame.cell) {
      this.cellAt(frame.cell[0], frame.cell[1]).classList.add("selected");
    }
  }
}
