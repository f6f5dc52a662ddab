// Windowed hypothesis table. Only the rows inside (viewport + overscan)
// exist in the DOM, so a table of 100k p-values scrolls like a short one;
// two spacer blocks keep the scrollbar honest.

import { Row, SelectionModel, SortDir, SortKey, sortRows } from "./state.js";

export interface WindowRange {
  start: number; // first rendered row (inclusive)
  end: number;   // last rendered row (exclusive)
  padTop: number;
  padBottom: number;
}

export function windowRange(
  scrollTop: number,
  viewportHeight: number,
  rowHeight: number,
  total: number,
  overscan = 10,
): WindowRange {
  if (total === 0) return { start: 0, end: 0, padTop: 0, padBottom: 0 };
  const first = Math.floor(scrollTop / rowHeight);
  const visible = Math.ceil(viewportHeight / rowHeight) + 1;
  const start = Math.max(0, first - overscan);
  const end = Math.min(total, first + visible + overscan);
  return {
    start,
    end,
    padTop: start * rowHeight,
    padBottom: (total - end) * rowHeight,
  };
}

const ROW_HEIGHT = 24;

export class VirtualTable {
  private rows: Row[] = [];
  private sortKey: SortKey = "index";
  private sortDir: SortDir = "asc";
  private viewport: HTMLElement;
  private padTop: HTMLElement;
  private padBottom: HTMLElement;
  private body: HTMLElement;
  private header: HTMLElement;

  constructor(
    private root: HTMLElement,
    private selection: SelectionModel,
    private onSelectionChange: () => void,
    private onSortChange: (key: SortKey, dir: SortDir) => void = () => {},
  ) {
    const doc = root.ownerDocument;
    this.header = doc.createElement("div");
    this.header.className = "vt-header";
    this.header.innerHTML =
      `<span class="vt-cell vt-sel">✓</span>` +
      `<span class="vt-cell vt-idx" data-sort="index">index</span>` +
      `<span class="vt-cell vt-p" data-sort="p">p-value</span>`;
    this.header.addEventListener("click", (ev) => {
      const target = ev.target as HTMLElement;
      const key = target.getAttribute("data-sort") as SortKey | null;
      if (key) this.sortBy(key);
    });

    this.viewport = doc.createElement("div");
    this.viewport.className = "vt-viewport";
    this.padTop = doc.createElement("div");
    this.padBottom = doc.createElement("div");
    this.body = doc.createElement("div");
    this.viewport.append(this.padTop, this.body, this.padBottom);
    this.viewport.addEventListener("scroll", () => this.render());
    this.body.addEventListener("click", (ev) => {
      const rowEl = (ev.target as HTMLElement).closest("[data-index]");
      if (!rowEl) return;
      const index = Number(rowEl.getAttribute("data-index"));
      this.selection.toggle(index);
      this.render();
      this.onSelectionChange();
    });

    root.append(this.header, this.viewport);
  }

  setRows(rows: Row[]): void {
    this.rows = sortRows(rows, this.sortKey, this.sortDir);
    this.render();
  }

  sortBy(key: SortKey): void {
    if (key === this.sortKey) {
      this.sortDir = this.sortDir === "asc" ? "desc" : "asc";
    } else {
      this.sortKey = key;
      this.sortDir = "asc";
    }
    this.rows = sortRows(this.rows, this.sortKey, this.sortDir);
    this.render();
    this.onSortChange(this.sortKey, this.sortDir);
  }

  get order(): [SortKey, SortDir] {
    return [this.sortKey, this.sortDir];
  }

  render(): void {
    const h = this.viewport.clientHeight || 400;
    const { start, end, padTop, padBottom } = windowRange(
      this.viewport.scrollTop,
      h,
      ROW_HEIGHT,
      this.rows.length,
    );
    this.padTop.style.height = `${padTop}px`;
    this.padBottom.style.height = `${padBottom}px`;

    const doc = this.root.ownerDocument;
    const frag = doc.createDocumentFragment();
    for (let i = start; i < end; i++) {
      const row = this.rows[i]!;
      const el = doc.createElement("div");
      el.className = "vt-row" + (this.selection.has(row.index) ? " vt-picked" : "");
      el.setAttribute("data-index", String(row.index));
      el.style.height = `${ROW_HEIGHT}px`;
      el.innerHTML =
        `<span class="vt-cell vt-sel">${this.selection.has(row.index) ? "●" : "○"}</span>` +
        `<span class="vt-cell vt-idx">${row.index}</span>` +
        `<span class="vt-cell vt-p">${formatP(row.p)}</span>`;
      frag.append(el);
    }
    this.body.replaceChildren(frag);
  }
}


export function formatP(p: number): string {
  if (p === 0) return "0";
  if (p >= 0.0001) return p.toFixed(4);
  return p.toExponential(2);
}
