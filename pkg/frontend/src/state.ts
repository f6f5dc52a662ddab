// Client-side state: which hypotheses the user has picked, how the table
// is sorted, and the debounce/nonce plumbing that keeps displayed bounds
// in sync with the latest selection. Selection is keyed by hypothesis
// index, never by row position, so it survives any re-sort.

export interface Row {
  index: number; // 0-based hypothesis index, stable across sorts
  p: number;
}

export type SortKey = "index" | "p";
export type SortDir = "asc" | "desc";

export function makeRows(pvalues: number[]): Row[] {
  return pvalues.map((p, index) => ({ index, p }));
}

// stable sort into a new array; input is not mutated
export function sortRows(rows: Row[], key: SortKey, dir: SortDir): Row[] {
  const sign = dir === "asc" ? 1 : -1;
  return rows
    .slice()
    .sort((a, b) => sign * (key === "p" ? a.p - b.p : a.index - b.index));
}

export class SelectionModel {
  private picked = new Set<number>();

  has(index: number): boolean {
    return this.picked.has(index);
  }

  toggle(index: number): void {
    if (!this.picked.delete(index)) this.picked.add(index);
  }

  setMany(indices: number[], on: boolean): void {
    for (const i of indices) {
      if (on) this.picked.add(i);
      else this.picked.delete(i);
    }
  }

  clear(): void {
    this.picked.clear();
  }

  // replace the selection with the given indices (e.g. "top k by p-value")
  replace(indices: number[]): void {
    this.picked = new Set(indices);
  }

  get size(): number {
    return this.picked.size;
  }

  asSortedArray(): number[] {
    return [...this.picked].sort((a, b) => a - b);
  }
}

// Debounced single-flight requester. Rapid selection changes collapse into
// one request after `delayMs` of quiet; every request carries a nonce and
// responses whose nonce is no longer current are dropped, so a slow old
// response can never overwrite a newer one.
export class BoundScheduler<T> {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private nonce = 0;

  constructor(
    private fetcher: (set: number[]) => Promise<T>,
    private onResult: (result: T, set: number[]) => void,
    private onError: (err: unknown) => void = () => {},
    private delayMs = 150,
  ) {}

  request(set: number[]): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.fire(set);
    }, this.delayMs);
  }

  // bypass the debounce (used right after a recalibration swap); resolves
  // once the response has been applied or discarded
  flush(set: number[]): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    return this.fire(set);
  }

  // invalidate anything in flight without issuing a new request
  cancel(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.nonce++;
  }

  private fire(set: number[]): Promise<void> {
    const mine = ++this.nonce;
    return this.fetcher(set).then(
      (result) => {
        if (mine === this.nonce) this.onResult(result, set);
      },
      (err) => {
        if (mine === this.nonce) this.onError(err);
      },
    );
  }
}

// Parse pasted/uploaded p-values: one per line or comma/whitespace
// separated. Returns an error message instead of throwing so the UI can
// show it inline.
export function parsePvaluesText(text: string): { values?: number[]; error?: string } {
  const tokens = text.split(/[\s,;]+/).filter((t) => t.length > 0);
  if (tokens.length === 0) return { error: "no values found" };
  const values: number[] = [];
  for (const tok of tokens) {
    const v = Number(tok);
    if (!Number.isFinite(v)) return { error: `not a number: "${tok}"` };
    if (v < 0 || v > 1) return { error: `p-value out of [0, 1]: ${tok}` };
    values.push(v);
  }
  return { values };
}

export function validAlpha(alpha: number): boolean {
  return Number.isFinite(alpha) && alpha > 0 && alpha < 1;
}
