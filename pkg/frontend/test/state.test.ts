import { afterEach, describe, expect, it, vi } from "vitest";

import {
  BoundScheduler,
  makeRows,
  parsePvaluesText,
  SelectionModel,
  sortRows,
  validAlpha,
} from "../src/state.js";

describe("SelectionModel", () => {
  it("toggles membership", () => {
    const sel = new SelectionModel();
    sel.toggle(4);
    sel.toggle(2);
    expect(sel.has(4)).toBe(true);
    expect(sel.asSortedArray()).toEqual([2, 4]);
    sel.toggle(4);
    expect(sel.has(4)).toBe(false);
    expect(sel.size).toBe(1);
  });

  it("replace and clear", () => {
    const sel = new SelectionModel();
    sel.replace([9, 1, 5]);
    expect(sel.asSortedArray()).toEqual([1, 5, 9]);
    sel.clear();
    expect(sel.size).toBe(0);
    expect(sel.asSortedArray()).toEqual([]);
  });

  it("setMany on and off", () => {
    const sel = new SelectionModel();
    sel.setMany([0, 1, 2, 3], true);
    sel.setMany([1, 3], false);
    expect(sel.asSortedArray()).toEqual([0, 2]);
  });
});

describe("sorting", () => {
  const rows = makeRows([0.5, 0.01, 0.9, 0.01]);

  it("sorts by p ascending, stable on ties", () => {
    const byP = sortRows(rows, "p", "asc");
    expect(byP.map((r) => r.index)).toEqual([1, 3, 0, 2]);
  });

  it("descending and back by index", () => {
    const desc = sortRows(rows, "p", "desc");
    expect(desc.map((r) => r.index)).toEqual([2, 0, 1, 3]);
    const byIdx = sortRows(desc, "index", "asc");
    expect(byIdx.map((r) => r.index)).toEqual([0, 1, 2, 3]);
  });

  it("does not mutate its input", () => {
    const before = rows.map((r) => r.index);
    sortRows(rows, "p", "desc");
    expect(rows.map((r) => r.index)).toEqual(before);
  });

  it("selection keyed by index survives any re-sort", () => {
    const sel = new SelectionModel();
    sel.replace([1, 2]);
    const reordered = sortRows(rows, "p", "desc");
    const pickedPs = reordered.filter((r) => sel.has(r.index)).map((r) => r.p);
    // still hypothesis 1 (p=0.01) and 2 (p=0.9), wherever they moved
    expect(pickedPs.sort()).toEqual([0.01, 0.9]);
  });
});

describe("BoundScheduler", () => {
  afterEach(() => {
    vi.useRealTimers();
  });

  it("debounces rapid requests into the last one", async () => {
    vi.useFakeTimers();
    const calls: number[][] = [];
    const sched = new BoundScheduler<string>(
      async (set) => {
        calls.push(set);
        return "ok";
      },
      () => {},
    );
    sched.request([1]);
    vi.advanceTimersByTime(100);
    sched.request([1, 2]);
    vi.advanceTimersByTime(100);
    sched.request([1, 2, 3]);
    vi.advanceTimersByTime(149);
    expect(calls).toEqual([]);
    vi.advanceTimersByTime(1);
    await vi.runAllTimersAsync();
    expect(calls).toEqual([[1, 2, 3]]);
  });

  it("drops responses superseded by a newer request", async () => {
    const resolvers: ((v: string) => void)[] = [];
    const results: string[] = [];
    const sched = new BoundScheduler<string>(
      () => new Promise<string>((resolve) => resolvers.push(resolve)),
      (r) => results.push(r),
    );
    const first = sched.flush([1]);
    const second = sched.flush([2]);
    // the older response lands after the newer request was issued
    resolvers[0]!("stale");
    resolvers[1]!("fresh");
    await Promise.all([first, second]);
    expect(results).toEqual(["fresh"]);
  });

  it("cancel invalidates in-flight work", async () => {
    const results: string[] = [];
    const sched = new BoundScheduler<string>(
      async () => "late",
      (r) => results.push(r),
    );
    const p = sched.flush([1]);
    sched.cancel();
    await p;
    expect(results).toEqual([]);
  });

  it("routes rejections to onError with the same nonce rule", async () => {
    const errors: unknown[] = [];
    const sched = new BoundScheduler<string>(
      async () => {
        throw new Error("boom");
      },
      () => {
        throw new Error("onResult must not fire");
      },
      (e) => errors.push(e),
    );
    await sched.flush([1]);
    expect(errors).toHaveLength(1);
    expect((errors[0] as Error).message).toBe("boom");
  });
});

describe("parsePvaluesText", () => {
  it("accepts newline, comma and space separated", () => {
    expect(parsePvaluesText("0.1\n0.2,0.3 0.4").values).toEqual([0.1, 0.2, 0.3, 0.4]);
  });

  it("rejects junk and out-of-range values", () => {
    expect(parsePvaluesText("0.1, zebra").error).toMatch(/zebra/);
    expect(parsePvaluesText("0.1, 1.5").error).toMatch(/1\.5/);
    expect(parsePvaluesText("  ").error).toBeDefined();
  });

  it("keeps endpoint values", () => {
    expect(parsePvaluesText("0 1 0.5").values).toEqual([0, 1, 0.5]);
  });
});

describe("validAlpha", () => {
  it("accepts the open interval only", () => {
    expect(validAlpha(0.25)).toBe(true);
    expect(validAlpha(0)).toBe(false);
    expect(validAlpha(1)).toBe(false);
    expect(validAlpha(Number.NaN)).toBe(false);
    expect(validAlpha(1.5)).toBe(false);
  });
});
