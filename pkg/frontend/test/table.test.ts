// @vitest-environment jsdom
import { describe, expect, it } from "vitest";

import { formatP, VirtualTable, windowRange } from "../src/table.js";
import { makeRows, SelectionModel } from "../src/state.js";

describe("windowRange", () => {
  it("starts at the top with overscan below only", () => {
    const w = windowRange(0, 400, 24, 100_000, 10);
    expect(w.start).toBe(0);
    expect(w.end).toBe(Math.ceil(400 / 24) + 1 + 10);
    expect(w.padTop).toBe(0);
    expect(w.padBottom).toBe((100_000 - w.end) * 24);
  });

  it("window size stays constant deep into a huge table", () => {
    const a = windowRange(50 * 24, 400, 24, 100_000);
    const b = windowRange(70_000 * 24, 400, 24, 100_000);
    expect(a.end - a.start).toBe(b.end - b.start);
    expect(b.padTop).toBe((70_000 - 10) * 24);
  });

  it("clamps at the bottom", () => {
    const total = 1000;
    const w = windowRange(999 * 24, 400, 24, total);
    expect(w.end).toBe(total);
    expect(w.padBottom).toBe(0);
    expect(w.start).toBeLessThan(total);
  });

  it("handles tables smaller than the viewport and empty tables", () => {
    const w = windowRange(0, 400, 24, 5);
    expect(w).toMatchObject({ start: 0, end: 5, padTop: 0, padBottom: 0 });
    expect(windowRange(0, 400, 24, 0)).toMatchObject({ start: 0, end: 0 });
  });

  it("spacer heights always add up to the full scroll height", () => {
    for (const scroll of [0, 1234, 9999 * 24]) {
      const w = windowRange(scroll, 400, 24, 10_000);
      expect(w.padTop + (w.end - w.start) * 24 + w.padBottom).toBe(10_000 * 24);
    }
  });
});

describe("formatP", () => {
  it("fixed notation in the readable range, scientific below", () => {
    expect(formatP(0.25)).toBe("0.2500");
    expect(formatP(0.0001)).toBe("0.0001");
    expect(formatP(0.00003)).toBe("3.00e-5");
    expect(formatP(0)).toBe("0");
  });
});

function mountTable(pvalues: number[]) {
  const root = document.createElement("div");
  document.body.append(root);
  const selection = new SelectionModel();
  let changes = 0;
  const table = new VirtualTable(root, selection, () => {
    changes++;
  });
  table.setRows(makeRows(pvalues));
  return {
    root,
    selection,
    table,
    changeCount: () => changes,
    renderedIndices: () =>
      [...root.querySelectorAll(".vt-row")].map((el) =>
        Number(el.getAttribute("data-index")),
      ),
  };
}

describe("VirtualTable", () => {
  it("renders only a window of a large table", () => {
    const m = 100_000;
    const t = mountTable(Array.from({ length: m }, (_, i) => (i + 1) / (m + 1)));
    const rendered = t.renderedIndices();
    expect(rendered.length).toBeGreaterThan(0);
    expect(rendered.length).toBeLessThan(60); // viewport fallback 400px / 24px + overscan
    expect(rendered[0]).toBe(0);
  });

  it("click toggles selection and notifies", () => {
    const t = mountTable([0.5, 0.02, 0.9]);
    const row = t.root.querySelector('[data-index="1"]')!;
    row.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    expect(t.selection.has(1)).toBe(true);
    expect(t.changeCount()).toBe(1);
    expect(t.root.querySelector('[data-index="1"]')!.className).toContain("vt-picked");
    t.root.querySelector('[data-index="1"]')!
      .dispatchEvent(new MouseEvent("click", { bubbles: true }));
    expect(t.selection.has(1)).toBe(false);
    expect(t.changeCount()).toBe(2);
  });

  it("selection marks follow hypotheses across re-sorts", () => {
    const t = mountTable([0.5, 0.02, 0.9, 0.07]);
    t.root.querySelector('[data-index="1"]')!
      .dispatchEvent(new MouseEvent("click", { bubbles: true }));
    t.root.querySelector('[data-index="2"]')!
      .dispatchEvent(new MouseEvent("click", { bubbles: true }));

    t.table.sortBy("p"); // ascending: 1 (0.02), 3 (0.07), 0 (0.5), 2 (0.9)
    expect(t.renderedIndices()).toEqual([1, 3, 0, 2]);
    const picked = [...t.root.querySelectorAll(".vt-row.vt-picked")].map((el) =>
      Number(el.getAttribute("data-index")),
    );
    expect(picked.sort()).toEqual([1, 2]);
    expect(t.selection.asSortedArray()).toEqual([1, 2]); // unchanged by sorting

    t.table.sortBy("p"); // flip to descending
    expect(t.renderedIndices()).toEqual([2, 0, 3, 1]);
    expect(t.selection.asSortedArray()).toEqual([1, 2]);
  });

  it("header click sorts and toggles direction", () => {
    const t = mountTable([0.5, 0.02, 0.9]);
    const header = t.root.querySelector('[data-sort="p"]')!;
    header.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    expect(t.table.order).toEqual(["p", "asc"]);
    header.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    expect(t.table.order).toEqual(["p", "desc"]);
  });
});
