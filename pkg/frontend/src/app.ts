// Explorer controller: upload p-values once, calibrate once per alpha, then
// select hypotheses freely — the certified bounds for the current selection
// and the top-k sweep always come straight from the service. The app builds
// its own DOM under the mount node, so the page and the tests exercise the
// same markup.

import {
  ApiClient,
  ApiError,
  BoundResult,
  CalibrationParams,
  CalibrationRecord,
} from "./api.js";
import {
  BoundScheduler,
  makeRows,
  parsePvaluesText,
  Row,
  SelectionModel,
  validAlpha,
} from "./state.js";
import { CurveChart } from "./chart.js";
import { VirtualTable } from "./table.js";

const CURVE_MAX_POINTS = 5000;

export interface ActiveCalibration {
  cid: string;
  record: CalibrationRecord;
}

const PAGE = `
<div class="pane pane-left">
  <section class="card">
    <h2>1 · Data</h2>
    <textarea id="pv-text" rows="4"
      placeholder="p-values: one per line, or comma/space separated"></textarea>
    <div class="controls">
      <input type="file" id="pv-file" accept=".csv,.txt">
      <button id="pv-load">Load</button>
    </div>
    <div id="session-info" class="muted"></div>
  </section>

  <section class="card">
    <h2>2 · Calibrate</h2>
    <label>method
      <select id="cal-method">
        <option value="simes-fixed">fixed thresholds (Simes)</option>
        <option value="mc-known" selected>Monte Carlo, known dependence</option>
      </select>
    </label>
    <label>covariance <input id="cal-cov" value="indep" size="10"
      title='"indep", "equi:RHO" or "toeplitz:THETA"'></label>
    <label>template
      <select id="cal-template">
        <option value="linear" selected>linear</option>
        <option value="balanced">balanced</option>
      </select>
    </label>
    <label>depth K <input id="cal-K" type="number" min="1" placeholder="m"></label>
    <label>draws B <input id="cal-B" type="number" min="1" value="1000"></label>
    <label>seed <input id="cal-seed" type="number" value="0"></label>
    <label><input id="cal-stepdown" type="checkbox" checked> step-down</label>
    <div class="controls">
      <button id="cal-run" disabled>Calibrate</button>
      <span id="cal-state" class="muted"></span>
    </div>
  </section>

  <section class="card">
    <h2>3 · Target level α</h2>
    <div class="alpha-row">
      <input id="alpha-slider" type="range" min="0.01" max="0.50"
             step="0.01" value="0.25">
      <input id="alpha-num" type="number" min="0.01" max="0.99"
             step="0.01" value="0.25">
    </div>
    <div class="muted">releasing the slider recalibrates at the new level</div>
  </section>

  <section class="card" id="bound-card">
    <h2>Certified for your selection</h2>
    <div class="bound-grid">
      <div><span class="big" id="bound-size">0</span><br>selected</div>
      <div><span class="big" id="bound-vbar">–</span><br>false positives ≤</div>
      <div><span class="big" id="bound-sbar">–</span><br>true discoveries ≥</div>
    </div>
    <div class="muted" id="bound-detail"></div>
    <div class="controls">
      <label>select top <input id="topk-num" type="number" min="0" value="0"
        title="replace selection with the k smallest p-values"></label>
      <button id="topk-apply">apply</button>
      <button id="sel-clear">clear</button>
    </div>
  </section>

  <div id="status" role="alert"></div>
</div>

<div class="pane pane-right">
  <section class="card">
    <h2>Hypotheses</h2>
    <div id="table-mount"></div>
  </section>
  <section class="card">
    <h2>Guaranteed discoveries among the k smallest</h2>
    <canvas id="curve-canvas"></canvas>
  </section>
</div>
`;

export class ExplorerApp {
  rows: Row[] = [];
  selection = new SelectionModel();
  sid: string | null = null;
  active: ActiveCalibration | null = null;
  lastBound: BoundResult | null = null;
  curve: number[] = [];

  private table: VirtualTable;
  private chart: CurveChart;
  private scheduler: BoundScheduler<BoundResult>;
  private busy = false;

  constructor(private root: HTMLElement, private api: ApiClient) {
    root.classList.add("explorer");
    root.innerHTML = PAGE;

    this.table = new VirtualTable(
      this.el("table-mount"),
      this.selection,
      () => this.onSelectionChanged(),
    );
    this.chart = new CurveChart(this.el<HTMLCanvasElement>("curve-canvas"));
    this.scheduler = new BoundScheduler<BoundResult>(
      (set) => this.fetchBound(set),
      (result) => this.renderBound(result),
      (err) => this.showError(err),
    );

    this.el("pv-load").addEventListener("click", () => {
      void this.loadFromControls();
    });
    this.el("cal-run").addEventListener("click", () => {
      void this.recalibrate(this.currentAlpha());
    });

    const slider = this.el<HTMLInputElement>("alpha-slider");
    const num = this.el<HTMLInputElement>("alpha-num");
    slider.addEventListener("input", () => {
      num.value = slider.value;
    });
    slider.addEventListener("change", () => {
      void this.recalibrate(Number(slider.value));
    });
    num.addEventListener("change", () => {
      const a = Number(num.value);
      if (validAlpha(a)) slider.value = num.value;
      void this.recalibrate(a);
    });

    this.el("sel-clear").addEventListener("click", () => {
      this.selection.clear();
      this.table.render();
      this.onSelectionChanged();
    });
    this.el("topk-apply").addEventListener("click", () => {
      this.selectTopK(Number(this.el<HTMLInputElement>("topk-num").value));
    });
  }

  el<T extends HTMLElement = HTMLElement>(id: string): T {
    const found = this.root.querySelector(`#${id}`);
    if (!found) throw new Error(`missing element #${id}`);
    return found as T;
  }

  // ---- data loading -------------------------------------------------

  private async loadFromControls(): Promise<void> {
    const fileInput = this.el<HTMLInputElement>("pv-file");
    const file = fileInput.files && fileInput.files[0];
    const text = file
      ? await file.text()
      : this.el<HTMLTextAreaElement>("pv-text").value;
    await this.loadPvaluesText(text);
  }

  async loadPvaluesText(text: string): Promise<void> {
    const parsed = parsePvaluesText(text);
    if (parsed.error || !parsed.values) {
      this.showError(parsed.error ?? "no values");
      return;
    }
    this.setStatus("");
    try {
      const info = await this.api.createSession(parsed.values);
      this.sid = info.session_id;
      this.rows = makeRows(parsed.values);
      this.selection.clear();
      this.active = null;
      this.curve = [];
      this.scheduler.cancel();
      this.table.setRows(this.rows);
      this.chart.draw([]);
      this.renderBound(null);
      this.el("session-info").textContent =
        `session ${info.session_id} · m = ${info.m}`;
      this.el<HTMLButtonElement>("cal-run").disabled = false;
      this.el("cal-state").textContent = "not calibrated yet";
    } catch (err) {
      this.showError(err);
    }
  }

  // ---- calibration --------------------------------------------------

  currentAlpha(): number {
    return Number(this.el<HTMLInputElement>("alpha-num").value);
  }

  calibrationParams(alpha: number): CalibrationParams {
    const kRaw = this.el<HTMLInputElement>("cal-K").value;
    const params: CalibrationParams = {
      method: this.el<HTMLSelectElement>("cal-method").value as
        CalibrationParams["method"],
      template: this.el<HTMLSelectElement>("cal-template").value as
        "linear" | "balanced",
      alpha,
      B: Number(this.el<HTMLInputElement>("cal-B").value),
      seed: Number(this.el<HTMLInputElement>("cal-seed").value),
      cov: this.el<HTMLInputElement>("cal-cov").value.trim() || "indep",
      step_down: this.el<HTMLInputElement>("cal-stepdown").checked,
    };
    if (kRaw !== "") params.K = Number(kRaw);
    return params;
  }

  async recalibrate(alpha: number): Promise<void> {
    if (!this.sid) return;
    if (!validAlpha(alpha)) {
      this.showError(`alpha must be strictly between 0 and 1 (got ${alpha})`);
      return; // previous calibration stays active
    }
    if (this.busy) return;
    this.busy = true;
    this.setStatus("");
    const stateEl = this.el("cal-state");
    stateEl.textContent = "calibrating…";
    try {
      const params = this.calibrationParams(alpha);
      const done = await this.api.calibrateAndWait(this.sid, params);
      const record = done.calibration!;
      this.active = { cid: done.calibration_id, record };
      stateEl.textContent =
        `${done.calibration_id}: ${record.mode}, λ = ${record.lambda.toPrecision(4)}, ` +
        `α = ${record.alpha}, B = ${record.B}`;
      await this.refreshCurve();
      await this.flushBound();
    } catch (err) {
      stateEl.textContent = this.active
        ? `kept ${this.active.cid} (last good)`
        : "not calibrated yet";
      this.showError(err);
    } finally {
      this.busy = false;
    }
  }

  // ---- bounds -------------------------------------------------------

  private fetchBound(set: number[]): Promise<BoundResult> {
    if (!this.sid || !this.active) return Promise.reject(new Error("no calibration"));
    return this.api.boundForSet(this.sid, this.active.cid, set);
  }

  onSelectionChanged(): void {
    this.el("bound-size").textContent = String(this.selection.size);
    if (!this.sid || !this.active) return;
    this.scheduler.request(this.selection.asSortedArray());
  }

  flushBound(): Promise<void> {
    this.el("bound-size").textContent = String(this.selection.size);
    return this.scheduler.flush(this.selection.asSortedArray());
  }

  async refreshCurve(): Promise<void> {
    if (!this.sid || !this.active) return;
    const topK = Math.min(this.rows.length, CURVE_MAX_POINTS);
    if (topK === 0) return;
    const res = await this.api.boundTopK(this.sid, this.active.cid, topK);
    this.curve = res.curve ?? [];
    this.chart.draw(this.curve, this.selection.size || null);
  }

  renderBound(b: BoundResult | null): void {
    this.lastBound = b;
    this.el("bound-vbar").textContent = b ? String(b.vbar) : "–";
    this.el("bound-sbar").textContent = b ? String(b.sbar) : "–";
    this.el("bound-detail").textContent = b
      ? `tightest at family depth k = ${b.k_argmin}`
      : "calibrate to see bounds";
    if (b) this.chart.draw(this.curve, this.selection.size || null);
  }

  selectTopK(k: number): void {
    if (!Number.isInteger(k) || k < 0 || k > this.rows.length) {
      this.showError(`top-k must be an integer in [0, ${this.rows.length}]`);
      return;
    }
    const byP = this.rows
      .slice()
      .sort((a, b) => a.p - b.p)
      .slice(0, k)
      .map((r) => r.index);
    this.selection.replace(byP);
    this.table.render();
    this.onSelectionChanged();
  }

  // ---- status -------------------------------------------------------

  private setStatus(text: string): void {
    this.el("status").textContent = text;
  }

  showError(err: unknown): void {
    const msg =
      err instanceof ApiError
        ? `service: ${err.message}`
        : err instanceof Error
          ? err.message
          : String(err);
    this.setStatus(msg);
  }
}
