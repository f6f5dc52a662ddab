// Typed client for the posthoc HTTP service. Every number shown in the UI
// comes back from these calls verbatim — nothing statistical is computed
// in the browser.

export interface SessionInfo {
  session_id: string;
  m: number;
  n: number | null;
}

export interface CalibrationRecord {
  lambda: number;
  alpha: number;
  B: number;
  mode: string;
  m: number;
  thresholds: number[];
  set_used: number[];
  seed: number | null;
  psi: (number | null)[] | null;
  history: [number, number][];
}

export interface CalibrationResult {
  calibration_id: string;
  status: "done" | "pending" | "error";
  calibration?: CalibrationRecord;
  poll?: string;
  detail?: string;
}

export interface CalibrationParams {
  method: "simes-fixed" | "mc-known" | "sign-flip";
  template?: "linear" | "balanced";
  K?: number;
  alpha?: number;
  B?: number;
  seed?: number;
  sided?: "one" | "two";
  cov?: string;
  step_down?: boolean;
}

export interface BoundResult {
  vbar: number;
  sbar: number;
  k_argmin: number;
  curve?: number[];
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

async function parseError(res: Response): Promise<never> {
  let detail = `${res.status} ${res.statusText}`;
  try {
    const body = await res.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(res.status, detail);
}

export class ApiClient {
  // base "" means same-origin (the service mounts the UI under /ui)
  constructor(private base: string = "") {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await fetch(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) await parseError(res);
    return (await res.json()) as T;
  }

  private async get<T>(path: string): Promise<T> {
    const res = await fetch(this.base + path);
    if (!res.ok) await parseError(res);
    return (await res.json()) as T;
  }

  createSession(pvalues: number[]): Promise<SessionInfo> {
    return this.post<SessionInfo>("/sessions", { pvalues });
  }

  createSessionFromMatrix(data: number[][], sided = "two"): Promise<SessionInfo> {
    return this.post<SessionInfo>("/sessions", { data, sided });
  }

  async calibrate(sid: string, params: CalibrationParams): Promise<CalibrationResult> {
    return this.post<CalibrationResult>(`/sessions/${sid}/calibrations`, params);
  }

  pollCalibration(sid: string, cid: string): Promise<CalibrationResult> {
    return this.get<CalibrationResult>(`/sessions/${sid}/calibrations/${cid}`);
  }

  // calibrate and, if the service went async (202 + pending), poll to
  // completion; rejects if the worker reports an error
  async calibrateAndWait(sid: string, params: CalibrationParams,
                         pollMs = 250, maxPolls = 400): Promise<CalibrationResult> {
    let result = await this.calibrate(sid, params);
    let polls = 0;
    while (result.status === "pending") {
      if (++polls > maxPolls) throw new ApiError(0, "calibration timed out");
      await new Promise((r) => setTimeout(r, pollMs));
      result = await this.pollCalibration(sid, result.calibration_id);
      if (result.status === "error") {
        throw new ApiError(0, result.detail ?? "calibration failed");
      }
    }
    return result;
  }

  boundForSet(sid: string, cid: string, set: number[]): Promise<BoundResult> {
    return this.post<BoundResult>(`/sessions/${sid}/bound`, {
      calibration_id: cid,
      set,
    });
  }

  boundTopK(sid: string, cid: string, topK: number): Promise<BoundResult> {
    return this.post<BoundResult>(`/sessions/${sid}/bound`, {
      calibration_id: cid,
      top_k: topK,
    });
  }
}
