/** Pure view-state transitions for the workbench.
 *
 * All functions return a new state; the DOM layer just renders whatever the
 * current state says. Async results carry the request generation that was
 * current when the fetch started, and apply* drops anything stale — so a slow
 * response for an old theta can never overwrite a newer one.
 */
import type { ClusterInfo, DatasetInfo, QualityInfo, SweepPoint } from "./api.js";

export const CLUSTERS_PER_PAGE = 50;

export interface ViewState {
  datasets: DatasetInfo[];
  dataset: string | null;
  theta: number;
  savedTheta: number | null;
  sweep: SweepPoint[];
  sweepTimestamped: boolean;
  clusters: ClusterInfo[];
  quality: QualityInfo | null;
  page: number;
  pending: boolean;
  requestGen: number;
  error: string | null;
}

export function initialState(): ViewState {
  return {
    datasets: [],
    dataset: null,
    theta: 0.97,
    savedTheta: null,
    sweep: [],
    sweepTimestamped: false,
    clusters: [],
    quality: null,
    page: 0,
    pending: false,
    requestGen: 0,
    error: null,
  };
}

export function withDatasets(s: ViewState, datasets: DatasetInfo[]): ViewState {
  return { ...s, datasets };
}

/** Switching datasets resets theta to the saved value (or the default),
 *  clears per-dataset results, and invalidates in-flight requests. */
export function selectDataset(s: ViewState, name: string): ViewState {
  const info = s.datasets.find((d) => d.name === name);
  if (!info) {
    return { ...s, error: `unknown dataset ${name}` };
  }
  return {
    ...s,
    dataset: name,
    theta: info.saved_theta ?? info.default_theta,
    savedTheta: info.saved_theta,
    sweep: [],
    sweepTimestamped: info.timestamped,
    clusters: [],
    quality: null,
    page: 0,
    error: null,
    requestGen: s.requestGen + 1,
  };
}

export function setTheta(s: ViewState, theta: number): ViewState {
  const clamped = Math.min(1, Math.max(-1, theta));
  return { ...s, theta: clamped, page: 0 };
}

/** Mark a fetch as started; the returned gen must be echoed back by apply*. */
export function beginFetch(s: ViewState): { state: ViewState; gen: number } {
  const gen = s.requestGen + 1;
  return { state: { ...s, requestGen: gen, pending: true, error: null }, gen };
}

function isStale(s: ViewState, gen: number): boolean {
  return gen !== s.requestGen;
}

export function applyClusters(
  s: ViewState,
  gen: number,
  clusters: ClusterInfo[],
  quality: QualityInfo | null,
): ViewState {
  if (isStale(s, gen)) {
    return s;
  }
  return { ...s, clusters, quality, pending: false, page: 0 };
}

export function applySweep(
  s: ViewState,
  gen: number,
  timestamped: boolean,
  points: SweepPoint[],
): ViewState {
  if (isStale(s, gen)) {
    return s;
  }
  return { ...s, sweep: points, sweepTimestamped: timestamped };
}

export function applyError(s: ViewState, gen: number, message: string): ViewState {
  if (isStale(s, gen)) {
    return s;
  }
  return { ...s, pending: false, error: message };
}

export function applySaved(s: ViewState, dataset: string, theta: number): ViewState {
  const datasets = s.datasets.map((d) =>
    d.name === dataset ? { ...d, saved_theta: theta } : d,
  );
  const savedTheta = s.dataset === dataset ? theta : s.savedTheta;
  return { ...s, datasets, savedTheta };
}

/** Save is meaningful only when the cursor differs from what is persisted. */
export function canSave(s: ViewState): boolean {
  return s.dataset !== null && s.theta !== s.savedTheta;
}

export function pageCount(s: ViewState): number {
  return Math.max(1, Math.ceil(s.clusters.length / CLUSTERS_PER_PAGE));
}

export function setPage(s: ViewState, page: number): ViewState {
  const clamped = Math.min(pageCount(s) - 1, Math.max(0, page));
  return { ...s, page: clamped };
}

export function pageSlice(s: ViewState): ClusterInfo[] {
  const start = s.page * CLUSTERS_PER_PAGE;
  return s.clusters.slice(start, start + CLUSTERS_PER_PAGE);
}
