import { describe, expect, it } from "vitest";
import type { ClusterInfo, DatasetInfo } from "./api.js";
import {
  CLUSTERS_PER_PAGE,
  applyClusters,
  applyError,
  applySaved,
  applySweep,
  beginFetch,
  canSave,
  initialState,
  pageCount,
  pageSlice,
  selectDataset,
  setPage,
  setTheta,
  withDatasets,
} from "./state.js";

const ds = (over: Partial<DatasetInfo> = {}): DatasetInfo => ({
  name: "deer",
  timestamped: true,
  images: 40,
  identities: 10,
  saved_theta: null,
  default_theta: 0.97,
  ...over,
});

const cluster = (id: string, size = 2): ClusterInfo => ({
  identity: "a",
  cluster_id: id,
  size,
  image_ids: Array.from({ length: size }, (_, i) => `${id}_${i}`),
  paths: Array.from({ length: size }, () => null),
  dates: [],
});

describe("selectDataset", () => {
  it("adopts the saved theta when one exists", () => {
    const s = withDatasets(initialState(), [ds({ saved_theta: 0.93 })]);
    const next = selectDataset(s, "deer");
    expect(next.theta).toBe(0.93);
    expect(next.savedTheta).toBe(0.93);
  });

  it("falls back to the default theta and bumps the request generation", () => {
    const s = withDatasets(initialState(), [ds()]);
    const next = selectDataset(s, "deer");
    expect(next.theta).toBe(0.97);
    expect(next.savedTheta).toBeNull();
    expect(next.requestGen).toBe(s.requestGen + 1);
  });

  it("flags unknown datasets without switching", () => {
    const s = withDatasets(initialState(), [ds()]);
    const next = selectDataset(s, "nope");
    expect(next.dataset).toBeNull();
    expect(next.error).toContain("nope");
  });
});

describe("staleness guard", () => {
  it("drops cluster results from a superseded request", () => {
    let s = withDatasets(initialState(), [ds()]);
    s = selectDataset(s, "deer");
    const first = beginFetch(s);
    const second = beginFetch(first.state);
    s = second.state;
    const stale = applyClusters(s, first.gen, [cluster("a#0")], null);
    expect(stale).toBe(s); // unchanged
    const fresh = applyClusters(s, second.gen, [cluster("a#0")], null);
    expect(fresh.clusters).toHaveLength(1);
    expect(fresh.pending).toBe(false);
  });

  it("drops stale sweeps and errors too", () => {
    let s = initialState();
    const first = beginFetch(s);
    const second = beginFetch(first.state);
    s = second.state;
    expect(applySweep(s, first.gen, true, [{ theta: 0.9, tp: 1, fp: 0 }])).toBe(s);
    expect(applyError(s, first.gen, "boom")).toBe(s);
    const errored = applyError(s, second.gen, "boom");
    expect(errored.error).toBe("boom");
    expect(errored.pending).toBe(false);
  });
});

describe("theta and save state", () => {
  it("clamps theta to [-1, 1] and resets the page", () => {
    let s = setPage(
      applyClusters(
        ...(() => {
          const { state, gen } = beginFetch(initialState());
          return [state, gen] as const;
        })(),
        Array.from({ length: 120 }, (_, i) => cluster(`c#${i}`)),
        null,
      ),
      2,
    );
    expect(s.page).toBe(2);
    s = setTheta(s, 1.5);
    expect(s.theta).toBe(1);
    expect(s.page).toBe(0);
    expect(setTheta(s, -3).theta).toBe(-1);
  });

  it("enables save only when theta differs from the persisted value", () => {
    let s = withDatasets(initialState(), [ds({ saved_theta: 0.95 })]);
    expect(canSave(s)).toBe(false); // no dataset selected
    s = selectDataset(s, "deer");
    expect(canSave(s)).toBe(false); // theta === savedTheta
    s = setTheta(s, 0.96);
    expect(canSave(s)).toBe(true);
    s = applySaved(s, "deer", 0.96);
    expect(canSave(s)).toBe(false);
    expect(s.datasets[0].saved_theta).toBe(0.96);
  });

  it("applySaved for another dataset leaves the current savedTheta alone", () => {
    let s = withDatasets(initialState(), [ds(), ds({ name: "seal" })]);
    s = selectDataset(s, "deer");
    const next = applySaved(s, "seal", 0.91);
    expect(next.savedTheta).toBeNull();
    expect(next.datasets.find((d) => d.name === "seal")?.saved_theta).toBe(0.91);
  });
});

describe("pagination", () => {
  const filled = (n: number) => {
    const { state, gen } = beginFetch(initialState());
    return applyClusters(
      state,
      gen,
      Array.from({ length: n }, (_, i) => cluster(`c#${i}`)),
      null,
    );
  };

  it("slices 50 clusters per page", () => {
    const s = filled(120);
    expect(pageCount(s)).toBe(3);
    expect(pageSlice(s)).toHaveLength(CLUSTERS_PER_PAGE);
    const last = setPage(s, 2);
    expect(pageSlice(last)).toHaveLength(20);
    expect(pageSlice(last)[0].cluster_id).toBe("c#100");
  });

  it("clamps page navigation at both ends", () => {
    const s = filled(60);
    expect(setPage(s, -1).page).toBe(0);
    expect(setPage(s, 99).page).toBe(1);
    expect(pageCount(filled(0))).toBe(1);
  });
});
