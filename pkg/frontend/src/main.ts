import { WorkbenchApi } from "./api.js";
import { SweepChart } from "./chart.js";
import { debounceFetch } from "./debounce.js";
import { Gallery } from "./gallery.js";
import {
  ViewState,
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

const api = new WorkbenchApi();
let state: ViewState = initialState();

const $ = (id: string): HTMLElement => {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing #${id}`);
  }
  return el;
};

const datasetSelect = $("dataset-select") as HTMLSelectElement;
const thetaSlider = $("theta-slider") as HTMLInputElement;
const thetaReadout = $("theta-readout");
const saveButton = $("save-theta") as HTMLButtonElement;
const savedIndicator = $("saved-indicator");
const qualityReadout = $("quality-readout");
const pageInfo = $("page-info");
const prevButton = $("page-prev") as HTMLButtonElement;
const nextButton = $("page-next") as HTMLButtonElement;
const statusLine = $("status-line");

const chart = new SweepChart($("chart"), {
  onThetaDrag: (theta) => {
    update(setTheta(state, theta));
    scheduleClusterFetch();
  },
  onThetaCommit: () => scheduleClusterFetch(),
});
const gallery = new Gallery($("gallery"), (id) => api.imageUrl(id));

function update(next: ViewState): void {
  state = next;
  render();
}

function render(): void {
  thetaSlider.value = String(state.theta);
  thetaReadout.textContent = state.theta.toFixed(3);
  saveButton.disabled = !canSave(state);
  savedIndicator.textContent =
    state.savedTheta === null
      ? "no saved threshold"
      : state.theta === state.savedTheta
        ? `saved at ${state.savedTheta.toFixed(3)}`
        : `saved: ${state.savedTheta.toFixed(3)} (unsaved changes)`;
  statusLine.textContent = state.error
    ? `error: ${state.error}`
    : state.pending
      ? "loading…"
      : `${state.clusters.length} clusters`;
  if (state.quality) {
    qualityReadout.textContent =
      state.quality.tp === null
        ? "tp/fp unavailable (no timestamps)"
        : `tp=${state.quality.tp} fp=${state.quality.fp}`;
  } else {
    qualityReadout.textContent = "";
  }
  pageInfo.textContent = `page ${state.page + 1} / ${pageCount(state)}`;
  prevButton.disabled = state.page === 0;
  nextButton.disabled = state.page >= pageCount(state) - 1;
  chart.update(state.sweep, state.theta);
  gallery.render(pageSlice(state));
}

async function fetchClusters(signal: AbortSignal): Promise<void> {
  if (!state.dataset) {
    return;
  }
  const { state: started, gen } = beginFetch(state);
  update(started);
  try {
    const [clusters, quality] = await Promise.all([
      api.clusters(state.dataset, state.theta, signal),
      api.quality(state.dataset, state.theta, signal),
    ]);
    update(applyClusters(state, gen, clusters.clusters, quality));
  } catch (err) {
    if (err instanceof DOMException && err.name === "AbortError") {
      return;
    }
    update(applyError(state, gen, String(err)));
  }
}

const scheduleClusterFetch = debounceFetch(fetchClusters, 200);

async function switchDataset(name: string): Promise<void> {
  scheduleClusterFetch.cancel();
  update(selectDataset(state, name));
  const gen = state.requestGen;
  scheduleClusterFetch();
  try {
    const sweep = await api.sweep(name);
    update(applySweep(state, gen, sweep.timestamped, sweep.points));
  } catch (err) {
    update(applyError(state, gen, String(err)));
  }
}

datasetSelect.addEventListener("change", () => {
  void switchDataset(datasetSelect.value);
});
thetaSlider.addEventListener("input", () => {
  update(setTheta(state, Number(thetaSlider.value)));
  scheduleClusterFetch();
});
saveButton.addEventListener("click", async () => {
  if (!state.dataset) {
    return;
  }
  try {
    await api.saveThreshold(state.dataset, state.theta);
    update(applySaved(state, state.dataset, state.theta));
  } catch (err) {
    update({ ...state, error: String(err) });
  }
});
prevButton.addEventListener("click", () => update(setPage(state, state.page - 1)));
nextButton.addEventListener("click", () => update(setPage(state, state.page + 1)));

async function boot(): Promise<void> {
  try {
    const { datasets } = await api.listDatasets();
    update(withDatasets(state, datasets));
    datasetSelect.replaceChildren(
      ...datasets.map((d) => {
        const opt = document.createElement("option");
        opt.value = d.name;
        opt.textContent = `${d.name} (${d.identities} ids, ${d.images} imgs)`;
        return opt;
      }),
    );
    if (datasets.length > 0) {
      datasetSelect.value = datasets[0].name;
      await switchDataset(datasets[0].name);
    }
  } catch (err) {
    update({ ...state, error: String(err) });
  }
}

void boot();
