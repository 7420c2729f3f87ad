// Hash-routed single-page app. Every screen re-fetches from the API when it
// is (re)entered, so the page never holds authoritative state: reloading
// reproduces exactly what the server knows. Mutations are confirmed only by
// a re-fetch after the server acknowledges them.

import { LabelerApi, RequestFailed } from "./api.js";
import {
  DetailViewState,
  errorBanner,
  loadingScreen,
  renderClassifyForm,
  renderClusterDetail,
  renderClusterList,
  renderNotFound,
  renderPrediction,
} from "./views.js";

const api = new LabelerApi();
const root = document.getElementById("app") as HTMLElement;

let knownLabels: string[] = [];
let detailState: DetailViewState = {
  page: 0,
  draftLabel: null,
  saveError: null,
  savedFlash: false,
};
let classifySource = "";

function currentRoute(): { name: string; clusterId?: number } {
  const hash = window.location.hash;
  const detail = hash.match(/^#\/clusters\/(\d+)$/);
  if (detail) {
    return { name: "detail", clusterId: Number(detail[1]) };
  }
  if (hash === "#/classify") {
    return { name: "classify" };
  }
  return { name: "list" };
}

async function showList(): Promise<void> {
  root.innerHTML = loadingScreen();
  try {
    const clusters = await api.clusters();
    knownLabels = [
      ...new Set(
        clusters
          .map((c) => c.label)
          .filter((l): l is string => l !== null && l !== ""),
      ),
    ].sort();
    root.innerHTML = renderClusterList(clusters);
  } catch (error) {
    root.innerHTML = errorBanner(messageOf(error));
  }
}

async function showDetail(clusterId: number): Promise<void> {
  root.innerHTML = loadingScreen();
  try {
    const detail = await api.cluster(clusterId);
    root.innerHTML = renderClusterDetail(detail, detailState, knownLabels);
  } catch (error) {
    if (error instanceof RequestFailed && error.status === 404) {
      root.innerHTML = renderNotFound(String(clusterId));
      return;
    }
    root.innerHTML = errorBanner(messageOf(error));
  }
}

function showClassify(inlineError: string | null = null): void {
  root.innerHTML = renderClassifyForm(classifySource, inlineError);
}

function messageOf(error: unknown): string {
  if (error instanceof RequestFailed) {
    return error.message;
  }
  return error instanceof Error ? error.message : String(error);
}

async function render(): Promise<void> {
  const route = currentRoute();
  if (route.name === "detail") {
    await showDetail(route.clusterId as number);
  } else if (route.name === "classify") {
    showClassify();
  } else {
    await showList();
  }
}

function resetDetailState(): void {
  detailState = { page: 0, draftLabel: null, saveError: null,
                  savedFlash: false };
}

window.addEventListener("hashchange", () => {
  resetDetailState();
  void render();
});

root.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest("[data-action]");
  if (!(target instanceof HTMLElement)) {
    return;
  }
  const action = target.dataset.action;
  const route = currentRoute();
  if (action === "retry") {
    void render();
  } else if (action === "prev-page" || action === "next-page") {
    detailState.page += action === "next-page" ? 1 : -1;
    detailState.savedFlash = false;
    void showDetail(route.clusterId as number);
  }
});

root.addEventListener("submit", (event) => {
  const form = event.target as HTMLFormElement;
  const action = form.dataset.action;
  if (!action) {
    return;
  }
  event.preventDefault();
  const route = currentRoute();
  if (action === "save-label" && route.name === "detail") {
    const input = form.querySelector("input[name=label]") as HTMLInputElement;
    void saveLabel(route.clusterId as number, input.value);
  } else if (action === "classify") {
    const area = form.querySelector("textarea") as HTMLTextAreaElement;
    classifySource = area.value;
    void classify();
  }
});

root.addEventListener("input", (event) => {
  const area = event.target as HTMLElement;
  if (area instanceof HTMLTextAreaElement && area.name === "source") {
    classifySource = area.value;
    const button = root.querySelector(
      ".classify-form button[type=submit]",
    ) as HTMLButtonElement | null;
    if (button) {
      button.disabled = classifySource.trim() === "";
    }
  }
});

async function saveLabel(clusterId: number, label: string): Promise<void> {
  try {
    await api.setLabel(clusterId, label);
    // saved state is confirmed only by the re-fetch
    detailState = { ...detailState, draftLabel: null, saveError: null,
                    savedFlash: true };
    await showDetail(clusterId);
  } catch (error) {
    detailState = { ...detailState, draftLabel: label,
                    saveError: `Save failed: ${messageOf(error)}`,
                    savedFlash: false };
    await showDetail(clusterId);
  }
}

async function classify(): Promise<void> {
  const resultSlot = document.getElementById("classify-result");
  if (resultSlot) {
    resultSlot.innerHTML = loadingScreen();
  }
  try {
    const prediction = await api.classify(classifySource);
    showClassify();
    const slot = document.getElementById("classify-result");
    if (slot) {
      slot.innerHTML = renderPrediction(prediction);
    }
  } catch (error) {
    // parse errors from the server render inline, keeping the source text
    showClassify(messageOf(error));
  }
}

void render();
