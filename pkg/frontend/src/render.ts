/** Pure rendering: the DOM is a function of the server view plus local,
 * not-yet-sent input state. No other client state exists.
 */

import type { Progress, SessionView } from "./api.js";

export interface UiState {
  /** A mutating request is in flight — all controls are disabled. */
  busy: boolean;
  /** Error banner text, or null when hidden. */
  error: string | null;
  /** Client-side validation message, or null when hidden. */
  validation: string | null;
  /** User-chosen version; null means "latest". */
  selectedVersion: number | null;
  /** Log lines accumulated through cursor polling. */
  logLines: string[];
}

export function initialUiState(): UiState {
  return { busy: false, error: null, validation: null, selectedVersion: null, logLines: [] };
}

/** "processing | actual/estimated(s)" — the estimate is the server's, verbatim. */
export function progressText(progress: Progress): string {
  return `processing | ${Math.round(progress.elapsed_s)}/${progress.estimated_s}(s)`;
}

function query<T extends HTMLElement>(root: HTMLElement, selector: string): T {
  const element = root.querySelector(selector);
  if (!element) {
    throw new Error(`missing element: ${selector}`);
  }
  return element as T;
}

export function render(root: HTMLElement, view: SessionView | null, ui: UiState): void {
  const doc = root.ownerDocument;
  const state = view?.state ?? null;

  const banner = query<HTMLDivElement>(root, "#error-banner");
  banner.hidden = ui.error === null;
  banner.textContent = ui.error ?? "";

  const validation = query<HTMLDivElement>(root, "#validation-line");
  validation.hidden = ui.validation === null;
  validation.textContent = ui.validation ?? "";

  const requirementInput = query<HTMLInputElement>(root, "#requirement-input");
  const requirementSubmit = query<HTMLButtonElement>(root, "#requirement-submit");
  const canSubmitRequirement = state === "AwaitingRequirement" && !ui.busy;
  requirementInput.disabled = !canSubmitRequirement;
  requirementSubmit.disabled = !canSubmitRequirement;

  query<HTMLDivElement>(root, "#state-line").textContent = state ? `State: ${state}` : "";

  const progressLine = query<HTMLDivElement>(root, "#progress-line");
  if (view?.progress) {
    progressLine.hidden = false;
    progressLine.textContent = progressText(view.progress);
  } else {
    progressLine.hidden = true;
    progressLine.textContent = "";
  }

  const scenarioArea = query<HTMLElement>(root, "#scenario-area");
  const scenarios = view?.scenarios ?? [];
  scenarioArea.hidden = scenarios.length === 0;
  const editable = state === "ScenariosProposed" && !ui.busy;
  const list = query<HTMLDivElement>(root, "#scenario-list");
  list.textContent = "";
  for (const scenario of scenarios) {
    const entry = doc.createElement("div");
    entry.className = "scenario-entry";
    const input = doc.createElement("input");
    input.type = "text";
    input.className = "scenario-text";
    input.value = scenario.text;
    input.dataset["index"] = String(scenario.index);
    input.disabled = !editable;
    const del = doc.createElement("button");
    del.type = "button";
    del.className = "scenario-del";
    del.textContent = "Del";
    del.dataset["index"] = String(scenario.index);
    del.disabled = !editable;
    entry.append(input, del);
    list.append(entry);
  }
  query<HTMLInputElement>(root, "#new-scenario-input").disabled = !editable;
  query<HTMLButtonElement>(root, "#new-scenario-add").disabled = !editable;
  query<HTMLButtonElement>(root, "#generate-btn").disabled = !editable;

  const versions = view?.versions ?? [];
  const revealed = versions.length > 0;
  for (const id of ["#area-execution", "#area-download", "#area-design", "#area-function", "#version-area"]) {
    query<HTMLElement>(root, id).hidden = !revealed;
  }
  if (view && revealed) {
    const latest = versions[versions.length - 1]!;
    const selected =
      ui.selectedVersion !== null && versions.some((v) => v.version === ui.selectedVersion)
        ? ui.selectedVersion
        : latest.version;
    const select = query<HTMLSelectElement>(root, "#version-select");
    select.textContent = "";
    for (const info of versions) {
      const option = doc.createElement("option");
      option.value = String(info.version);
      option.textContent = `v${info.version}`;
      select.append(option);
    }
    select.value = String(selected);
    select.disabled = ui.busy;
    const current = versions.find((v) => v.version === selected)!;
    query<HTMLAnchorElement>(root, "#preview-link").setAttribute("href", current.preview_url);
    query<HTMLAnchorElement>(root, "#download-link").setAttribute("href", current.download_url);

    const canModify = state === "PrototypeReady" && !ui.busy;
    query<HTMLTextAreaElement>(root, "#design-input").disabled = !canModify;
    query<HTMLButtonElement>(root, "#design-submit").disabled = !canModify;
    query<HTMLTextAreaElement>(root, "#function-input").disabled = !canModify;
    query<HTMLButtonElement>(root, "#function-submit").disabled = !canModify;
    query<HTMLButtonElement>(root, "#accept-btn").disabled = !canModify;
  }

  query<HTMLPreElement>(root, "#log-panel").textContent = ui.logLines.join("\n");
}
