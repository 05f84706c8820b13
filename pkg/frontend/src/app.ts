/** Application wiring: event handlers, the mutation lock, and log polling. */

import {
  ApiClient,
  ApiError,
  type FetchLike,
  type ModificationKind,
  type SessionView,
} from "./api.js";
import { mountPage } from "./page.js";
import { initialUiState, render, type UiState } from "./render.js";

export interface AppOptions {
  root: HTMLElement;
  baseUrl?: string;
  fetchFn?: FetchLike;
  /** Log poll interval in ms; 0 disables the timer (poll via pollLogsOnce). */
  logPollMs?: number;
  /** View poll interval while a mutation is in flight; 0 disables. */
  progressPollMs?: number;
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return `${err.type}: ${err.message}`;
  }
  if (err instanceof Error) {
    return `API unreachable: ${err.message}`;
  }
  return `API unreachable: ${String(err)}`;
}

export class App {
  readonly client: ApiClient;
  private readonly root: HTMLElement;
  private readonly logPollMs: number;
  private readonly progressPollMs: number;
  private view: SessionView | null = null;
  private readonly ui: UiState = initialUiState();
  private sessionId: string | null = null;
  private logCursor = 0;
  private logTimer: ReturnType<typeof setInterval> | null = null;

  constructor(options: AppOptions) {
    this.root = options.root;
    this.client = new ApiClient(options.baseUrl ?? "", options.fetchFn);
    this.logPollMs = options.logPollMs ?? 1000;
    this.progressPollMs = options.progressPollMs ?? 500;
    mountPage(this.root);
    this.bind();
    this.renderNow();
  }

  async start(): Promise<void> {
    try {
      const { id } = await this.client.createSession();
      this.sessionId = id;
      await this.refreshView();
    } catch (err) {
      this.ui.error = describeError(err);
      this.renderNow();
      return;
    }
    if (this.logPollMs > 0) {
      this.logTimer = setInterval(() => {
        void this.pollLogsOnce();
      }, this.logPollMs);
    }
  }

  stop(): void {
    if (this.logTimer) {
      clearInterval(this.logTimer);
      this.logTimer = null;
    }
  }

  /** Test hooks: current server view and UI state snapshots. */
  currentView(): SessionView | null {
    return this.view;
  }

  currentUi(): Readonly<UiState> {
    return this.ui;
  }

  session(): string | null {
    return this.sessionId;
  }

  async pollLogsOnce(): Promise<void> {
    if (!this.sessionId) {
      return;
    }
    let events;
    try {
      ({ events } = await this.client.log(this.sessionId, this.logCursor));
    } catch {
      return; // transient polling failure; mutations surface their own errors
    }
    if (events.length === 0) {
      return;
    }
    for (const event of events) {
      this.ui.logLines.push(event.message);
      this.logCursor = Math.max(this.logCursor, event.seq);
    }
    const panel = this.root.querySelector("#log-panel");
    if (panel) {
      panel.textContent = this.ui.logLines.join("\n");
    }
  }

  private renderNow(): void {
    render(this.root, this.view, this.ui);
  }

  private async refreshView(): Promise<void> {
    if (!this.sessionId) {
      return;
    }
    this.view = await this.client.getView(this.sessionId);
    this.renderNow();
  }

  private async refreshProgress(): Promise<void> {
    if (!this.sessionId) {
      return;
    }
    try {
      this.view = await this.client.getView(this.sessionId);
      this.renderNow();
    } catch {
      // ignore: the in-flight mutation reports real failures
    }
  }

  /** Runs one mutating request; only one may be in flight at a time. */
  private async mutate(fn: () => Promise<unknown>): Promise<boolean> {
    if (this.ui.busy || !this.sessionId) {
      return false;
    }
    this.ui.busy = true;
    this.ui.error = null;
    this.ui.validation = null;
    this.renderNow();
    const timer =
      this.progressPollMs > 0
        ? setInterval(() => {
            void this.refreshProgress();
          }, this.progressPollMs)
        : null;
    let ok = true;
    try {
      await fn();
    } catch (err) {
      this.ui.error = describeError(err);
      ok = false;
    } finally {
      if (timer) {
        clearInterval(timer);
      }
    }
    try {
      await this.refreshView();
    } catch (err) {
      if (ok) {
        this.ui.error = describeError(err);
        ok = false;
      }
    }
    this.ui.busy = false;
    this.renderNow();
    return ok;
  }

  private input(selector: string): HTMLInputElement {
    return this.root.querySelector(selector) as HTMLInputElement;
  }

  private textarea(selector: string): HTMLTextAreaElement {
    return this.root.querySelector(selector) as HTMLTextAreaElement;
  }

  private bind(): void {
    this.root.querySelector("#requirement-submit")!.addEventListener("click", () => {
      void this.onSubmitRequirement();
    });
    const list = this.root.querySelector("#scenario-list")!;
    list.addEventListener("click", (event) => {
      const target = event.target as HTMLElement | null;
      const button = target?.closest?.("button.scenario-del") as HTMLButtonElement | null;
      if (button && !button.disabled) {
        void this.onDelete(Number(button.dataset["index"]));
      }
    });
    list.addEventListener("focusout", (event) => {
      const target = event.target as HTMLInputElement | null;
      if (target && target.tagName === "INPUT" && target.classList.contains("scenario-text")) {
        void this.onEditCommit(Number(target.dataset["index"]), target.value);
      }
    });
    this.root.querySelector("#new-scenario-add")!.addEventListener("click", () => {
      void this.onAdd();
    });
    this.root.querySelector("#generate-btn")!.addEventListener("click", () => {
      void this.onGenerate();
    });
    this.root.querySelector("#design-submit")!.addEventListener("click", () => {
      void this.onModify("design", "#design-input");
    });
    this.root.querySelector("#function-submit")!.addEventListener("click", () => {
      void this.onModify("function", "#function-input");
    });
    this.root.querySelector("#accept-btn")!.addEventListener("click", () => {
      void this.onAccept();
    });
    this.root.querySelector("#version-select")!.addEventListener("change", (event) => {
      const select = event.target as HTMLSelectElement;
      this.ui.selectedVersion = Number(select.value);
      this.renderNow();
    });
  }

  private validationFail(message: string): void {
    this.ui.validation = message;
    this.renderNow();
  }

  private async onSubmitRequirement(): Promise<void> {
    if (this.ui.busy || !this.sessionId) {
      return;
    }
    const text = this.input("#requirement-input").value.trim();
    if (!text) {
      this.validationFail("Please enter a requirement before submitting.");
      return;
    }
    await this.mutate(() => this.client.submitRequirement(this.sessionId!, text));
  }

  private async onEditCommit(index: number, value: string): Promise<void> {
    if (this.ui.busy || !this.view) {
      return;
    }
    const current = this.view.scenarios.find((s) => s.index === index);
    const text = value.trim();
    if (!current || !text || text === current.text) {
      this.renderNow(); // restore the server text; nothing to send
      return;
    }
    await this.mutate(() => this.client.decide(this.sessionId!, { action: "modify", index, text }));
  }

  private async onDelete(index: number): Promise<void> {
    await this.mutate(() => this.client.decide(this.sessionId!, { action: "delete", index }));
  }

  private async onAdd(): Promise<void> {
    if (this.ui.busy) {
      return;
    }
    const input = this.input("#new-scenario-input");
    const text = input.value.trim();
    if (!text) {
      this.validationFail("Please enter the new scenario text before adding.");
      return;
    }
    const ok = await this.mutate(() => this.client.decide(this.sessionId!, { action: "add", text }));
    if (ok) {
      input.value = "";
    }
  }

  private async onGenerate(): Promise<void> {
    await this.mutate(() => this.client.generate(this.sessionId!));
  }

  private async onModify(kind: ModificationKind, selector: string): Promise<void> {
    if (this.ui.busy) {
      return;
    }
    const area = this.textarea(selector);
    const text = area.value.trim();
    if (!text) {
      this.validationFail("Please describe the change you want first.");
      return;
    }
    const ok = await this.mutate(() => this.client.modify(this.sessionId!, kind, text));
    if (ok) {
      area.value = "";
    }
  }

  private async onAccept(): Promise<void> {
    await this.mutate(() => this.client.accept(this.sessionId!));
  }
}

export function initApp(options: AppOptions): App {
  const app = new App(options);
  void app.start();
  return app;
}
