/**
 * The inquiry panel: renders the server's view of a session, one widget
 * per prompt, and a feed of everything that already happened (feedback,
 * reveals). The panel holds no pedagogy: every verdict on screen is a
 * string the server sent back.
 */

import { ApiError, TutorClient } from "./api";
import type {
  AttemptContext,
  ExecutionPlan,
  ResponsePayload,
  SessionEvent,
  SessionView,
} from "./types";
import { bindWidget, renderReveal, Widget } from "./widgets";

export interface PanelCallbacks {
  /** Called once when the session finishes; apply the correction here. */
  onFinished?(context: AttemptContext, plan: ExecutionPlan): void;
  onClosed?(): void;
}

export class InquiryPanel {
  readonly root: HTMLElement;
  private client: TutorClient;
  private callbacks: PanelCallbacks;
  private plan: ExecutionPlan | null = null;
  private view: SessionView | null = null;
  private context: AttemptContext | null = null;
  private widget: Widget | null = null;
  private renderedEvents = 0;
  private feed: HTMLElement;
  private prompt: HTMLElement;
  private widgetHost: HTMLElement;
  private errorBar: HTMLElement;
  private submitButton: HTMLButtonElement;

  constructor(client: TutorClient, host: HTMLElement, callbacks: PanelCallbacks = {}) {
    this.client = client;
    this.callbacks = callbacks;
    this.root = document.createElement("section");
    this.root.className = "inquiry-panel";
    this.root.hidden = true;
    this.feed = document.createElement("div");
    this.feed.className = "panel-feed";
    this.prompt = document.createElement("p");
    this.prompt.className = "panel-prompt";
    this.widgetHost = document.createElement("div");
    this.widgetHost.className = "panel-widget";
    this.errorBar = document.createElement("div");
    this.errorBar.className = "panel-error";
    this.errorBar.hidden = true;
    this.submitButton = document.createElement("button");
    this.submitButton.type = "button";
    this.submitButton.className = "panel-submit";
    this.submitButton.textContent = "Answer";
    this.submitButton.addEventListener("click", () => void this.submit());
    this.root.append(this.feed, this.prompt, this.widgetHost, this.errorBar, this.submitButton);
    host.appendChild(this.root);
  }

  get isOpen(): boolean {
    return !this.root.hidden;
  }

  currentWidgetKind(): string | null {
    return this.widget?.kind ?? null;
  }

  /** Start an inquiry for a flagged word and show the panel. */
  async open(context: AttemptContext): Promise<void> {
    this.context = context;
    this.plan = await this.client.inquiry(context);
    this.view = await this.client.createSession(this.plan.plan_id);
    this.renderedEvents = 0;
    this.feed.replaceChildren();
    this.root.hidden = false;
    this.render();
  }

  close(): void {
    this.root.hidden = true;
    this.callbacks.onClosed?.();
  }

  /** The widget for testing and scripted drives. */
  activeWidget(): Widget | null {
    return this.widget;
  }

  async submit(): Promise<void> {
    if (!this.view || !this.widget || this.view.current === "FINISHED") return;
    const payload = this.widget.collect();
    if (payload === null) return;
    await this.send(payload);
  }

  /** Submit a payload; on failure keep the widget (and its input) intact. */
  private async send(payload: ResponsePayload): Promise<void> {
    if (!this.view) return;
    this.errorBar.hidden = true;
    try {
      this.view = await this.client.step(this.view.session_id, payload);
    } catch (error) {
      this.showRetry(payload, error);
      return;
    }
    this.render();
  }

  private showRetry(payload: ResponsePayload, error: unknown): void {
    this.errorBar.replaceChildren();
    const message = document.createElement("span");
    message.textContent =
      error instanceof ApiError
        ? `The tutor said no: ${error.message}`
        : "Connection hiccup; your answer is still here.";
    const retry = document.createElement("button");
    retry.type = "button";
    retry.className = "panel-retry";
    retry.textContent = "Try again";
    retry.addEventListener("click", () => void this.send(payload));
    this.errorBar.append(message, retry);
    this.errorBar.hidden = false;
  }

  /** Append transcript events that arrived since the last render. */
  private renderFeed(): void {
    if (!this.view || !this.plan) return;
    const fresh = this.view.transcript.slice(this.renderedEvents);
    this.renderedEvents = this.view.transcript.length;
    for (const event of fresh) {
      this.feed.appendChild(this.renderEvent(event));
    }
  }

  private renderEvent(event: SessionEvent): HTMLElement {
    const plan = this.plan as ExecutionPlan;
    if (event.kind === "revealed") {
      const changes = (event.payload.changes as [string, string, string][]) ?? [];
      return renderReveal(plan.word, plan.target, changes, String(event.payload.text ?? ""));
    }
    const row = document.createElement("p");
    row.className = `feed-event feed-${event.kind}`;
    if (event.kind === "prompted") {
      row.textContent = String(event.payload.instruction ?? "");
    } else if (event.kind === "responded") {
      row.textContent = JSON.stringify(event.payload);
      row.className += " feed-echo";
    } else if (event.kind === "verified_true" || event.kind === "verified_false") {
      row.textContent = String(event.payload.feedback ?? "");
      row.className += event.kind === "verified_true" ? " feed-yes" : " feed-no";
    } else {
      row.textContent = event.kind;
    }
    return row;
  }

  private render(): void {
    if (!this.view || !this.plan) return;
    this.renderFeed();
    if (this.view.current === "FINISHED") {
      this.prompt.textContent = "";
      this.widgetHost.replaceChildren();
      this.widget = null;
      this.submitButton.hidden = true;
      if (this.context) {
        this.callbacks.onFinished?.(this.context, this.plan);
      }
      const closeButton = document.createElement("button");
      closeButton.type = "button";
      closeButton.className = "panel-close";
      closeButton.textContent = "Back to writing";
      closeButton.addEventListener("click", () => this.close());
      this.widgetHost.appendChild(closeButton);
      return;
    }
    const node = this.view.node;
    if (!node) return;
    this.submitButton.hidden = false;
    this.prompt.textContent = node.instruction_text;
    this.widget = bindWidget(node, this.plan);
    this.widgetHost.replaceChildren(this.widget.element);
  }
}
