/**
 * Minimal editor surface: shows the learner's text, boxes flagged words
 * in red, opens the inquiry panel on click, and applies the final
 * correction when a session finishes. The document is never mutated for
 * any other reason.
 */

import { TutorClient } from "./api";
import { InquiryPanel } from "./panel";
import type { AttemptContext } from "./types";

export class InquiryEditor {
  readonly textHost: HTMLElement;
  readonly panel: InquiryPanel;
  private client: TutorClient;
  private documentText = "";

  constructor(client: TutorClient, root: HTMLElement) {
    this.client = client;
    this.textHost = document.createElement("div");
    this.textHost.className = "editor-text";
    root.appendChild(this.textHost);
    this.panel = new InquiryPanel(client, root, {
      onFinished: (context) => this.applyCorrection(context),
    });
  }

  get text(): string {
    return this.documentText;
  }

  load(text: string): void {
    this.documentText = text;
    this.textHost.textContent = text;
  }

  /** Run detection and box each flagged word in red. */
  async check(): Promise<number> {
    const report = await this.client.check(this.documentText);
    this.textHost.replaceChildren();
    let cursor = 0;
    for (const context of report.contexts) {
      const [start, end] = context.span;
      if (start > cursor) {
        this.textHost.appendChild(document.createTextNode(this.documentText.slice(cursor, start)));
      }
      const flag = document.createElement("span");
      flag.className = "flagged";
      flag.textContent = this.documentText.slice(start, end);
      flag.dataset.attempt = context.attempt;
      flag.dataset.target = context.target;
      flag.addEventListener("click", () => void this.panel.open(context));
      this.textHost.appendChild(flag);
      cursor = end;
    }
    this.textHost.appendChild(document.createTextNode(this.documentText.slice(cursor)));
    return report.contexts.length;
  }

  flaggedWords(): string[] {
    return [...this.textHost.querySelectorAll<HTMLElement>(".flagged")].map(
      (span) => span.textContent ?? "",
    );
  }

  /** Final correction: the one place the document changes. */
  private applyCorrection(context: AttemptContext): void {
    for (const span of this.textHost.querySelectorAll<HTMLElement>(".flagged")) {
      if (span.dataset.attempt === context.attempt) {
        span.textContent = context.target;
        span.classList.remove("flagged");
        span.classList.add("corrected");
      }
    }
    this.documentText = this.documentText.replace(context.attempt, context.target);
  }
}

/** Wire a complete mini-app into a root element. */
export function createApp(root: HTMLElement, baseUrl = ""): InquiryEditor {
  const client = new TutorClient(baseUrl);
  return new InquiryEditor(client, root);
}
