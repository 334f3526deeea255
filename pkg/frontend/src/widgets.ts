/**
 * Widget bindings: each plan affordance maps to exactly one widget kind.
 * Widgets collect a learner response; they never judge it. Unsupported
 * affordances fall back to a text field with a visible notice.
 */

import type { ExecutionPlan, PlanNode, ResponsePayload } from "./types";

export interface Widget {
  /** Widget kind actually rendered (fallbacks report "fallback_text"). */
  kind: string;
  element: HTMLElement;
  /** Response payload for the current input, or null when incomplete. */
  collect(): ResponsePayload | null;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function microphoneAvailable(): boolean {
  const nav = globalThis.navigator as Navigator | undefined;
  return Boolean(nav && "mediaDevices" in nav && nav.mediaDevices?.getUserMedia);
}

function textWidget(node: PlanNode, kind: string, placeholder: string, notice?: string): Widget {
  const root = el("div", `widget widget-${kind}`);
  if (notice) {
    root.appendChild(el("p", "widget-notice", notice));
  }
  const input = el("input", "widget-input");
  input.type = "text";
  input.placeholder = placeholder;
  root.appendChild(input);
  return {
    kind,
    element: root,
    collect: () => ({ node_id: node.node_id, text: input.value }),
  };
}

/** Speech prompt: microphone when available, otherwise a typed answer. */
function speechWidget(node: PlanNode): Widget {
  if (microphoneAvailable()) {
    const widget = textWidget(node, "speech_text", "Say or type your answer");
    const mic = el("button", "mic-button", "🎤 speak");
    mic.type = "button";
    widget.element.prepend(mic);
    return widget;
  }
  return textWidget(
    node,
    "speech_text",
    "Type your answer",
    "Microphone unavailable; type your answer instead.",
  );
}

/** Paint-roller highlight over the word's letters. */
function highlightWidget(node: PlanNode, plan: ExecutionPlan): Widget {
  const root = el("div", "widget widget-highlight_span");
  const word = plan.word;
  let start: number | null = null;
  let end: number | null = null;
  let dragging = false;

  const letters: HTMLElement[] = [];
  const row = el("div", "letter-row");
  const paint = () => {
    letters.forEach((span, i) => {
      const active = start !== null && end !== null && i >= start && i < end;
      span.classList.toggle("highlighted", active);
    });
  };
  const select = (s: number, e: number) => {
    start = Math.max(0, Math.min(s, e));
    end = Math.min(word.length, Math.max(s, e) + 1);
    paint();
  };
  for (let i = 0; i < word.length; i += 1) {
    const span = el("span", "letter", word[i]);
    span.dataset.index = String(i);
    span.addEventListener("mousedown", () => {
      dragging = true;
      select(i, i);
    });
    span.addEventListener("mouseenter", () => {
      if (dragging && start !== null) select(start, i);
    });
    span.addEventListener("mouseup", () => {
      dragging = false;
    });
    span.addEventListener("click", () => select(start !== null && dragging ? start : i, i));
    letters.push(span);
    row.appendChild(span);
  }
  root.appendChild(row);

  return {
    kind: "highlight_span",
    element: root,
    collect: () =>
      start === null || end === null
        ? null
        : { node_id: node.node_id, span: [start, end] },
  };
}

/** IN/OUT sorting bins; chips toggle bins on click (or drag). */
function dragSortWidget(node: PlanNode): Widget {
  const root = el("div", "widget widget-drag_sort");
  const inBin = el("div", "bin bin-in");
  inBin.appendChild(el("h4", undefined, "IN"));
  const outBin = el("div", "bin bin-out");
  outBin.appendChild(el("h4", undefined, "OUT"));
  const options = (node.verification?.expected.options as string[] | undefined) ?? [];
  const chosen = new Set<string>();
  for (const option of options) {
    const chip = el("button", "chip", option);
    chip.type = "button";
    chip.addEventListener("click", () => {
      if (chosen.has(option)) {
        chosen.delete(option);
        outBin.appendChild(chip);
      } else {
        chosen.add(option);
        inBin.appendChild(chip);
      }
    });
    outBin.appendChild(chip);
  }
  root.append(inBin, outBin);
  return {
    kind: "drag_sort",
    element: root,
    collect: () => ({ node_id: node.node_id, selection: [...chosen] }),
  };
}

function multipleChoiceWidget(node: PlanNode): Widget {
  const root = el("div", "widget widget-multiple_choice");
  const options = (node.verification?.expected.options as string[] | undefined) ?? [];
  let picked: string | null = null;
  for (const option of options) {
    const button = el("button", "choice", option);
    button.type = "button";
    button.addEventListener("click", () => {
      picked = option;
      root.querySelectorAll(".choice").forEach((b) => b.classList.remove("picked"));
      button.classList.add("picked");
    });
    root.appendChild(button);
  }
  return {
    kind: "multiple_choice",
    element: root,
    collect: () => (picked === null ? null : { node_id: node.node_id, selection: [picked] }),
  };
}

/**
 * Letter-morph display for a grapheme reveal: the attempt's units fade
 * out where they change, the target's units light up where they differ.
 */
export function renderReveal(
  word: string,
  target: string,
  changes: [string, string, string][],
  text: string,
): HTMLElement {
  const root = el("div", "widget widget-reveal_animation");
  root.appendChild(el("p", "reveal-text", text));
  const fromRow = el("div", "morph-row morph-from");
  const toRow = el("div", "morph-row morph-to");
  const leaving = new Set(changes.filter(([op]) => op !== "insert").map(([, frm]) => frm));
  const arriving = new Set(changes.filter(([op]) => op !== "delete").map(([, , to]) => to));
  fromRow.append(
    ...[...word].map((ch) => el("span", leaving.has(ch) ? "grapheme changed" : "grapheme", ch)),
  );
  toRow.append(
    ...[...target].map((ch) => el("span", arriving.has(ch) ? "grapheme changed" : "grapheme", ch)),
  );
  root.append(fromRow, toRow);
  return root;
}

function revealWidget(node: PlanNode, plan: ExecutionPlan): Widget {
  const changes = plan.metadata.reveals?.[node.node_id] ?? [];
  return {
    kind: "reveal_animation",
    element: renderReveal(plan.word, plan.target, changes, node.instruction_text),
    collect: () => null,
  };
}

function messageWidget(node: PlanNode): Widget {
  return {
    kind: "none",
    element: el("div", "widget widget-none", node.instruction_text),
    collect: () => null,
  };
}

/** One widget kind per affordance; anything unknown gets the fallback. */
export function bindWidget(node: PlanNode, plan: ExecutionPlan): Widget {
  switch (node.affordance) {
    case "speech_text":
      return speechWidget(node);
    case "free_text":
      return textWidget(node, "free_text", "Type here");
    case "highlight_span":
      return highlightWidget(node, plan);
    case "drag_sort":
      return dragSortWidget(node);
    case "multiple_choice":
      return multipleChoiceWidget(node);
    case "reveal_animation":
      return revealWidget(node, plan);
    case "none":
      return messageWidget(node);
    default: {
      const fallback = textWidget(
        node,
        "fallback_text",
        "Type here",
        `This step uses an unsupported input (${node.affordance}); please type instead.`,
      );
      return fallback;
    }
  }
}
