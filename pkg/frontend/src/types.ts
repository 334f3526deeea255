/** Wire types mirroring the server's canonical JSON documents. */

export type Affordance =
  | "speech_text"
  | "free_text"
  | "highlight_span"
  | "drag_sort"
  | "multiple_choice"
  | "reveal_animation"
  | "none";

export interface VerificationCondition {
  kind: string;
  expected: Record<string, unknown>;
  provider_required: boolean;
}

export interface PlanNode {
  node_id: string;
  hypothesis: string | null;
  instruction_text: string;
  affordance: Affordance;
  verification: VerificationCondition | null;
  on_true: string | null;
  on_false: string | null;
  feedback_true: string;
  feedback_false: string;
  effect_on_true: string | null;
}

export interface ExecutionPlan {
  plan_id: string;
  word: string;
  target: string;
  entry: string;
  nodes: Record<string, PlanNode>;
  metadata: {
    rationale?: string;
    reveals?: Record<string, [string, string, string][]>;
    [key: string]: unknown;
  };
}

export interface SessionEvent {
  t: number;
  node: string;
  kind: string;
  payload: Record<string, unknown>;
}

export interface SessionView {
  session_id: string;
  plan_id: string;
  current: string;
  node: PlanNode | null;
  effects: string[];
  transcript: SessionEvent[];
}

export interface AttemptContext {
  attempt: string;
  target: string;
  sentence: string;
  document_excerpt: string;
  span: [number, number];
}

export interface DetectionReport {
  contexts: AttemptContext[];
  trigger: string;
}

/** Learner response payload; exactly one of the fields is set. */
export interface ResponsePayload {
  node_id: string;
  text?: string;
  span?: [number, number];
  selection?: string[];
}
