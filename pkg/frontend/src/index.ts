export { TutorClient, ApiError } from "./api";
export { bindWidget, renderReveal } from "./widgets";
export type { Widget } from "./widgets";
export { InquiryPanel } from "./panel";
export { InquiryEditor, createApp } from "./editor";
export type {
  Affordance,
  AttemptContext,
  DetectionReport,
  ExecutionPlan,
  PlanNode,
  ResponsePayload,
  SessionEvent,
  SessionView,
  VerificationCondition,
} from "./types";
