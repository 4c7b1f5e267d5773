import { z } from "zod";

export const FormFieldSchema = z.object({
  field_id: z.string(),
  label: z.string(),
  widget: z.enum(["number", "text", "checkbox", "file-picker", "select"]),
  required: z.boolean(),
  default: z.unknown().nullable(),
  options: z.array(z.string()),
});
export type FormField = z.infer<typeof FormFieldSchema>;

export const FormSchema = z.object({ fields: z.array(FormFieldSchema) });

export const ToolSummarySchema = z.object({
  descriptor: z.object({
    id: z.string(),
    version: z.string(),
    image_ref: z.string().nullable().optional(),
    inputs: z.array(z.object({ id: z.string() }).passthrough()),
  }).passthrough(),
  uploaded_at: z.number(),
  visibility: z.string(),
  has_profile: z.boolean(),
});
export type ToolSummary = z.infer<typeof ToolSummarySchema>;

export const ToolListSchema = z.object({ tools: z.array(ToolSummarySchema) });

export const TaskMinimalSchema = z.object({ id: z.string(), state: z.string() });
export type TaskMinimal = z.infer<typeof TaskMinimalSchema>;

export const TaskFullSchema = TaskMinimalSchema.extend({
  tool_id: z.string(),
  bindings: z.record(z.string(), z.unknown()),
  logs: z.record(z.string(), z.unknown()),
  outputs: z.array(z.tuple([z.string(), z.string(), z.number()]).rest(z.unknown())),
}).passthrough();
export type TaskFull = z.infer<typeof TaskFullSchema>;

export const TaskPageSchema = z.object({
  tasks: z.array(TaskMinimalSchema),
  next_page_token: z.string().nullable(),
});

export const ServiceInfoSchema = z.object({
  name: z.string(),
  version: z.string(),
  endpoints: z.array(z.string()),
  node_classes: z.array(z.string()),
});
export type ServiceInfo = z.infer<typeof ServiceInfoSchema>;

export const SuggestionSchema = z.object({
  tool_id: z.string(),
  suggestion: z.string().nullable(),
});

export const PackageResultSchema = z.object({
  crate_dir: z.string(),
  manifest: z.array(z.string()),
  validation_failures: z.array(z.string()),
});
export type PackageResult = z.infer<typeof PackageResultSchema>;

export const LoadReportSchema = z.object({
  window: z.object({ from: z.number(), to: z.number() }),
  per_class: z.record(
    z.string(),
    z.object({
      node_count: z.number(),
      busy_seconds: z.number(),
      utilization: z.number(),
    })
  ),
  queue_series: z.array(z.tuple([z.number(), z.number()])),
  terminal_counts: z.record(z.string(), z.number()),
});
export type LoadReport = z.infer<typeof LoadReportSchema>;

export const TERMINAL_STATES = new Set([
  "COMPLETE",
  "EXECUTOR_ERROR",
  "SYSTEM_ERROR",
  "CANCELED",
]);
