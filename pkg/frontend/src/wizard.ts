import { ApiClient } from "./client.js";
import { FormField } from "./types.js";

export interface WizardState {
  toolId: string;
  // field id -> list of alternative values to grid over
  alternatives: Map<string, unknown[]>;
}

/** Total simulated runs the grid would execute (cartesian product). */
export function previewRunCount(state: WizardState): number {
  let total = 1;
  for (const values of state.alternatives.values()) {
    total *= values.length;
  }
  return state.alternatives.size === 0 ? 0 : total;
}

export function previewLabel(state: WizardState): string {
  const n = previewRunCount(state);
  return n === 1 ? "1 run" : `${n} runs`;
}

/** Require every required input to have at least one alternative before
 * the wizard allows launching. */
export function wizardReady(state: WizardState, schema: FormField[]): boolean {
  return schema
    .filter((f) => f.required)
    .every((f) => (state.alternatives.get(f.field_id)?.length ?? 0) > 0);
}

/** "profile active" preview on the submission form: ask the service for
 * the class prediction under the current values. */
export async function predictionPreview(
  client: ApiClient,
  toolId: string,
  bindings: Record<string, unknown>
): Promise<string> {
  const suggestion = await client.suggest(toolId, bindings);
  return suggestion === null ? "no profile" : `profile active: ${suggestion}`;
}
