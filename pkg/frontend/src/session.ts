import { ApiClient } from "./client.js";
import { ServiceInfo, TERMINAL_STATES, TaskFull } from "./types.js";

const MIN_POLL_MS = 500;

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/** Session config is the only client-side state that survives a reload;
 * everything else re-derives from polling. */
export class UiSession {
  readonly pollIntervalMs: number;
  private info: ServiceInfo | null = null;

  constructor(
    readonly client: ApiClient,
    pollIntervalMs = 2000
  ) {
    this.pollIntervalMs = Math.max(MIN_POLL_MS, pollIntervalMs);
  }

  async serviceInfo(): Promise<ServiceInfo> {
    if (this.info === null) {
      this.info = await this.client.serviceInfo();
    }
    return this.info;
  }

  /** Poll the task until it reaches a terminal state. */
  async pollToTerminal(
    taskId: string,
    opts: { timeoutMs?: number; onUpdate?: (task: TaskFull) => void } = {}
  ): Promise<TaskFull> {
    const deadline = Date.now() + (opts.timeoutMs ?? 60_000);
    for (;;) {
      const task = await this.client.getTask(taskId);
      opts.onUpdate?.(task);
      if (TERMINAL_STATES.has(task.state)) {
        return task;
      }
      if (Date.now() > deadline) {
        throw new Error(`task ${taskId} still ${task.state} after timeout`);
      }
      await sleep(this.pollIntervalMs);
    }
  }
}
