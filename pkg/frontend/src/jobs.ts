import { ApiClient } from "./client.js";
import { PackageResult, TaskMinimal } from "./types.js";

export interface JobRow {
  id: string;
  state: string;
  rerunEnabled: boolean;
  packageEnabled: boolean;
  packageTooltip: string | null;
}

/** Job history page: paginated task list with rerun and package actions. */
export class JobHistory {
  constructor(private readonly client: ApiClient) {}

  async page(pageSize = 20, pageToken?: string): Promise<{ rows: JobRow[]; nextPageToken: string | null }> {
    const { tasks, nextPageToken } = await this.client.listTasks(pageSize, pageToken);
    return { rows: tasks.map((t) => toRow(t)), nextPageToken };
  }

  /** Rerun resubmits the stored bindings of a completed task as a new task. */
  async rerun(taskId: string): Promise<{ newTaskId: string; bindings: Record<string, unknown> }> {
    const task = await this.client.getTask(taskId);
    if (task.state !== "COMPLETE") {
      throw new Error(`can only rerun COMPLETE tasks (task is ${task.state})`);
    }
    const newTaskId = await this.client.submitTask(task.tool_id, task.bindings);
    return { newTaskId, bindings: task.bindings };
  }

  async package(taskId: string, options: { doi?: string; author?: string } = {}): Promise<PackageResult> {
    return this.client.packageTask(taskId, options);
  }
}

function toRow(task: TaskMinimal): JobRow {
  const complete = task.state === "COMPLETE";
  return {
    id: task.id,
    state: task.state,
    rerunEnabled: complete,
    packageEnabled: complete,
    packageTooltip: complete ? null : `cannot package a ${task.state} task`,
  };
}
