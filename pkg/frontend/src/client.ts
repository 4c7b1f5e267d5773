import { matchRoute } from "./routes.js";
import {
  FormField,
  FormSchema,
  LoadReport,
  LoadReportSchema,
  PackageResult,
  PackageResultSchema,
  ServiceInfo,
  ServiceInfoSchema,
  SuggestionSchema,
  TaskFull,
  TaskFullSchema,
  TaskMinimal,
  TaskPageSchema,
  ToolListSchema,
  ToolSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number
  ) {
    super(message);
  }
}

export interface RequestLogEntry {
  method: string;
  path: string;
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the documented JSON routes.
 *
 * Every call goes through request(), which refuses to issue anything not
 * in the route table and keeps a log the contract test inspects.
 */
export class ApiClient {
  readonly requestLog: RequestLogEntry[] = [];

  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch
  ) {}

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    if (matchRoute(method, path) === null) {
      throw new Error(`refusing undocumented endpoint: ${method} ${path}`);
    }
    this.requestLog.push({ method, path });
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { "Content-Type": "application/json" };
    }
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    const text = await resp.text();
    if (!resp.ok) {
      let detail = text;
      try {
        detail = (JSON.parse(text) as { detail?: string }).detail ?? text;
      } catch {
        // non-JSON error body, keep raw text
      }
      throw new ApiError(detail, resp.status);
    }
    return JSON.parse(text);
  }

  async serviceInfo(): Promise<ServiceInfo> {
    return ServiceInfoSchema.parse(await this.request("GET", "/v1/service-info"));
  }

  async listTools(): Promise<ToolSummary[]> {
    return ToolListSchema.parse(await this.request("GET", "/v1/tools")).tools;
  }

  async toolForm(toolId: string): Promise<FormField[]> {
    const doc = await this.request("GET", `/v1/tools/${encodeURIComponent(toolId)}/form`);
    return FormSchema.parse(doc).fields;
  }

  async suggest(toolId: string, bindings: Record<string, unknown>): Promise<string | null> {
    const query = encodeURIComponent(JSON.stringify(bindings));
    const doc = await this.request(
      "GET",
      `/v1/tools/${encodeURIComponent(toolId)}/suggest?bindings=${query}`
    );
    return SuggestionSchema.parse(doc).suggestion;
  }

  async submitTask(toolId: string, bindings: Record<string, unknown>): Promise<string> {
    const doc = (await this.request("POST", "/v1/tasks", {
      tool_id: toolId,
      bindings,
    })) as { id: string };
    return doc.id;
  }

  async getTask(taskId: string): Promise<TaskFull> {
    const doc = await this.request("GET", `/v1/tasks/${encodeURIComponent(taskId)}?view=FULL`);
    return TaskFullSchema.parse(doc);
  }

  async listTasks(pageSize = 50, pageToken?: string): Promise<{ tasks: TaskMinimal[]; nextPageToken: string | null }> {
    let path = `/v1/tasks?page_size=${pageSize}`;
    if (pageToken) path += `&page_token=${encodeURIComponent(pageToken)}`;
    const doc = TaskPageSchema.parse(await this.request("GET", path));
    return { tasks: doc.tasks, nextPageToken: doc.next_page_token };
  }

  async cancelTask(taskId: string): Promise<TaskMinimal> {
    return (await this.request(
      "POST",
      `/v1/tasks/${encodeURIComponent(taskId)}:cancel`
    )) as TaskMinimal;
  }

  async packageTask(taskId: string, options: { doi?: string; author?: string } = {}): Promise<PackageResult> {
    const doc = await this.request(
      "POST",
      `/v1/tasks/${encodeURIComponent(taskId)}:package`,
      options
    );
    return PackageResultSchema.parse(doc);
  }

  async loadReport(windowFrom?: number, windowTo?: number): Promise<LoadReport> {
    const params = new URLSearchParams();
    if (windowFrom !== undefined) params.set("from", String(windowFrom));
    if (windowTo !== undefined) params.set("to", String(windowTo));
    const suffix = params.size ? `?${params}` : "";
    return LoadReportSchema.parse(await this.request("GET", `/v1/reports/load${suffix}`));
  }
}
