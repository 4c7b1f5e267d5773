import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/client.js";
import { ROUTES, matchRoute } from "../src/routes.js";

const CANNED: Record<string, unknown> = {
  "GET /v1/service-info": { name: "hetsched", version: "0", endpoints: [...ROUTES], node_classes: [] },
  "GET /v1/tools": { tools: [] },
  "GET /v1/tools/{id}/form": { fields: [] },
  "GET /v1/tools/{id}/suggest": { tool_id: "t", suggestion: null },
  "POST /v1/tasks": { id: "t1" },
  "GET /v1/tasks": { tasks: [], next_page_token: null },
  "GET /v1/tasks/{id}": { id: "t1", state: "QUEUED", tool_id: "t", bindings: {}, logs: {}, outputs: [] },
  "POST /v1/tasks/{id}:cancel": { id: "t1", state: "CANCELED" },
  "POST /v1/tasks/{id}:package": { crate_dir: "d", manifest: [], validation_failures: [] },
  "GET /v1/reports/load": {
    window: { from: 0, to: 1 },
    per_class: {},
    queue_series: [],
    terminal_counts: {},
  },
};

function fakeFetch(url: string, init?: RequestInit): Promise<Response> {
  const path = url.replace("http://test", "");
  const route = matchRoute(init?.method ?? "GET", path);
  const body = route ? CANNED[route] : undefined;
  if (body === undefined) {
    return Promise.resolve(new Response(JSON.stringify({ detail: "no canned reply" }), { status: 500 }));
  }
  return Promise.resolve(new Response(JSON.stringify(body), { status: 200 }));
}

describe("route contract", () => {
  it("every client method stays inside the documented route table", async () => {
    const client = new ApiClient("http://test", fakeFetch);
    await client.serviceInfo();
    await client.listTools();
    await client.toolForm("memtool");
    await client.suggest("memtool", { file_mb: 500 });
    await client.submitTask("memtool", { file_mb: 500 });
    await client.getTask("t1");
    await client.listTasks(10, "tok");
    await client.cancelTask("t1");
    await client.packageTask("t1", { doi: "10.5072/mock.1" });
    await client.loadReport(0, 100);

    expect(client.requestLog.length).toBe(10);
    for (const { method, path } of client.requestLog) {
      expect(matchRoute(method, path), `${method} ${path}`).not.toBeNull();
    }
  });

  it("refuses to issue a request to an undocumented endpoint", async () => {
    const client = new ApiClient("http://test", fakeFetch);
    const request = (client as unknown as {
      request(method: string, path: string): Promise<unknown>;
    }).request.bind(client);
    await expect(request("GET", "/v1/secrets")).rejects.toThrow(/undocumented endpoint/);
    await expect(request("DELETE", "/v1/tasks/t1")).rejects.toThrow(/undocumented endpoint/);
    expect(client.requestLog.length).toBe(0);
  });

  it("matchRoute distinguishes path-shaped lookalikes", () => {
    expect(matchRoute("GET", "/v1/tasks/abc")).toBe("GET /v1/tasks/{id}");
    expect(matchRoute("POST", "/v1/tasks/abc:cancel")).toBe("POST /v1/tasks/{id}:cancel");
    expect(matchRoute("GET", "/v1/tasks/abc/extra")).toBeNull();
    expect(matchRoute("GET", "/v1/tools/x/form?y=1")).toBe("GET /v1/tools/{id}/form");
    expect(matchRoute("PUT", "/v1/tasks")).toBeNull();
  });
});
