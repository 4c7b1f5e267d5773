/** The documented route table of the scheduling service.
 *
 * Every request the client issues must match one of these patterns; the
 * contract test enforces it, and the live service publishes the same
 * table from GET /v1/service-info.
 */

export const ROUTES = [
  "GET /v1/service-info",
  "GET /v1/tools",
  "GET /v1/tools/{id}",
  "GET /v1/tools/{id}/form",
  "GET /v1/tools/{id}/suggest",
  "POST /v1/tasks",
  "GET /v1/tasks",
  "GET /v1/tasks/{id}",
  "POST /v1/tasks/{id}:cancel",
  "POST /v1/tasks/{id}:package",
  "POST /v1/runs",
  "GET /v1/runs/{id}",
  "GET /v1/reports/jobs",
  "GET /v1/reports/load",
] as const;

export type Route = (typeof ROUTES)[number];

function routeRegex(route: string): RegExp {
  const [, path] = route.split(" ") as [string, string];
  // escape regex literals first (braces excluded), then expand placeholders,
  // which may share a segment with a literal suffix, e.g. "{id}:cancel"
  const escaped = path.replace(/[.*+?^$()|[\]\\]/g, "\\$&");
  const pattern = escaped.replace(/\{[a-z_]+\}/g, "[^/:]+");
  return new RegExp(`^${pattern}$`);
}

const compiled = ROUTES.map((route) => ({
  route,
  method: route.split(" ")[0] as string,
  regex: routeRegex(route),
}));

/** Match "METHOD /path" (query string ignored) against the route table. */
export function matchRoute(method: string, path: string): Route | null {
  const bare = path.split("?")[0] as string;
  for (const entry of compiled) {
    if (entry.method === method.toUpperCase() && entry.regex.test(bare)) {
      return entry.route;
    }
  }
  return null;
}
