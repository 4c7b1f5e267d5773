import { LoadReport } from "./types.js";

export interface UtilizationBar {
  nodeClass: string;
  nodeCount: number;
  utilizationPct: number; // 0..100, rounded to one decimal
  busySeconds: number;
}

export interface DashboardView {
  bars: UtilizationBar[];
  queueSeries: Array<[number, number]>;
  terminalCounts: Record<string, number>;
}

/** Shape a load report into chart-ready data; bar order is stable. */
export function dashboardView(report: LoadReport): DashboardView {
  const bars = Object.entries(report.per_class)
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([nodeClass, stats]) => ({
      nodeClass,
      nodeCount: stats.node_count,
      utilizationPct: Math.round(stats.utilization * 1000) / 10,
      busySeconds: stats.busy_seconds,
    }));
  return {
    bars,
    queueSeries: report.queue_series,
    terminalCounts: report.terminal_counts,
  };
}
