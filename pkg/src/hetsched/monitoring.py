"""Monitoring: per-job statistics and cluster-load reports derived from
the task lifecycle event log (single source of truth, no separate DB).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import tasks as ts


class MonitoringError(Exception):
    pass


@dataclass
class JobStatRecord:
    task_id: str
    tool_id: str
    submit_time: float
    start_time: float | None = None
    end_time: float | None = None
    node_id: str | None = None
    node_class: str | None = None
    suggestion_used: bool = False
    consumption: dict | None = None
    final_state: str | None = None

    @property
    def wait_seconds(self) -> float | None:
        if self.start_time is None:
            return None
        return max(0.0, self.start_time - self.submit_time)

    @property
    def run_seconds(self) -> float | None:
        if self.start_time is None or self.end_time is None:
            return None
        return self.end_time - self.start_time

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "tool_id": self.tool_id,
            "submit_time": self.submit_time,
            "start_time": self.start_time,
            "end_time": self.end_time,
            "wait_seconds": self.wait_seconds,
            "run_seconds": self.run_seconds,
            "node_id": self.node_id,
            "node_class": self.node_class,
            "suggestion_used": self.suggestion_used,
            "consumption": self.consumption,
            "final_state": self.final_state,
        }


@dataclass
class StatsStore:
    records: dict = field(default_factory=dict)
    queue_series: list = field(default_factory=list)  # (time, queue length)
    terminal_counts: dict = field(default_factory=dict)

    def record_event(self, event: dict) -> None:
        """Apply one lifecycle event: submit / start / complete-style
        transitions keyed by task_id."""
        kind = event["kind"]
        task_id = event["task_id"]
        if kind == "submit":
            self.records[task_id] = JobStatRecord(
                task_id=task_id,
                tool_id=event.get("tool_id", ""),
                submit_time=event["time"],
                suggestion_used=event.get("suggestion") is not None,
            )
            return
        record = self.records.get(task_id)
        if record is None:
            raise MonitoringError(f"event for unknown task {task_id!r}")
        if record.final_state is not None:
            raise MonitoringError(f"task {task_id!r} already terminal")
        if kind == "start":
            record.start_time = event["time"]
            record.node_id = event.get("node_id")
            record.node_class = event.get("node_class")
        elif kind == "terminal":
            record.end_time = event["time"]
            record.final_state = event.get("state", ts.COMPLETE)
            record.consumption = event.get("consumption")
            self.terminal_counts[record.final_state] = (
                self.terminal_counts.get(record.final_state, 0) + 1
            )
        else:
            raise MonitoringError(f"unknown event kind {kind!r}")

    def sample_queue(self, time_point: float, length: int) -> None:
        self.queue_series.append((time_point, length))

    def job_report(self, tool_id=None, state=None, since=None) -> list:
        out = [
            r
            for r in self.records.values()
            if (tool_id is None or r.tool_id == tool_id)
            and (state is None or r.final_state == state)
            and (since is None or r.submit_time >= since)
        ]
        return sorted(out, key=lambda r: (r.submit_time, r.task_id))

    def cluster_load_report(self, window_from: float, window_to: float, cluster) -> dict:
        """Utilization per class over the window; busy intervals clipped."""
        if window_to <= window_from:
            raise MonitoringError("empty report window")
        length = window_to - window_from
        node_counts: dict = {}
        for node in cluster.nodes:
            node_counts[node.class_name] = node_counts.get(node.class_name, 0) + 1
        busy: dict = {name: 0.0 for name in node_counts}
        for r in self.records.values():
            if r.start_time is None or r.node_class is None:
                continue
            end = r.end_time if r.end_time is not None else window_to
            lo = max(r.start_time, window_from)
            hi = min(end, window_to)
            if hi > lo:
                busy[r.node_class] = busy.get(r.node_class, 0.0) + (hi - lo)
        per_class = {}
        for name, count in node_counts.items():
            per_class[name] = {
                "node_count": count,
                "busy_seconds": busy.get(name, 0.0),
                "utilization": min(1.0, busy.get(name, 0.0) / (count * length)) if count else 0.0,
            }
        return {
            "window": {"from": window_from, "to": window_to},
            "per_class": per_class,
            "queue_series": [
                [t, q] for t, q in self.queue_series if window_from <= t <= window_to
            ],
            "terminal_counts": dict(self.terminal_counts),
        }


def stats_from_simulation(report) -> StatsStore:
    """Materialize job stats from a SimulationReport event trace."""
    store = StatsStore()
    class_by_task = {}
    for event in report.events:
        if event["event"] == "submit":
            store.record_event(
                {
                    "kind": "submit",
                    "task_id": event["task_id"],
                    "time": event["time"],
                    "tool_id": event.get("tool_id", ""),
                    "suggestion": event.get("suggestion"),
                }
            )
        elif event["event"] == "start":
            store.record_event(
                {
                    "kind": "start",
                    "task_id": event["task_id"],
                    "time": event["time"],
                    "node_id": event.get("node_id"),
                    "node_class": class_by_task.get(event["task_id"]),
                }
            )
        elif event["event"] == "complete":
            record = store.records.get(event["task_id"])
            if record is not None:
                record.node_class = event.get("class")
            store.record_event(
                {
                    "kind": "terminal",
                    "task_id": event["task_id"],
                    "time": event["time"],
                    "state": "COMPLETE",
                }
            )
    return store
