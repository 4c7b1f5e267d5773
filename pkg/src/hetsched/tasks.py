"""TES-style task records: six-state lifecycle, time-sortable ids, and
event-log persistence with snapshot recovery.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, field

QUEUED = "QUEUED"
INITIALIZING = "INITIALIZING"
RUNNING = "RUNNING"
COMPLETE = "COMPLETE"
EXECUTOR_ERROR = "EXECUTOR_ERROR"
SYSTEM_ERROR = "SYSTEM_ERROR"
CANCELED = "CANCELED"

STATES = (QUEUED, INITIALIZING, RUNNING, COMPLETE, EXECUTOR_ERROR, SYSTEM_ERROR, CANCELED)
TERMINAL = (COMPLETE, EXECUTOR_ERROR, SYSTEM_ERROR, CANCELED)

LEGAL_TRANSITIONS = {
    QUEUED: {INITIALIZING, CANCELED},
    INITIALIZING: {RUNNING, SYSTEM_ERROR, CANCELED},
    RUNNING: {COMPLETE, EXECUTOR_ERROR, SYSTEM_ERROR, CANCELED},
    COMPLETE: set(),
    EXECUTOR_ERROR: set(),
    SYSTEM_ERROR: set(),
    CANCELED: set(),
}


class TaskError(Exception):
    pass


class IllegalTransition(TaskError):
    pass


class UnknownTask(TaskError):
    pass


_id_lock = threading.Lock()
_last_ms = 0
_counter = 0


def new_task_id() -> str:
    """ULID-style: millisecond timestamp + per-ms counter + random tail,
    lexicographically sortable by creation time."""
    global _last_ms, _counter
    with _id_lock:
        now_ms = int(time.time() * 1000)
        if now_ms == _last_ms:
            _counter += 1
        else:
            _last_ms = now_ms
            _counter = 0
        return f"{now_ms:013d}{_counter:04d}{secrets.token_hex(4)}"


@dataclass
class TaskRecord:
    id: str
    tool_id: str
    bindings: dict
    state: str = QUEUED
    creation_time: float = field(default_factory=time.time)
    suggestion: str | None = None
    resource_request: dict | None = None
    tags: dict = field(default_factory=dict)
    logs: dict = field(default_factory=dict)  # node_id, start_time, end_time, exit_status, consumption
    outputs: list = field(default_factory=list)

    def transition(self, new_state: str, **log_updates) -> None:
        if new_state not in STATES:
            raise IllegalTransition(f"unknown state {new_state!r}")
        if new_state not in LEGAL_TRANSITIONS[self.state]:
            raise IllegalTransition(f"illegal transition {self.state} -> {new_state}")
        self.state = new_state
        self.logs.update(log_updates)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "tool_id": self.tool_id,
            "bindings": self.bindings,
            "state": self.state,
            "creation_time": self.creation_time,
            "suggestion": self.suggestion,
            "resource_request": self.resource_request,
            "tags": self.tags,
            "logs": self.logs,
            "outputs": self.outputs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TaskRecord":
        return cls(
            id=d["id"],
            tool_id=d["tool_id"],
            bindings=d.get("bindings", {}),
            state=d.get("state", QUEUED),
            creation_time=d.get("creation_time", 0.0),
            suggestion=d.get("suggestion"),
            resource_request=d.get("resource_request"),
            tags=d.get("tags", {}),
            logs=d.get("logs", {}),
            outputs=d.get("outputs", []),
        )

    def minimal_view(self) -> dict:
        return {"id": self.id, "state": self.state}

    def full_view(self) -> dict:
        return self.to_dict()


class TaskStore:
    """Append-only JSONL event log with periodic snapshot; recovery is
    snapshot plus replay. Mutations must come from one control loop."""

    def __init__(self, state_dir: str, snapshot_every: int = 100):
        os.makedirs(state_dir, exist_ok=True)
        self.log_path = os.path.join(state_dir, "tasks.log")
        self.snapshot_path = os.path.join(state_dir, "tasks.snapshot.json")
        self.snapshot_every = snapshot_every
        self._events_since_snapshot = 0
        self._lock = threading.RLock()
        self.tasks: dict = {}
        self._recover()

    def _recover(self) -> None:
        if os.path.exists(self.snapshot_path):
            with open(self.snapshot_path, encoding="utf-8") as fh:
                snap = json.load(fh)
            self.tasks = {d["id"]: TaskRecord.from_dict(d) for d in snap.get("tasks", [])}
        if os.path.exists(self.log_path):
            with open(self.log_path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._apply(json.loads(line))

    def _apply(self, event: dict) -> None:
        kind = event["kind"]
        if kind == "create":
            record = TaskRecord.from_dict(event["task"])
            self.tasks[record.id] = record
        elif kind == "transition":
            record = self.tasks.get(event["task_id"])
            if record is not None and event["state"] in LEGAL_TRANSITIONS[record.state]:
                record.state = event["state"]
                record.logs.update(event.get("logs", {}))
                if event.get("outputs"):
                    record.outputs = event["outputs"]

    def _append(self, event: dict) -> None:
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
        self._events_since_snapshot += 1
        if self._events_since_snapshot >= self.snapshot_every:
            self.snapshot()

    def snapshot(self) -> None:
        with self._lock:
            tmp = self.snapshot_path + ".tmp"
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump({"tasks": [t.to_dict() for t in self.tasks.values()]}, fh)
            os.replace(tmp, self.snapshot_path)
            open(self.log_path, "w").close()
            self._events_since_snapshot = 0

    def create(self, record: TaskRecord) -> TaskRecord:
        with self._lock:
            self.tasks[record.id] = record
            self._append({"kind": "create", "task": record.to_dict()})
            return record

    def transition(self, task_id: str, new_state: str, outputs=None, **log_updates) -> TaskRecord:
        with self._lock:
            record = self.get(task_id)
            record.transition(new_state, **log_updates)
            if outputs is not None:
                record.outputs = outputs
            self._append(
                {
                    "kind": "transition",
                    "task_id": task_id,
                    "state": new_state,
                    "logs": log_updates,
                    "outputs": outputs,
                }
            )
            return record

    def get(self, task_id: str) -> TaskRecord:
        record = self.tasks.get(task_id)
        if record is None:
            raise UnknownTask(f"unknown task {task_id!r}")
        return record

    def list_page(self, page_size: int, page_token: str | None = None, state: str | None = None):
        """Tasks in id (creation) order; token is the last id of the page."""
        with self._lock:
            ids = sorted(self.tasks)
        if page_token:
            if page_token not in self.tasks:
                raise TaskError(f"bad page token {page_token!r}")
            ids = [i for i in ids if i > page_token]
        if state:
            ids = [i for i in ids if self.tasks[i].state == state]
        page = ids[:page_size]
        next_token = page[-1] if len(page) == page_size and len(ids) > page_size else None
        return [self.tasks[i] for i in page], next_token
