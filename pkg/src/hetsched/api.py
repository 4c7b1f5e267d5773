"""TES/WES-subset HTTP service.

All state mutations are serialized through one control loop (the
scheduler thread plus a shared lock); handlers read snapshot copies.
Execution uses the simulated runner; simulated seconds map to real
seconds via `time_scale` (0 = instantaneous completion on next tick).
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.staticfiles import StaticFiles

from . import cluster as cl
from . import executor as ex
from . import monitoring
from . import scheduler as sched
from . import tasks as ts
from . import workflow as wf
from .catalog import (
    Catalog,
    ToolError,
    check_bindings,
    descriptor_to_dict,
    form_schema_to_dict,
    parse_tool,
    render_form_schema,
)
from .crate import build_crate, validate_crate, write_crate
from .profiler import ProfileStore

SERVICE_NAME = "hetsched"
SERVICE_VERSION = "0.1.0"

ROUTES = [
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
]


@dataclass
class ServiceConfig:
    state_dir: str
    work_dir: str
    cluster: cl.ClusterSpec
    cost_model: ex.SimulatedCostModel
    seed: int = 0
    time_scale: float = 0.0  # real seconds per simulated second
    jobs_per_node: int = 1
    poll_interval: float = 0.01


@dataclass
class RunRecord:
    id: str
    workflow: wf.WorkflowDescriptor
    plan: wf.DagPlan
    bindings: dict
    step_tasks: dict = field(default_factory=dict)  # step id -> task id
    completed_outputs: dict = field(default_factory=dict)  # "step/out" -> path
    step_states: dict = field(default_factory=dict)  # step id -> state string
    state: str = "RUNNING"

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "workflow_id": self.workflow.id,
            "state": self.state,
            "steps": {
                sid: {"task_id": self.step_tasks.get(sid), "state": self.step_states.get(sid, "PENDING")}
                for sid in self.plan.topo_order
            },
        }


class Service:
    def __init__(self, config: ServiceConfig):
        self.config = config
        os.makedirs(config.work_dir, exist_ok=True)
        self.catalog = Catalog(config.state_dir)
        self.profiles = ProfileStore(config.state_dir)
        self.store = ts.TaskStore(config.state_dir)
        self.stats = monitoring.StatsStore()
        self.cluster_state = sched.ClusterState(spec=config.cluster)
        self.queue: list = []
        self.runs: dict = {}
        self.cancel_requested: set = set()
        self.lock = threading.RLock()
        self.running: dict = {}  # task_id -> (node_id, demand, deadline monotonic)
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._epoch = time.time()

    # ------------------------------------------------------ lifecycle

    def start(self):
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()

    def stop(self):
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def _now(self) -> float:
        return time.time()

    def _loop(self):
        while not self._stop.is_set():
            self.step()
            self._stop.wait(self.config.poll_interval)

    def step(self):
        """One control-loop iteration: finish due jobs, place queued ones."""
        with self.lock:
            now = self._now()
            due = [tid for tid, (_, _, deadline, _) in self.running.items() if time.monotonic() >= deadline]
            for task_id in due:
                self._complete(task_id, now)
            decisions = sched.schedule_tick(self.queue, self.cluster_state, now, self.config.jobs_per_node)
            for decision in decisions:
                self._start(decision, now)
            self.stats.sample_queue(now, len(self.queue))

    def _start(self, decision: sched.ScheduleDecision, now: float):
        record = self.store.get(decision.task_id)
        if record.id in self.cancel_requested:
            node = self.cluster_state.nodes[decision.node_id]
            self.cluster_state.nodes[decision.node_id] = cl.release(node, decision.demand)
            self.store.transition(record.id, ts.CANCELED)
            self.cancel_requested.discard(record.id)
            return
        self.store.transition(record.id, ts.INITIALIZING, node_id=decision.node_id)
        descriptor = self.catalog.get(record.tool_id)
        workspace = os.path.join(self.config.work_dir, record.id)
        result = ex.run_simulated(
            record.id, descriptor, record.bindings, self.config.cost_model, self.config.seed, workspace
        )
        deadline = time.monotonic() + result.wall_seconds * self.config.time_scale
        self.running[record.id] = (decision.node_id, decision.demand, deadline, result)
        self.store.transition(record.id, ts.RUNNING, start_time=now)
        self.stats.record_event(
            {
                "kind": "start",
                "task_id": record.id,
                "time": now,
                "node_id": decision.node_id,
                "node_class": self.cluster_state.nodes[decision.node_id].class_name,
            }
        )

    def _complete(self, task_id: str, now: float):
        node_id, demand, _, result = self.running.pop(task_id)
        node = self.cluster_state.nodes[node_id]
        self.cluster_state.nodes[node_id] = cl.release(node, demand)
        if task_id in self.cancel_requested:
            state = ts.CANCELED
            self.cancel_requested.discard(task_id)
        else:
            state = ts.COMPLETE if result.exit_status == 0 else ts.EXECUTOR_ERROR
        self.store.transition(
            task_id,
            state,
            outputs=[list(o) for o in result.output_files],
            end_time=now,
            exit_status=result.exit_status,
            consumption=result.to_dict(),
        )
        self.stats.record_event(
            {"kind": "terminal", "task_id": task_id, "time": now, "state": state, "consumption": result.to_dict()}
        )
        self._advance_runs(task_id, state)

    # ------------------------------------------------------ tasks

    def create_task(self, tool_id: str, bindings: dict, resource_request=None, tags=None) -> ts.TaskRecord:
        descriptor = self.catalog.get(tool_id)  # raises ToolError when unknown
        resolved = check_bindings(descriptor, bindings)
        with self.lock:
            suggestion = sched.suggest_node_class(tool_id, resolved, descriptor, self.profiles)
            record = ts.TaskRecord(
                id=ts.new_task_id(),
                tool_id=tool_id,
                bindings=resolved,
                suggestion=suggestion,
                resource_request=resource_request,
                tags=tags or {},
            )
            self.store.create(record)
            demand = cl.ResourceVector.from_dict(resource_request) if resource_request else None
            self.queue.append(
                sched.QueueEntry(
                    task_id=record.id,
                    tool_id=tool_id,
                    bindings=resolved,
                    submit_time=record.creation_time,
                    suggestion=suggestion,
                    demand=demand,
                )
            )
            self.stats.record_event(
                {
                    "kind": "submit",
                    "task_id": record.id,
                    "time": record.creation_time,
                    "tool_id": tool_id,
                    "suggestion": suggestion,
                }
            )
            return record

    def cancel_task(self, task_id: str) -> ts.TaskRecord:
        with self.lock:
            record = self.store.get(task_id)
            if record.state in ts.TERMINAL:
                return record  # idempotent no-op
            if record.state == ts.QUEUED:
                self.queue = [e for e in self.queue if e.task_id != task_id]
                return self.store.transition(task_id, ts.CANCELED)
            self.cancel_requested.add(task_id)
            if task_id in self.running:
                node_id, demand, _, result = self.running.pop(task_id)
                node = self.cluster_state.nodes[node_id]
                self.cluster_state.nodes[node_id] = cl.release(node, demand)
                self.cancel_requested.discard(task_id)
                return self.store.transition(task_id, ts.CANCELED)
            return record

    # ------------------------------------------------------ workflows

    def create_run(self, workflow_text: str, bindings: dict) -> RunRecord:
        descriptor = wf.parse_workflow(workflow_text)
        dag = wf.plan(descriptor, resolver=self.catalog.get)
        with self.lock:
            run = RunRecord(
                id=ts.new_task_id(),
                workflow=descriptor,
                plan=dag,
                bindings=dict(bindings),
                step_states={sid: "PENDING" for sid in dag.topo_order},
            )
            self.runs[run.id] = run
            self._submit_ready_steps(run)
            return run

    def _submit_ready_steps(self, run: RunRecord):
        deps = wf.step_dependencies(run.workflow)
        for step in run.workflow.steps:
            if run.step_states[step.id] != "PENDING":
                continue
            if any(run.step_states.get(d) != "COMPLETE" for d in deps[step.id]):
                continue
            job = wf.instantiate_step(step, run.completed_outputs, run.bindings)
            record = self.create_task(job["tool_id"], job["bindings"], tags={"run_id": run.id, "step_id": step.id})
            run.step_tasks[step.id] = record.id
            run.step_states[step.id] = "SUBMITTED"

    def _advance_runs(self, task_id: str, state: str):
        for run in self.runs.values():
            step_id = next((sid for sid, tid in run.step_tasks.items() if tid == task_id), None)
            if step_id is None or run.state != "RUNNING":
                continue
            if state == ts.COMPLETE:
                run.step_states[step_id] = "COMPLETE"
                record = self.store.get(task_id)
                step = next(s for s in run.workflow.steps if s.id == step_id)
                for out_id in step.out:
                    match = next((o for o in record.outputs if o[0] == out_id), None)
                    run.completed_outputs[f"{step_id}/{out_id}"] = match[1] if match else ""
                self._submit_ready_steps(run)
                if all(s == "COMPLETE" for s in run.step_states.values()):
                    run.state = "COMPLETE"
            else:
                run.step_states[step_id] = state
                run.state = "EXECUTOR_ERROR"
                for sid, s in run.step_states.items():
                    if s == "PENDING":
                        run.step_states[sid] = "CANCELED"


def create_app(service: Service) -> FastAPI:
    app = FastAPI(title=SERVICE_NAME, version=SERVICE_VERSION)

    def error(status: int, message: str):
        raise HTTPException(status_code=status, detail=message)

    @app.get("/v1/service-info")
    def service_info():
        return {
            "name": SERVICE_NAME,
            "version": SERVICE_VERSION,
            "endpoints": ROUTES,
            "node_classes": [c.name for c in service.config.cluster.classes],
        }

    @app.get("/v1/tools")
    def list_tools(visibility: str | None = None):
        return {
            "tools": [
                {
                    "descriptor": descriptor_to_dict(r.descriptor),
                    "uploaded_at": r.uploaded_at,
                    "visibility": r.visibility,
                    "has_profile": service.profiles.load(r.descriptor.id) is not None,
                }
                for r in service.catalog.list(visibility)
            ]
        }

    @app.get("/v1/tools/{tool_id}")
    def get_tool(tool_id: str):
        try:
            descriptor = service.catalog.get(tool_id)
        except ToolError as exc:
            error(404, str(exc))
        return {"descriptor": descriptor_to_dict(descriptor)}

    @app.get("/v1/tools/{tool_id}/form")
    def get_form(tool_id: str):
        try:
            descriptor = service.catalog.get(tool_id)
        except ToolError as exc:
            error(404, str(exc))
        return {"fields": form_schema_to_dict(render_form_schema(descriptor))}

    @app.get("/v1/tools/{tool_id}/suggest")
    def get_suggestion(tool_id: str, bindings: str = Query("{}")):
        try:
            descriptor = service.catalog.get(tool_id)
        except ToolError as exc:
            error(404, str(exc))
        try:
            parsed = json.loads(bindings)
            resolved = check_bindings(descriptor, parsed)
        except (json.JSONDecodeError, ToolError) as exc:
            error(400, str(exc))
        suggestion = sched.suggest_node_class(tool_id, resolved, descriptor, service.profiles)
        return {"tool_id": tool_id, "suggestion": suggestion}

    @app.post("/v1/tasks")
    def create_task(body: dict = Body(...)):
        tool_id = body.get("tool_id")
        if not tool_id:
            error(400, "tool_id required")
        try:
            service.catalog.get(tool_id)
        except ToolError as exc:
            error(404, str(exc))
        try:
            record = service.create_task(
                tool_id,
                body.get("bindings", {}),
                resource_request=body.get("resource_request"),
                tags=body.get("tags"),
            )
        except ToolError as exc:
            error(400, str(exc))
        return {"id": record.id}

    @app.get("/v1/tasks")
    def list_tasks(
        page_size: int = Query(50, ge=1, le=1000),
        page_token: str | None = None,
        state: str | None = None,
    ):
        try:
            page, token = service.store.list_page(page_size, page_token, state)
        except ts.TaskError as exc:
            error(400, str(exc))
        return {"tasks": [t.minimal_view() for t in page], "next_page_token": token}

    @app.get("/v1/tasks/{task_id}")
    def get_task(task_id: str, view: str = Query("MINIMAL")):
        try:
            record = service.store.get(task_id)
        except ts.UnknownTask as exc:
            error(404, str(exc))
        return record.full_view() if view.upper() == "FULL" else record.minimal_view()

    @app.post("/v1/tasks/{task_id}:cancel")
    def cancel_task(task_id: str):
        try:
            record = service.cancel_task(task_id)
        except ts.UnknownTask as exc:
            error(404, str(exc))
        return {"id": record.id, "state": record.state}

    @app.post("/v1/tasks/{task_id}:package")
    def package_task(task_id: str, body: dict = Body(default={})):
        try:
            record = service.store.get(task_id)
        except ts.UnknownTask as exc:
            error(404, str(exc))
        if record.state != ts.COMPLETE:
            error(400, f"task is {record.state}, not COMPLETE")
        descriptor = service.catalog.get(record.tool_id)
        from .crate import CrateError

        try:
            package = build_crate(record, descriptor, options=body)
            crate_dir = os.path.join(service.config.state_dir, "crates", record.id)
            manifest = write_crate(package, crate_dir)
        except CrateError as exc:
            error(400, str(exc))
        failures = validate_crate(crate_dir)
        return {"crate_dir": crate_dir, "manifest": manifest, "validation_failures": failures}

    @app.post("/v1/runs")
    def create_run(body: dict = Body(...)):
        workflow_doc = body.get("workflow")
        if workflow_doc is None:
            error(400, "workflow document required")
        text = workflow_doc if isinstance(workflow_doc, str) else json.dumps(workflow_doc)
        try:
            run = service.create_run(text, body.get("bindings", {}))
        except (wf.WorkflowError, ToolError) as exc:
            error(400, str(exc))
        return {"id": run.id}

    @app.get("/v1/runs/{run_id}")
    def get_run(run_id: str):
        run = service.runs.get(run_id)
        if run is None:
            error(404, f"unknown run {run_id!r}")
        return run.to_dict()

    @app.get("/v1/reports/jobs")
    def report_jobs(tool_id: str | None = None, state: str | None = None, since: float | None = None):
        return {"jobs": [r.to_dict() for r in service.stats.job_report(tool_id, state, since)]}

    @app.get("/v1/reports/load")
    def report_load(
        window_from: float = Query(None, alias="from"),
        window_to: float = Query(None, alias="to"),
    ):
        now = time.time()
        window_from = window_from if window_from is not None else service._epoch
        window_to = window_to if window_to is not None else now
        try:
            return service.stats.cluster_load_report(window_from, window_to, service.config.cluster)
        except monitoring.MonitoringError as exc:
            error(400, str(exc))

    ui_dir = os.path.join(os.path.dirname(__file__), "ui")
    if os.path.isdir(ui_dir):
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
