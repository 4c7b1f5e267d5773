"""Job queue, profile-driven node-class suggestion, first-fit placement,
and the deterministic discrete-event cluster simulation.

A suggestion is a hard constraint: a job predicted for class X waits
until a node of class X frees up, even if other classes are idle.
Placement is FIFO-with-skip, first fit by ascending node id.
"""

from __future__ import annotations

import dataclasses
import json
import heapq
from dataclasses import dataclass, field

import yaml

from . import cluster as cl
from . import executor as ex
from .catalog import Catalog, ToolDescriptor, ToolError, parse_tool
from .profiler import ProfilerError


class SchedulerError(Exception):
    pass


@dataclass
class QueueEntry:
    task_id: str
    tool_id: str
    bindings: dict
    submit_time: float
    suggestion: str | None = None
    demand: cl.ResourceVector | None = None  # explicit request, if any


@dataclass(frozen=True)
class ScheduleDecision:
    task_id: str
    node_id: str
    start_time: float
    demand: cl.ResourceVector


def suggest_node_class(tool_id: str, bindings: dict, descriptor: ToolDescriptor, profiles) -> str | None:
    """Predicted node class, or None when no profile is stored."""
    profile = profiles.load(tool_id) if profiles is not None else None
    if profile is None:
        return None
    return profile.predict(descriptor, bindings)


@dataclass
class ClusterState:
    """Mutable node allocation state, owned by the scheduler loop."""

    spec: cl.ClusterSpec
    nodes: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.nodes:
            self.nodes = {n.id: n for n in self.spec.nodes}

    def node_ids(self) -> list:
        return sorted(self.nodes)


def default_demand(node_class: cl.NodeClass, jobs_per_node: int = 1) -> cl.ResourceVector:
    """Per-job request when the submission declares none: the class's
    full memory divided by the configured jobs-per-node."""
    return cl.ResourceVector(memory_mb=node_class.capacity.memory_mb // jobs_per_node)


def schedule_tick(
    queue: list,
    state: ClusterState,
    now: float,
    jobs_per_node: int = 1,
) -> list:
    """FIFO-with-skip placement; returns decisions and mutates state/queue."""
    decisions = []
    remaining = []
    for entry in queue:
        placed = None
        for node_id in state.node_ids():
            node = state.nodes[node_id]
            if entry.suggestion is not None and node.class_name != entry.suggestion:
                continue
            demand = entry.demand
            if demand is None:
                demand = default_demand(state.spec.node_class(node.class_name), jobs_per_node)
            if cl.fits(demand, node, state.spec):
                state.nodes[node_id] = cl.allocate(node, demand, state.spec)
                placed = ScheduleDecision(
                    task_id=entry.task_id, node_id=node_id, start_time=now, demand=demand
                )
                break
        if placed is None:
            remaining.append(entry)
        else:
            decisions.append(placed)
    queue[:] = remaining
    return decisions


# ------------------------------------------------------------ simulation

COMPLETION, SUBMISSION = 0, 1  # completions processed before submissions at equal times


@dataclass
class SimulationReport:
    makespan: float
    per_class_busy_seconds: dict
    per_class_busy_by_origin: dict  # "class|tier" -> seconds
    mean_wait_seconds: float
    max_wait_seconds: float
    events: list  # serializable trace

    def to_dict(self) -> dict:
        return {
            "makespan": self.makespan,
            "per_class_busy_seconds": self.per_class_busy_seconds,
            "per_class_busy_by_origin": self.per_class_busy_by_origin,
            "mean_wait_seconds": self.mean_wait_seconds,
            "max_wait_seconds": self.max_wait_seconds,
            "events": self.events,
        }

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.events)


@dataclass
class Scenario:
    cluster: cl.ClusterSpec
    cost_model: ex.SimulatedCostModel
    tools: dict  # tool id -> ToolDescriptor
    submissions: list  # of {at_seconds, tool_id, bindings, request?}
    use_profiles: bool = True
    seed: int = 0
    jobs_per_node: int = 1


def load_scenario(text: str, catalog: Catalog | None = None) -> Scenario:
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise SchedulerError("scenario must be a mapping")
    spec = cl.cluster_spec_from_dict(doc["cluster"])
    cost_model = ex.cost_model_from_dict(doc.get("cost_models", {}))
    tools = {}
    for tool_doc in doc.get("tools", []):
        descriptor = parse_tool(yaml.safe_dump(tool_doc) if isinstance(tool_doc, dict) else tool_doc)
        tools[descriptor.id] = descriptor
    submissions = list(doc.get("submissions", []))
    for sub in submissions:
        tool_id = sub.get("tool_id")
        if tool_id not in tools:
            if catalog is not None:
                try:
                    tools[tool_id] = catalog.get(tool_id)
                    continue
                except ToolError:
                    pass
            raise SchedulerError(f"scenario references unknown tool {tool_id!r}")
    return Scenario(
        cluster=spec,
        cost_model=cost_model,
        tools=tools,
        submissions=submissions,
        use_profiles=bool(doc.get("use_profiles", True)),
        seed=int(doc.get("seed", 0)),
        jobs_per_node=int(doc.get("jobs_per_node", 1)),
    )


def run_simulation(scenario: Scenario, profiles=None) -> SimulationReport:
    """Discrete-event loop over submissions and completions.

    Simultaneous events order by (time, completion-before-submission,
    task id); the trace is byte-identical for equal scenarios and seeds.
    """
    state = ClusterState(spec=scenario.cluster)
    queue: list = []
    events = []  # heap of (time, kind, task_id, payload)
    trace = []

    tasks = {}
    for index, sub in enumerate(scenario.submissions):
        task_id = f"t{index:04d}"
        tool_id = sub["tool_id"]
        if tool_id not in scenario.tools:
            raise SchedulerError(f"unknown tool {tool_id!r}")
        request = None
        if sub.get("request"):
            request = cl.ResourceVector.from_dict(sub["request"])
        tasks[task_id] = {
            "tool_id": tool_id,
            "bindings": sub.get("bindings", {}),
            "submit": float(sub["at_seconds"]),
            "request": request,
        }
        heapq.heappush(events, (float(sub["at_seconds"]), SUBMISSION, task_id, None))

    busy: dict = {}
    busy_by_origin: dict = {}
    waits = []
    running = {}  # task_id -> (node_id, demand, start, duration, tier)
    last_completion = 0.0
    first_submit = min((t["submit"] for t in tasks.values()), default=0.0)

    def tick(now: float):
        for decision in schedule_tick(queue, state, now, scenario.jobs_per_node):
            info = tasks[decision.task_id]
            descriptor = scenario.tools[info["tool_id"]]
            result = ex.run_simulated(
                decision.task_id, descriptor, info["bindings"], scenario.cost_model, scenario.seed
            )
            duration = result.wall_seconds
            tier = info.get("suggestion") or "none"
            running[decision.task_id] = (decision.node_id, decision.demand, now, duration, tier)
            waits.append(now - info["submit"])
            trace.append(
                {
                    "event": "start",
                    "time": now,
                    "task_id": decision.task_id,
                    "node_id": decision.node_id,
                    "duration": duration,
                    "suggestion": info.get("suggestion"),
                }
            )
            heapq.heappush(events, (now + duration, COMPLETION, decision.task_id, None))

    while events:
        now, kind, task_id, _ = heapq.heappop(events)
        if kind == SUBMISSION:
            info = tasks[task_id]
            descriptor = scenario.tools[info["tool_id"]]
            suggestion = None
            if scenario.use_profiles and profiles is not None:
                suggestion = suggest_node_class(info["tool_id"], info["bindings"], descriptor, profiles)
            info["suggestion"] = suggestion
            trace.append(
                {
                    "event": "submit",
                    "time": now,
                    "task_id": task_id,
                    "tool_id": info["tool_id"],
                    "suggestion": suggestion,
                }
            )
            queue.append(
                QueueEntry(
                    task_id=task_id,
                    tool_id=info["tool_id"],
                    bindings=info["bindings"],
                    submit_time=now,
                    suggestion=suggestion,
                    demand=info["request"],
                )
            )
        else:
            node_id, demand, start, duration, tier = running.pop(task_id)
            node = state.nodes[node_id]
            state.nodes[node_id] = cl.release(node, demand)
            class_name = node.class_name
            busy[class_name] = busy.get(class_name, 0.0) + duration
            key = f"{class_name}|{tier}"
            busy_by_origin[key] = busy_by_origin.get(key, 0.0) + duration
            last_completion = max(last_completion, now)
            trace.append(
                {
                    "event": "complete",
                    "time": now,
                    "task_id": task_id,
                    "node_id": node_id,
                    "class": class_name,
                    "tier": tier,
                    "duration": duration,
                }
            )
        tick(now)

    if queue:
        stuck = ", ".join(e.task_id for e in queue)
        raise SchedulerError(f"unschedulable tasks remain: {stuck}")

    makespan = max(0.0, last_completion - first_submit) if tasks else 0.0
    return SimulationReport(
        makespan=makespan,
        per_class_busy_seconds=busy,
        per_class_busy_by_origin=busy_by_origin,
        mean_wait_seconds=sum(waits) / len(waits) if waits else 0.0,
        max_wait_seconds=max(waits) if waits else 0.0,
        events=trace,
    )
