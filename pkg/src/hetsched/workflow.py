"""CWL-subset Workflow parsing and DAG planning.

Plans are deterministic: Kahn's algorithm with the ready set processed in
lexicographic step-id order, so identical documents yield identical plans.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .catalog import InputParameter, ToolError, _iter_named, _parse_type, load_document


class WorkflowError(Exception):
    """Invalid workflow document or unsatisfiable plan."""


@dataclass(frozen=True)
class WorkflowStep:
    id: str
    run: str  # tool reference
    in_sources: tuple  # of (step input id, source)
    out: tuple  # output ids


@dataclass(frozen=True)
class WorkflowDescriptor:
    id: str
    inputs: tuple  # of InputParameter
    outputs: tuple  # of (id, source "step/out")
    steps: tuple  # of WorkflowStep


@dataclass(frozen=True)
class DagPlan:
    edges: frozenset  # of (producer step id, consumer step id)
    topo_order: tuple


def parse_workflow(text: str) -> WorkflowDescriptor:
    doc = load_document(text)
    if doc.get("class") != "Workflow":
        raise WorkflowError(f"unknown class {doc.get('class')!r} (expected Workflow)")

    inputs = []
    for input_id, body in _iter_named(doc.get("inputs")):
        try:
            ptype, required, enum_values = _parse_type(body.get("type"), input_id)
        except ToolError as exc:
            raise WorkflowError(str(exc)) from exc
        inputs.append(
            InputParameter(
                id=input_id,
                param_type=ptype,
                required=required,
                default=body.get("default"),
                enum_values=enum_values,
            )
        )

    steps = []
    seen = set()
    for step_id, body in _iter_named(doc.get("steps")):
        if step_id in seen:
            raise WorkflowError(f"duplicate step id {step_id!r}")
        seen.add(step_id)
        run = body.get("run")
        if not isinstance(run, str) or not run:
            raise WorkflowError(f"step {step_id!r}: 'run' must be a tool reference string")
        in_map = body.get("in") or {}
        if not isinstance(in_map, dict):
            raise WorkflowError(f"step {step_id!r}: 'in' must be a mapping")
        in_sources = tuple((str(k), str(v.get("source") if isinstance(v, dict) else v)) for k, v in in_map.items())
        out = tuple(str(o) for o in body.get("out", ()))
        steps.append(WorkflowStep(id=step_id, run=run, in_sources=in_sources, out=out))

    input_ids = {p.id for p in inputs}
    declared_outputs = {f"{s.id}/{o}" for s in steps for o in s.out}
    for s in steps:
        for _, source in s.in_sources:
            if source not in input_ids and source not in declared_outputs:
                raise WorkflowError(f"step {s.id!r}: unresolved source {source!r}")

    outputs = []
    for out_id, body in _iter_named(doc.get("outputs")):
        source = str(body.get("outputSource") or body.get("source") or "")
        if source and source not in declared_outputs:
            raise WorkflowError(f"workflow output {out_id!r}: unresolved source {source!r}")
        outputs.append((out_id, source))

    return WorkflowDescriptor(
        id=str(doc.get("id", "workflow")),
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        steps=tuple(steps),
    )


def step_dependencies(workflow: WorkflowDescriptor) -> dict:
    """step id -> set of producer step ids."""
    deps = {s.id: set() for s in workflow.steps}
    for s in workflow.steps:
        for _, source in s.in_sources:
            if "/" in source:
                deps[s.id].add(source.split("/", 1)[0])
    return deps


def plan(workflow: WorkflowDescriptor, resolver=None) -> DagPlan:
    """Topologically order the steps; resolver maps tool refs to descriptors."""
    if resolver is not None:
        for s in workflow.steps:
            try:
                resolver(s.run)
            except Exception as exc:
                raise WorkflowError(f"step {s.id!r}: unresolvable tool ref {s.run!r}: {exc}") from exc

    deps = step_dependencies(workflow)
    edges = frozenset((p, c) for c, ps in deps.items() for p in ps)
    indegree = {sid: len(ps) for sid, ps in deps.items()}
    ready = [sid for sid, deg in indegree.items() if deg == 0]
    heapq.heapify(ready)
    consumers = {sid: [] for sid in deps}
    for producer, consumer in edges:
        consumers[producer].append(consumer)

    order = []
    while ready:
        sid = heapq.heappop(ready)
        order.append(sid)
        for consumer in sorted(consumers[sid]):
            indegree[consumer] -= 1
            if indegree[consumer] == 0:
                heapq.heappush(ready, consumer)
    if len(order) != len(deps):
        stuck = sorted(sid for sid, deg in indegree.items() if deg > 0)
        raise WorkflowError(f"cycle detected involving step {stuck[0]!r}")
    return DagPlan(edges=edges, topo_order=tuple(order))


def instantiate_step(step: WorkflowStep, completed_outputs: dict, workflow_bindings: dict) -> dict:
    """Resolve a step's input sources into concrete bindings.

    Returns {"tool_id": ..., "bindings": {...}}; the caller wraps this
    into a full JobSpec for submission.
    """
    bindings = {}
    for input_id, source in step.in_sources:
        if "/" in source:
            if source not in completed_outputs:
                raise WorkflowError(f"step {step.id!r}: missing upstream output {source!r}")
            bindings[input_id] = completed_outputs[source]
        else:
            if source not in workflow_bindings:
                raise WorkflowError(f"step {step.id!r}: missing workflow input {source!r}")
            bindings[input_id] = workflow_bindings[source]
    return {"tool_id": step.run, "bindings": bindings}
