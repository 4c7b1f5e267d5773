import random

import pytest
import yaml
from hypothesis import given, settings, strategies as st

from hetsched import workflow as wf

DIAMOND = """
cwlVersion: v1.0
class: Workflow
id: diamond
inputs:
  seed_file: {type: File}
steps:
  A:
    run: splitter
    in: {data: seed_file}
    out: [left, right]
  B:
    run: mapper
    in: {part: A/left}
    out: [out]
  C:
    run: mapper
    in: {part: A/right}
    out: [out]
  D:
    run: joiner
    in: {x: B/out, y: C/out}
    out: [merged]
outputs:
  merged: {outputSource: D/merged}
"""


def test_parse_single_step():
    text = """
class: Workflow
inputs:
  k: {type: int}
steps:
  only:
    run: tool
    in: {k: k}
    out: [out]
outputs: {}
"""
    d = wf.parse_workflow(text)
    assert len(d.steps) == 1
    assert wf.plan(d).edges == frozenset()


def test_unresolved_source():
    text = """
class: Workflow
inputs: {}
steps:
  s:
    run: tool
    in: {x: missing/out}
    out: [out]
outputs: {}
"""
    with pytest.raises(wf.WorkflowError, match="unresolved source"):
        wf.parse_workflow(text)


def test_unknown_class():
    with pytest.raises(wf.WorkflowError, match="unknown class"):
        wf.parse_workflow("{class: CommandLineTool, inputs: {}, steps: {}, outputs: {}}")


def test_duplicate_step_id():
    text = """
class: Workflow
inputs: {k: {type: int}}
steps:
  - {id: s, run: tool, in: {x: k}, out: [out]}
  - {id: s, run: tool, in: {x: k}, out: [out]}
outputs: {}
"""
    with pytest.raises(wf.WorkflowError, match="duplicate step id"):
        wf.parse_workflow(text)


def test_diamond_parse_and_plan():
    d = wf.parse_workflow(DIAMOND)
    assert len(d.steps) == 4
    p = wf.plan(d)
    # hand-traced Kahn run with lexicographic tie-breaking
    assert p.topo_order == ("A", "B", "C", "D")
    assert p.edges == frozenset({("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")})


def test_self_loop_cycle():
    text = """
class: Workflow
inputs: {}
steps:
  X:
    run: tool
    in: {x: X/out}
    out: [out]
outputs: {}
"""
    d = wf.parse_workflow(text)
    with pytest.raises(wf.WorkflowError, match="cycle detected involving step 'X'"):
        wf.plan(d)


def test_empty_workflow_plan():
    d = wf.parse_workflow("{class: Workflow, inputs: {}, steps: {}, outputs: {}}")
    assert wf.plan(d).topo_order == ()


def test_unresolvable_tool_ref():
    d = wf.parse_workflow(DIAMOND)

    def resolver(ref):
        raise KeyError(ref)

    with pytest.raises(wf.WorkflowError, match="unresolvable tool ref"):
        wf.plan(d, resolver)


def test_plan_determinism():
    a = wf.plan(wf.parse_workflow(DIAMOND))
    b = wf.plan(wf.parse_workflow(DIAMOND))
    assert a == b


class TestInstantiateStep:
    def step(self):
        return wf.parse_workflow(DIAMOND).steps[3]  # D

    def test_missing_upstream(self):
        with pytest.raises(wf.WorkflowError, match="missing upstream"):
            wf.instantiate_step(self.step(), {"B/out": "/tmp/b"}, {})

    def test_resolved_bindings(self):
        job = wf.instantiate_step(self.step(), {"B/out": "/tmp/b", "C/out": "/tmp/c"}, {})
        assert job == {"tool_id": "joiner", "bindings": {"x": "/tmp/b", "y": "/tmp/c"}}

    def test_workflow_input_and_step_output_mix(self):
        text = """
class: Workflow
inputs: {k: {type: int}}
steps:
  A: {run: t, in: {}, out: [out]}
  B: {run: t, in: {n: k, prev: A/out}, out: [out]}
outputs: {}
"""
        d = wf.parse_workflow(text)
        job = wf.instantiate_step(d.steps[1], {"A/out": "/tmp/a"}, {"k": 3})
        assert job["bindings"] == {"n": 3, "prev": "/tmp/a"}


def random_dag_doc(rng, n):
    steps = {}
    ids = [f"s{i:02d}" for i in range(n)]
    for i, sid in enumerate(ids):
        sources = {}
        for j in range(i):
            if rng.random() < 0.3:
                sources[f"in{j}"] = f"{ids[j]}/out"
        steps[sid] = {"run": "tool", "in": sources, "out": ["out"]}
    return {"class": "Workflow", "inputs": {}, "steps": steps, "outputs": {}}


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 20))
def test_topo_order_respects_every_edge(seed, n):
    rng = random.Random(seed)
    d = wf.parse_workflow(yaml.safe_dump(random_dag_doc(rng, n)))
    p = wf.plan(d)
    assert sorted(p.topo_order) == sorted(s.id for s in d.steps)
    position = {sid: i for i, sid in enumerate(p.topo_order)}
    for producer, consumer in p.edges:
        assert position[producer] < position[consumer]
