import random

import pytest
from hypothesis import given, settings, strategies as st

from hetsched import tasks as ts


def record(state=ts.QUEUED):
    r = ts.TaskRecord(id=ts.new_task_id(), tool_id="t", bindings={})
    r.state = state
    return r


class TestStateMachine:
    def test_legal_happy_path(self):
        r = record()
        for s in (ts.INITIALIZING, ts.RUNNING, ts.COMPLETE):
            r.transition(s)
        assert r.state == ts.COMPLETE

    def test_terminal_immutable(self):
        r = record(ts.COMPLETE)
        with pytest.raises(ts.IllegalTransition):
            r.transition(ts.RUNNING)

    def test_canceled_to_running_rejected(self):
        r = record(ts.CANCELED)
        with pytest.raises(ts.IllegalTransition):
            r.transition(ts.RUNNING)

    @settings(max_examples=300)
    @given(st.sampled_from(ts.STATES), st.sampled_from(ts.STATES))
    def test_fuzz_rejects_all_illegal_transitions(self, a, b):
        r = record(a)
        if b in ts.LEGAL_TRANSITIONS[a]:
            r.transition(b)
            assert r.state == b
        else:
            with pytest.raises(ts.IllegalTransition):
                r.transition(b)
            assert r.state == a


class TestIds:
    def test_sortable_and_unique(self):
        ids = [ts.new_task_id() for _ in range(200)]
        assert ids == sorted(ids)
        assert len(set(ids)) == 200


class TestStore:
    def test_create_get(self, tmp_path):
        store = ts.TaskStore(str(tmp_path))
        r = store.create(record())
        assert store.get(r.id).id == r.id

    def test_unknown_task(self, tmp_path):
        with pytest.raises(ts.UnknownTask):
            ts.TaskStore(str(tmp_path)).get("nope")

    def test_recovery_from_log(self, tmp_path):
        store = ts.TaskStore(str(tmp_path))
        r = store.create(record())
        store.transition(r.id, ts.INITIALIZING)
        store.transition(r.id, ts.RUNNING, start_time=1.0)
        recovered = ts.TaskStore(str(tmp_path))
        assert recovered.get(r.id).state == ts.RUNNING
        assert recovered.get(r.id).logs["start_time"] == 1.0

    def test_recovery_with_snapshot(self, tmp_path):
        store = ts.TaskStore(str(tmp_path), snapshot_every=5)
        made = [store.create(record()) for _ in range(8)]
        for r in made[:4]:
            store.transition(r.id, ts.CANCELED)
        recovered = ts.TaskStore(str(tmp_path))
        assert len(recovered.tasks) == 8
        assert recovered.get(made[0].id).state == ts.CANCELED

    def test_pagination_gap_free(self, tmp_path):
        store = ts.TaskStore(str(tmp_path))
        made = [store.create(record()) for _ in range(50)]
        seen = []
        token = None
        while True:
            page, token = store.list_page(7, token)
            seen.extend(t.id for t in page)
            if token is None:
                break
        assert seen == sorted(r.id for r in made)
        assert len(set(seen)) == 50

    def test_bad_token(self, tmp_path):
        store = ts.TaskStore(str(tmp_path))
        store.create(record())
        with pytest.raises(ts.TaskError, match="bad page token"):
            store.list_page(10, "bogus")

    def test_state_filter(self, tmp_path):
        store = ts.TaskStore(str(tmp_path))
        a = store.create(record())
        b = store.create(record())
        store.transition(a.id, ts.CANCELED)
        page, _ = store.list_page(10, state=ts.CANCELED)
        assert [t.id for t in page] == [a.id]
