import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from hetsched import executor as ex
from hetsched import profiler as prof
from hetsched.catalog import parse_tool
from hetsched.features import FeatureSchema, build_schema

GRID_TOOL = """
cwlVersion: v1.0
class: CommandLineTool
id: gridtool
baseCommand: [run]
inputs:
  k: {type: int, inputBinding: {position: 1}}
  mode:
    type: {type: enum, symbols: [a, b, c]}
outputs: []
"""


def grid_tool():
    return parse_tool(GRID_TOOL)


class TestExpandGrid:
    def test_cartesian_order(self):
        req = prof.ProfilingRequest("gridtool", {"k": [1, 2], "mode": ["a", "b", "c"]})
        grid = prof.expand_grid(req, grid_tool())
        assert grid == [
            {"k": 1, "mode": "a"},
            {"k": 1, "mode": "b"},
            {"k": 1, "mode": "c"},
            {"k": 2, "mode": "a"},
            {"k": 2, "mode": "b"},
            {"k": 2, "mode": "c"},
        ]

    def test_single_value(self):
        req = prof.ProfilingRequest("gridtool", {"k": [1], "mode": ["a"]})
        assert len(prof.expand_grid(req, grid_tool())) == 1

    def test_grid_too_large(self):
        req = prof.ProfilingRequest(
            "gridtool", {"k": list(range(1000)), "mode": ["a", "b"]}, max_runs=500
        )
        with pytest.raises(prof.ProfilerError, match="grid too large"):
            prof.expand_grid(req, grid_tool())

    def test_missing_required_input(self):
        req = prof.ProfilingRequest("gridtool", {"k": [1]})
        with pytest.raises(prof.ProfilerError, match="missing required"):
            prof.expand_grid(req, grid_tool())

    @settings(max_examples=50)
    @given(st.lists(st.integers(1, 5), min_size=1, max_size=4))
    def test_length_is_product(self, sizes):
        inputs = "\n".join(f"  p{i}: {{type: int}}" for i in range(len(sizes)))
        tool = parse_tool(
            f"cwlVersion: v1.0\nclass: CommandLineTool\nbaseCommand: [x]\ninputs:\n{inputs}\noutputs: []"
        )
        alts = {f"p{i}": list(range(s)) for i, s in enumerate(sizes)}
        req = prof.ProfilingRequest("t", alts, max_runs=10**6)
        assert len(prof.expand_grid(req, tool)) == math.prod(sizes)


class TestFeatures:
    def test_numeric_and_boolean(self):
        tool = parse_tool(
            "cwlVersion: v1.0\nclass: CommandLineTool\nbaseCommand: [x]\n"
            "inputs:\n  k: {type: int}\n  big: {type: boolean}\noutputs: []"
        )
        schema = build_schema(tool, [{"k": 5, "big": True}])
        assert schema.vector(tool, {"k": 5, "big": True}) == [5.0, 1.0]

    def test_file_size_in_mib(self, tmp_path):
        tool = parse_tool(
            "cwlVersion: v1.0\nclass: CommandLineTool\nbaseCommand: [x]\n"
            "inputs:\n  data: {type: File}\noutputs: []"
        )
        f = tmp_path / "data.bin"
        f.write_bytes(b"\0" * 1048576)
        schema = build_schema(tool, [{"data": str(f)}])
        assert schema.names == ("data_mb",)
        assert schema.vector(tool, {"data": str(f)}) == [1.0]

    def test_enum_one_hot(self):
        schema = build_schema(grid_tool(), [{"k": 1, "mode": "a"}, {"k": 1, "mode": "b"}, {"k": 1, "mode": "c"}])
        assert schema.names == ("k", "mode=a", "mode=b", "mode=c")
        assert schema.vector(grid_tool(), {"k": 1, "mode": "b"}) == [1.0, 0.0, 1.0, 0.0]

    def test_unseen_category_all_zeros(self):
        schema = build_schema(grid_tool(), [{"k": 1, "mode": "a"}])
        assert schema.vector(grid_tool(), {"k": 1, "mode": "c"}) == [1.0, 0.0]


class TestLabeling:
    def classes(self, two_class_cluster):
        return list(two_class_cluster.classes)

    def make_dataset(self, peaks):
        schema = FeatureSchema(names=("k",))
        ds = prof.ProfileDataset(tool_id="t", schema=schema)
        for i, peak in enumerate(peaks):
            ds.samples.append(
                prof.ProfileSample(
                    features=[float(i)],
                    bindings={"k": i},
                    consumption={"exit_status": 0, "peak_mem_mb": peak, "output_files": []},
                )
            )
        return ds

    def test_small_peak_regular(self, two_class_cluster):
        ds = prof.label_samples(self.make_dataset([1000.0]), self.classes(two_class_cluster), 1.1)
        assert ds.samples[0].label == "regular-memory"

    def test_headroom_pushes_to_large(self, two_class_cluster):
        ds = prof.label_samples(self.make_dataset([4000.0]), self.classes(two_class_cluster), 1.1)
        assert ds.samples[0].label == "large-memory"  # 4400 > 4096

    def test_unlabelable_dropped_with_warning(self, two_class_cluster):
        ds = prof.label_samples(
            self.make_dataset([1000.0, 40000.0]), self.classes(two_class_cluster), 1.1
        )
        assert len(ds.samples) == 1

    def test_all_unlabelable_errors(self, two_class_cluster):
        with pytest.raises(prof.ProfilerError, match="no sample fits"):
            prof.label_samples(self.make_dataset([40000.0]), self.classes(two_class_cluster), 1.1)

    def test_monotone_in_peak(self, two_class_cluster):
        classes = sorted(self.classes(two_class_cluster), key=lambda c: c.cost_rank)
        rank = {c.name: c.cost_rank for c in classes}
        last = 0
        for peak in [100, 1000, 3000, 3800, 5000, 20000]:
            label = prof.label_for_consumption(
                {"peak_mem_mb": float(peak), "output_files": []}, classes, 1.1
            )
            assert rank[label] >= last
            last = rank[label]


def collect_memtool_dataset(memtool, sigma=0.0, failure_rate=0.0, sizes=None, seed=0):
    model = ex.cost_model_from_dict(
        {
            "memtool": {
                "peak_mem_mb": {"intercept": 100.0, "coeffs": {"file_mb": 1.5}},
                "cpu_seconds": {"intercept": 1.0},
                "noise_sigma": sigma,
                "failure_rate": failure_rate,
            }
        }
    )
    sizes = sizes if sizes is not None else [100 + i * 300 for i in range(20)]
    bindings = [{"file_mb": s} for s in sizes]

    def runner(task_id, b):
        return ex.run_simulated(task_id, memtool, b, model, seed)

    return prof.collect_samples(bindings, memtool, runner, seed)


class TestCollect:
    def test_all_succeed(self, memtool):
        ds = collect_memtool_dataset(memtool, sizes=[100, 200, 300, 400, 500, 600])
        assert len(ds.samples) == 6 and not ds.failures

    def test_failures_recorded_and_excluded(self, memtool):
        ds = collect_memtool_dataset(memtool, failure_rate=0.3, sizes=list(range(100, 2100, 100)))
        assert len(ds.failures) > 0
        assert len(ds.samples) + len(ds.failures) == 20

    def test_empty_grid_errors(self, memtool):
        with pytest.raises(prof.ProfilerError, match="empty profiling grid"):
            prof.collect_samples([], memtool, lambda *a: None, 0)


class TestTrain:
    def labeled(self, memtool, cluster, sizes=None, sigma=0.0):
        ds = collect_memtool_dataset(memtool, sigma=sigma, sizes=sizes)
        return prof.label_samples(ds, list(cluster.classes), 1.1)

    def test_separable_dataset_high_accuracy(self, memtool, two_class_cluster):
        sizes = [100 + i * 330 for i in range(60)]
        profile = prof.train_profile(self.labeled(memtool, two_class_cluster, sizes), seed=0)
        assert profile.cv_accuracy >= 0.95

    def test_single_label_degenerate(self, memtool, two_class_cluster):
        sizes = [100 + i * 10 for i in range(12)]  # all small -> all regular
        profile = prof.train_profile(self.labeled(memtool, two_class_cluster, sizes), seed=0)
        assert profile.degenerate and profile.cv_accuracy == 1.0
        assert profile.predict(memtool, {"file_mb": 50}) == "regular-memory"

    def test_too_few_samples(self, memtool, two_class_cluster):
        with pytest.raises(prof.ProfilerError, match="too few samples"):
            prof.train_profile(self.labeled(memtool, two_class_cluster, [100, 5000, 200, 5100, 300]), seed=0)

    def test_deterministic(self, memtool, two_class_cluster):
        ds1 = self.labeled(memtool, two_class_cluster)
        ds2 = self.labeled(memtool, two_class_cluster)
        p1 = prof.train_profile(ds1, seed=3)
        p2 = prof.train_profile(ds2, seed=3)
        assert p1.model_doc == p2.model_doc and p1.cv_accuracy == p2.cv_accuracy

    def test_predict_dimension_mismatch(self, memtool, two_class_cluster):
        profile = prof.train_profile(self.labeled(memtool, two_class_cluster), seed=0)
        profile.feature_names = ["a", "b"]
        with pytest.raises(prof.ProfilerError, match="dimension mismatch"):
            profile.predict(memtool, {"file_mb": 100})


class TestStore:
    def test_save_load_roundtrip(self, memtool, two_class_cluster, tmp_path):
        ds = collect_memtool_dataset(memtool)
        ds = prof.label_samples(ds, list(two_class_cluster.classes), 1.1)
        profile = prof.train_profile(ds, seed=0)
        store = prof.ProfileStore(str(tmp_path))
        store.save(profile)
        loaded = store.load("memtool")
        assert loaded.predict(memtool, {"file_mb": 5000}) == profile.predict(memtool, {"file_mb": 5000})

    def test_load_missing_returns_none(self, tmp_path):
        assert prof.ProfileStore(str(tmp_path)).load("nope") is None

    def test_dataset_roundtrip(self, memtool, tmp_path):
        ds = collect_memtool_dataset(memtool, failure_rate=0.3, sizes=list(range(100, 2100, 100)))
        store = prof.ProfileStore(str(tmp_path))
        store.save_dataset(ds)
        loaded = store.load_dataset("memtool", ds.schema)
        assert len(loaded.samples) == len(ds.samples)
        assert len(loaded.failures) == len(ds.failures)
