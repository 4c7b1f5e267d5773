"""Software profiling: grid expansion, sample collection, node-class
labeling, and training of the per-tool execution profile.

The stored profile is the best-accuracy model from grid search plus the
feature schema and standardizer needed to apply it at suggestion time.
"""

from __future__ import annotations

import itertools
import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import classifiers
from .catalog import ToolDescriptor
from .cluster import NodeClass
from .features import MIB, FeatureSchema, build_schema

log = logging.getLogger(__name__)

DEFAULT_HEADROOM = 1.1
MIN_SAMPLES = 10


class ProfilerError(Exception):
    pass


@dataclass(frozen=True)
class ProfilingRequest:
    tool_id: str
    alternatives: dict  # input id -> list of candidate values
    max_runs: int = 1000
    seed: int = 0


@dataclass
class ProfileSample:
    features: list
    bindings: dict
    consumption: dict  # RunResult summary
    label: str | None = None


@dataclass
class ProfileDataset:
    tool_id: str
    schema: FeatureSchema
    samples: list = field(default_factory=list)
    failures: list = field(default_factory=list)  # audit trail, excluded from training


@dataclass
class ExecutionProfile:
    tool_id: str
    feature_names: list
    means: list
    stds: list
    family: str
    hyperparams: dict
    model_doc: dict
    cv_accuracy: float
    created_at: float
    sample_count: int
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "tool_id": self.tool_id,
            "feature_names": self.feature_names,
            "means": self.means,
            "stds": self.stds,
            "family": self.family,
            "hyperparams": self.hyperparams,
            "model": self.model_doc,
            "cv_accuracy": self.cv_accuracy,
            "created_at": self.created_at,
            "sample_count": self.sample_count,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExecutionProfile":
        return cls(
            tool_id=d["tool_id"],
            feature_names=list(d["feature_names"]),
            means=list(d["means"]),
            stds=list(d["stds"]),
            family=d["family"],
            hyperparams=dict(d["hyperparams"]),
            model_doc=dict(d["model"]),
            cv_accuracy=d["cv_accuracy"],
            created_at=d["created_at"],
            sample_count=d["sample_count"],
            degenerate=d.get("degenerate", False),
        )

    def predict(self, descriptor: ToolDescriptor, bindings: dict) -> str:
        schema = FeatureSchema(names=tuple(self.feature_names))
        vec = schema.vector(descriptor, bindings)
        if len(vec) != len(self.means):
            raise ProfilerError("feature-dimension mismatch (corrupt profile)")
        if self.degenerate:
            return self.model_doc["label"]
        z = classifiers.standardize_apply(
            np.asarray([vec]), np.asarray(self.means), np.asarray(self.stds)
        )[0]
        model = classifiers.model_from_dict(self.family, self.model_doc)
        return classifiers.predict_model(self.family, model, z)


def expand_grid(request: ProfilingRequest, descriptor: ToolDescriptor) -> list:
    """Cartesian product of the alternatives, inputs in declaration order."""
    for p in descriptor.inputs:
        if p.required and p.default is None and p.id not in request.alternatives:
            raise ProfilerError(f"missing required input {p.id!r} in alternatives")
    ordered_ids = [p.id for p in descriptor.inputs if p.id in request.alternatives]
    value_lists = []
    for input_id in ordered_ids:
        values = list(request.alternatives[input_id])
        if not values:
            raise ProfilerError(f"empty alternative list for input {input_id!r}")
        value_lists.append(values)
    total = 1
    for values in value_lists:
        total *= len(values)
    if total > request.max_runs:
        raise ProfilerError(f"grid too large: {total} combinations exceed max_runs={request.max_runs}")
    return [dict(zip(ordered_ids, combo)) for combo in itertools.product(*value_lists)]


def collect_samples(bindings_list: list, descriptor: ToolDescriptor, runner, seed: int) -> ProfileDataset:
    """Run every binding combination; failed runs are kept for audit only.

    `runner(task_id, bindings)` returns a RunResult. Grid order is
    preserved regardless of execution order.
    """
    if not bindings_list:
        raise ProfilerError("empty profiling grid")
    schema = build_schema(descriptor, bindings_list)
    dataset = ProfileDataset(tool_id=descriptor.id, schema=schema)
    for i, bindings in enumerate(bindings_list):
        result = runner(f"profile-{descriptor.id}-{i:04d}", bindings)
        sample = ProfileSample(
            features=schema.vector(descriptor, bindings),
            bindings=bindings,
            consumption=result.to_dict(),
        )
        if result.exit_status == 0:
            dataset.samples.append(sample)
        else:
            dataset.failures.append(sample)
    return dataset


def label_for_consumption(
    consumption: dict, classes_by_rank: list, headroom: float = DEFAULT_HEADROOM
) -> str | None:
    """Cheapest class whose capacity covers headroom x measured peak demand.

    Memory from peak RSS, cpu as 1 core, disk from output sizes.
    """
    peak_mem = consumption["peak_mem_mb"]
    disk_mb = sum(size for _, _, size in consumption.get("output_files", ())) / MIB
    for node_class in classes_by_rank:
        cap = node_class.capacity
        if (
            cap.memory_mb >= headroom * peak_mem
            and cap.cpu_cores >= 1
            and cap.disk_mb >= headroom * disk_mb
        ):
            return node_class.name
    return None


def label_samples(dataset: ProfileDataset, classes: list, headroom: float = DEFAULT_HEADROOM) -> ProfileDataset:
    classes_by_rank = sorted(classes, key=lambda c: c.cost_rank)
    kept = []
    for sample in dataset.samples:
        label = label_for_consumption(sample.consumption, classes_by_rank, headroom)
        if label is None:
            log.warning("sample exceeds every node class; dropped: %s", sample.bindings)
            continue
        sample.label = label
        kept.append(sample)
    if not kept:
        raise ProfilerError("no sample fits any node class")
    dataset.samples = kept
    return dataset


def train_profile(dataset: ProfileDataset, seed: int) -> ExecutionProfile:
    """Grid search over the classifier zoo; winner refit on all data."""
    labeled = [s for s in dataset.samples if s.label is not None]
    if len(labeled) < MIN_SAMPLES:
        raise ProfilerError(f"too few samples: {len(labeled)} < {MIN_SAMPLES}")
    X = np.asarray([s.features for s in labeled], dtype=float)
    y = [s.label for s in labeled]
    labels = sorted(set(y))

    if len(labels) == 1:
        return ExecutionProfile(
            tool_id=dataset.tool_id,
            feature_names=list(dataset.schema.names),
            means=[0.0] * X.shape[1],
            stds=[1.0] * X.shape[1],
            family="constant",
            hyperparams={},
            model_doc={"label": labels[0]},
            cv_accuracy=1.0,
            created_at=time.time(),
            sample_count=len(labeled),
            degenerate=True,
        )

    smallest = min(y.count(label) for label in labels)
    folds = min(5, smallest)
    family, hyperparams, accuracy = classifiers.grid_search(X, y, folds, seed)
    means, stds = classifiers.standardize_fit(X)
    Z = classifiers.standardize_apply(X, means, stds)
    model = classifiers.fit_model(family, hyperparams, Z, y)
    return ExecutionProfile(
        tool_id=dataset.tool_id,
        feature_names=list(dataset.schema.names),
        means=means.tolist(),
        stds=stds.tolist(),
        family=family,
        hyperparams=hyperparams,
        model_doc=classifiers.model_to_dict(family, model),
        cv_accuracy=accuracy,
        created_at=time.time(),
        sample_count=len(labeled),
    )


class ProfileStore:
    """Execution-profile persistence: one JSON per tool plus a JSONL
    sample audit file."""

    def __init__(self, state_dir: str):
        self.dir = os.path.join(state_dir, "profiles")
        os.makedirs(self.dir, exist_ok=True)

    def save(self, profile: ExecutionProfile) -> str:
        path = os.path.join(self.dir, f"{profile.tool_id}.json")
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(profile.to_dict(), fh, indent=2, sort_keys=True)
        os.replace(tmp, path)
        return path

    def load(self, tool_id: str) -> ExecutionProfile | None:
        path = os.path.join(self.dir, f"{tool_id}.json")
        if not os.path.exists(path):
            return None
        with open(path, encoding="utf-8") as fh:
            return ExecutionProfile.from_dict(json.load(fh))

    def save_dataset(self, dataset: ProfileDataset) -> str:
        path = os.path.join(self.dir, f"{dataset.tool_id}.samples.jsonl")
        with open(path, "w", encoding="utf-8") as fh:
            for sample in dataset.samples + dataset.failures:
                fh.write(
                    json.dumps(
                        {
                            "features": sample.features,
                            "bindings": sample.bindings,
                            "consumption": sample.consumption,
                            "label": sample.label,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
        return path

    def load_dataset(self, tool_id: str, schema: FeatureSchema) -> ProfileDataset:
        path = os.path.join(self.dir, f"{tool_id}.samples.jsonl")
        dataset = ProfileDataset(tool_id=tool_id, schema=schema)
        if not os.path.exists(path):
            return dataset
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                doc = json.loads(line)
                sample = ProfileSample(
                    features=doc["features"],
                    bindings=doc["bindings"],
                    consumption=doc["consumption"],
                    label=doc.get("label"),
                )
                if sample.consumption.get("exit_status", 0) == 0:
                    dataset.samples.append(sample)
                else:
                    dataset.failures.append(sample)
        return dataset
