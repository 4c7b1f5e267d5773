"""Heterogeneous cluster model: node classes, nodes, and capacity accounting.

All types are immutable values; allocate/release return updated copies.
The scheduler loop owns mutation, so no locking happens here.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import yaml


class ClusterError(Exception):
    """Invalid cluster specification or illegal capacity operation."""


@dataclass(frozen=True)
class ResourceVector:
    cpu_cores: float = 0.0
    memory_mb: int = 0
    disk_mb: int = 0
    accelerators: frozenset = frozenset()

    def __post_init__(self):
        if self.cpu_cores < 0 or self.memory_mb < 0 or self.disk_mb < 0:
            raise ClusterError("resource components must be non-negative")
        object.__setattr__(self, "accelerators", frozenset(self.accelerators))

    def fits_within(self, other: "ResourceVector") -> bool:
        return (
            self.cpu_cores <= other.cpu_cores
            and self.memory_mb <= other.memory_mb
            and self.disk_mb <= other.disk_mb
            and self.accelerators <= other.accelerators
        )

    def plus(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(
            self.cpu_cores + other.cpu_cores,
            self.memory_mb + other.memory_mb,
            self.disk_mb + other.disk_mb,
            self.accelerators | other.accelerators,
        )

    def minus(self, other: "ResourceVector") -> "ResourceVector":
        if not other.fits_within(self):
            raise ClusterError("over-release: subtracting more than allocated")
        return ResourceVector(
            self.cpu_cores - other.cpu_cores,
            self.memory_mb - other.memory_mb,
            self.disk_mb - other.disk_mb,
            self.accelerators - other.accelerators,
        )

    def to_dict(self) -> dict:
        return {
            "cpu_cores": self.cpu_cores,
            "memory_mb": self.memory_mb,
            "disk_mb": self.disk_mb,
            "accelerators": sorted(self.accelerators),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResourceVector":
        return cls(
            cpu_cores=float(d.get("cpu_cores", 0)),
            memory_mb=int(d.get("memory_mb", 0)),
            disk_mb=int(d.get("disk_mb", 0)),
            accelerators=frozenset(d.get("accelerators", ())),
        )


ZERO = ResourceVector()


@dataclass(frozen=True)
class NodeClass:
    name: str
    capacity: ResourceVector
    cost_rank: int

    def __post_init__(self):
        if self.cost_rank < 1:
            raise ClusterError("cost_rank must be a positive integer")


@dataclass(frozen=True)
class Node:
    id: str
    class_name: str
    allocated: ResourceVector = ZERO


@dataclass(frozen=True)
class ClusterSpec:
    classes: tuple = ()
    nodes: tuple = ()
    _by_name: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise ClusterError("duplicate node class name")
        ranks = [c.cost_rank for c in self.classes]
        if len(set(ranks)) != len(ranks):
            raise ClusterError("duplicate cost_rank")
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ClusterError("duplicate node id")
        by_name = {c.name: c for c in self.classes}
        for n in self.nodes:
            if n.class_name not in by_name:
                raise ClusterError(f"node {n.id!r} references unknown class {n.class_name!r}")
        object.__setattr__(self, "_by_name", by_name)

    def node_class(self, name: str) -> NodeClass:
        try:
            return self._by_name[name]
        except KeyError:
            raise ClusterError(f"unknown node class {name!r}") from None

    def capacity_of(self, node: Node) -> ResourceVector:
        return self.node_class(node.class_name).capacity

    def classes_by_rank(self) -> list:
        return sorted(self.classes, key=lambda c: c.cost_rank)


def load_cluster_spec(text: str) -> ClusterSpec:
    """Parse a YAML/JSON cluster spec document; nodes start unallocated."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ClusterError(f"cluster spec parse error: {exc}") from exc
    if not isinstance(doc, dict):
        raise ClusterError("cluster spec must be a mapping")
    return cluster_spec_from_dict(doc)


def cluster_spec_from_dict(doc: dict) -> ClusterSpec:
    classes = []
    for c in doc.get("classes", []):
        try:
            classes.append(
                NodeClass(
                    name=str(c["name"]),
                    capacity=ResourceVector.from_dict(c.get("capacity", {})),
                    cost_rank=int(c["cost_rank"]),
                )
            )
        except KeyError as exc:
            raise ClusterError(f"class entry missing key {exc}") from exc
    nodes = []
    for n in doc.get("nodes", []):
        try:
            nodes.append(Node(id=str(n["id"]), class_name=str(n["class"])))
        except KeyError as exc:
            raise ClusterError(f"node entry missing key {exc}") from exc
    return ClusterSpec(classes=tuple(classes), nodes=tuple(nodes))


def cluster_spec_to_dict(spec: ClusterSpec) -> dict:
    return {
        "classes": [
            {"name": c.name, "cost_rank": c.cost_rank, "capacity": c.capacity.to_dict()}
            for c in spec.classes
        ],
        "nodes": [{"id": n.id, "class": n.class_name} for n in spec.nodes],
    }


def fits(demand: ResourceVector, node: Node, cluster: ClusterSpec) -> bool:
    """True iff the node's free capacity covers the demand componentwise."""
    cap = cluster.capacity_of(node)
    free = ResourceVector(
        cap.cpu_cores - node.allocated.cpu_cores,
        cap.memory_mb - node.allocated.memory_mb,
        cap.disk_mb - node.allocated.disk_mb,
        cap.accelerators,
    )
    return demand.fits_within(free)


def allocate(node: Node, demand: ResourceVector, cluster: ClusterSpec) -> Node:
    if not fits(demand, node, cluster):
        raise ClusterError(f"over-allocation on node {node.id!r}")
    return dataclasses.replace(node, allocated=node.allocated.plus(demand))


def release(node: Node, demand: ResourceVector) -> Node:
    return dataclasses.replace(node, allocated=node.allocated.minus(demand))
