"""Feature extraction from job bindings, shared by the cost model,
profiler, and suggestion path.

Raw features are a named map: numeric inputs map to their value, booleans
to 0/1, File inputs to size in MiB under the name "<id>_mb", and
enum/string inputs to one-hot indicators named "<id>=<value>".
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .catalog import ToolDescriptor

MIB = 1024 * 1024


def file_size_mb(value: str) -> float:
    """Size of a file-valued binding in MiB; 'size:<mb>' literals allowed
    so simulations can describe large inputs without materializing them."""
    if isinstance(value, str) and value.startswith("size:"):
        return float(value[len("size:"):])
    return os.path.getsize(value) / MIB


def raw_feature_map(descriptor: ToolDescriptor, bindings: dict) -> dict:
    feats = {}
    for p in descriptor.inputs:
        if p.id not in bindings:
            continue
        value = bindings[p.id]
        if p.param_type in ("int", "float"):
            feats[p.id] = float(value)
        elif p.param_type == "boolean":
            feats[p.id] = 1.0 if value else 0.0
        elif p.param_type == "File":
            feats[f"{p.id}_mb"] = file_size_mb(value)
        else:  # enum / string
            feats[f"{p.id}={value}"] = 1.0
    return feats


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature names; categorical vocabularies are baked into the
    names so unseen categories simply yield an all-zeros block."""

    names: tuple

    def vector(self, descriptor: ToolDescriptor, bindings: dict) -> list:
        raw = raw_feature_map(descriptor, bindings)
        return [raw.get(name, 0.0) for name in self.names]


def build_schema(descriptor: ToolDescriptor, bindings_list: list) -> FeatureSchema:
    """Schema over the union of features observed in the profiling grid,
    ordered by input declaration, categorical values in first-seen order."""
    names = []
    for p in descriptor.inputs:
        if not any(p.id in b for b in bindings_list):
            continue
        if p.param_type in ("int", "float", "boolean"):
            names.append(p.id)
        elif p.param_type == "File":
            names.append(f"{p.id}_mb")
        else:
            for b in bindings_list:
                if p.id in b:
                    name = f"{p.id}={b[p.id]}"
                    if name not in names:
                        names.append(name)
    return FeatureSchema(names=tuple(names))
