"""RO-Crate 1.1 experiment packaging for completed tasks.

A crate holds ro-crate-metadata.json (flattened JSON-LD, stable key
order for byte-deterministic output), copies of input/output payload
files, and the bindings serialized as parameters.json.
"""

from __future__ import annotations

import json
import os
import shutil
from dataclasses import dataclass, field

from . import tasks as ts
from .catalog import ToolDescriptor

CONTEXT = "https://w3id.org/ro/crate/1.1/context"
CONFORMS_TO = "https://w3id.org/ro/crate/1.1"


class CrateError(Exception):
    pass


@dataclass
class ExperimentPackage:
    graph: list  # JSON-LD entities
    payload: list = field(default_factory=list)  # (source path, crate-relative path)
    bindings: dict = field(default_factory=dict)

    def metadata_bytes(self) -> bytes:
        doc = {"@context": CONTEXT, "@graph": self.graph}
        return (json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


def _iso(timestamp: float | None) -> str | None:
    if timestamp is None:
        return None
    import datetime

    return (
        datetime.datetime.fromtimestamp(timestamp, tz=datetime.timezone.utc)
        .isoformat()
        .replace("+00:00", "Z")
    )


def build_crate(task: ts.TaskRecord, descriptor: ToolDescriptor, options: dict | None = None) -> ExperimentPackage:
    """Assemble the metadata graph and payload list for a COMPLETE task."""
    options = options or {}
    if task.state != ts.COMPLETE:
        raise CrateError(f"task {task.id!r} is {task.state}, not COMPLETE")

    payload = []
    input_entities = []
    for p in descriptor.inputs:
        value = task.bindings.get(p.id)
        if p.param_type == "File" and isinstance(value, str) and not value.startswith("size:"):
            rel = f"inputs/{os.path.basename(value)}"
            payload.append((value, rel))
            input_entities.append(
                {
                    "@id": rel,
                    "@type": "File",
                    "name": os.path.basename(value),
                    "contentSize": os.path.getsize(value) if os.path.exists(value) else 0,
                }
            )

    output_entities = []
    for entry in task.outputs:
        output_id, path, size = entry[0], entry[1], entry[2]
        if not path:
            continue
        rel = f"outputs/{os.path.basename(path)}"
        payload.append((path, rel))
        output_entities.append(
            {"@id": rel, "@type": "File", "name": output_id, "contentSize": size}
        )

    tool_id = f"#tool-{descriptor.id}@{descriptor.version}"
    action_id = f"#run-{task.id}"
    params_entity = {
        "@id": "parameters.json",
        "@type": "File",
        "name": "parameters.json",
        "description": "Input bindings used for this run",
        "encodingFormat": "application/json",
    }

    root_parts = (
        [{"@id": e["@id"]} for e in input_entities]
        + [{"@id": e["@id"]} for e in output_entities]
        + [{"@id": "parameters.json"}]
    )
    root = {
        "@id": "./",
        "@type": "Dataset",
        "name": f"Experiment package for task {task.id}",
        "datePublished": _iso(task.logs.get("end_time")) or _iso(task.creation_time),
        "hasPart": root_parts,
        "mainEntity": {"@id": action_id},
    }
    descriptor_entity = {
        "@id": "ro-crate-metadata.json",
        "@type": "CreativeWork",
        "about": {"@id": "./"},
        "conformsTo": {"@id": CONFORMS_TO},
    }
    software = {
        "@id": tool_id,
        "@type": "SoftwareApplication",
        "name": descriptor.id,
        "softwareVersion": descriptor.version,
        "containerImage": descriptor.image_ref,
    }
    action = {
        "@id": action_id,
        "@type": "CreateAction",
        "name": f"Run of {descriptor.id} ({task.id})",
        "instrument": {"@id": tool_id},
        "object": [{"@id": e["@id"]} for e in input_entities] + [{"@id": "parameters.json"}],
        "result": [{"@id": e["@id"]} for e in output_entities],
    }
    if task.logs.get("start_time") is not None:
        action["startTime"] = _iso(task.logs["start_time"])
    if task.logs.get("end_time") is not None:
        action["endTime"] = _iso(task.logs["end_time"])
    if options.get("author"):
        author_entity = {"@id": "#author", "@type": "Person", "name": options["author"]}
        root["author"] = {"@id": "#author"}
    else:
        author_entity = None

    graph = [root, descriptor_entity, action, software, params_entity]
    graph += input_entities + output_entities
    if author_entity:
        graph.append(author_entity)
    if options.get("doi"):
        doi = options["doi"]
        publication = {
            "@id": f"https://doi.org/{doi}",
            "@type": "CreativeWork",
            "identifier": doi,
        }
        root["citation"] = {"@id": publication["@id"]}
        graph.append(publication)

    return ExperimentPackage(graph=graph, payload=payload, bindings=dict(task.bindings))


def write_crate(package: ExperimentPackage, directory: str, state_dir: str | None = None, task_id: str | None = None) -> list:
    """Write the crate; returns the manifest of crate-relative paths.

    Also stores a copy under <state_dir>/crates/<task_id>/ when given.
    """
    for source, _rel in package.payload:
        if not os.path.exists(source):
            raise CrateError(f"missing payload file {source!r}")

    manifests = []
    targets = [directory]
    if state_dir is not None and task_id is not None:
        targets.append(os.path.join(state_dir, "crates", task_id))
    for target in targets:
        os.makedirs(target, exist_ok=True)
        written = ["ro-crate-metadata.json", "parameters.json"]
        with open(os.path.join(target, "ro-crate-metadata.json"), "wb") as fh:
            fh.write(package.metadata_bytes())
        with open(os.path.join(target, "parameters.json"), "w", encoding="utf-8") as fh:
            json.dump(package.bindings, fh, indent=2, sort_keys=True)
            fh.write("\n")
        for source, rel in package.payload:
            dest = os.path.join(target, rel)
            os.makedirs(os.path.dirname(dest), exist_ok=True)
            shutil.copyfile(source, dest)
            written.append(rel)
        manifests.append(sorted(written))
    return manifests[0]


def validate_crate(directory: str) -> list:
    """Validation report: list of failure strings, empty when valid."""
    failures = []
    meta_path = os.path.join(directory, "ro-crate-metadata.json")
    if not os.path.exists(meta_path):
        return ["metadata file missing: ro-crate-metadata.json"]
    try:
        with open(meta_path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        return [f"metadata is not valid JSON: {exc}"]

    graph = doc.get("@graph", [])
    by_id = {e.get("@id"): e for e in graph}
    root = by_id.get("./")
    if root is None or root.get("@type") != "Dataset":
        failures.append("root Dataset './' missing")
    descriptor = by_id.get("ro-crate-metadata.json")
    if descriptor is None:
        failures.append("metadata descriptor entity missing")
    elif (descriptor.get("conformsTo") or {}).get("@id") != CONFORMS_TO:
        failures.append("metadata descriptor does not conform to RO-Crate 1.1")

    actions = [e for e in graph if e.get("@type") == "CreateAction"]
    if not actions:
        failures.append("CreateAction entity missing")
    elif not actions[0].get("instrument"):
        failures.append("CreateAction has no instrument")

    for entity in graph:
        if entity.get("@type") != "File":
            continue
        rel = entity["@id"]
        path = os.path.join(directory, rel)
        if not os.path.exists(path):
            failures.append(f"dangling File entity: {rel}")
            continue
        declared = entity.get("contentSize")
        if declared is not None and os.path.getsize(path) != declared:
            failures.append(f"size mismatch for {rel}: declared {declared}, actual {os.path.getsize(path)}")
    return failures
