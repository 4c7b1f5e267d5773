"""CWL-subset tool descriptions: parsing, catalog storage, forms, commands.

Supported subset: `class: CommandLineTool`, cwlVersion v1.0/v1.1/v1.2,
input types int/float/string/boolean/File/enum. No expressions, no
secondary files, no scatter. Image references are carried verbatim.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import yaml


class ToolError(Exception):
    """Invalid tool document or binding set."""


SUPPORTED_CWL_VERSIONS = ("v1.0", "v1.1", "v1.2")
SCALAR_TYPES = ("int", "float", "string", "boolean", "File")


@dataclass(frozen=True)
class InputParameter:
    id: str
    param_type: str  # int | float | string | boolean | File | enum
    required: bool = True
    default: object = None
    enum_values: tuple = ()
    position: int | None = None
    prefix: str | None = None

    def __post_init__(self):
        if self.param_type == "enum":
            if len(self.enum_values) < 1 or len(set(self.enum_values)) != len(self.enum_values):
                raise ToolError(f"input {self.id!r}: enum needs >= 1 distinct values")
        if self.default is not None and not type_check(self.param_type, self.enum_values, self.default):
            raise ToolError(f"input {self.id!r}: default does not type-check")

    @property
    def has_binding(self) -> bool:
        return self.position is not None or self.prefix is not None


@dataclass(frozen=True)
class ToolDescriptor:
    id: str
    version: str
    image_ref: str
    base_command: tuple
    inputs: tuple = ()
    outputs: tuple = ()  # of (id, glob)

    def __post_init__(self):
        if not self.base_command:
            raise ToolError("baseCommand must be non-empty")
        in_ids = [p.id for p in self.inputs]
        if len(set(in_ids)) != len(in_ids):
            raise ToolError("duplicate input id")
        out_ids = [o[0] for o in self.outputs]
        if len(set(out_ids)) != len(out_ids):
            raise ToolError("duplicate output id")

    def input(self, input_id: str) -> InputParameter:
        for p in self.inputs:
            if p.id == input_id:
                return p
        raise ToolError(f"no such input {input_id!r}")


@dataclass
class SoftwareRecord:
    descriptor: ToolDescriptor
    uploaded_at: float
    visibility: str = "public"  # public | private


@dataclass(frozen=True)
class FormField:
    field_id: str
    label: str
    widget: str  # number | text | checkbox | file-picker | select
    required: bool
    default: object = None
    options: tuple = ()


def type_check(param_type: str, enum_values: tuple, value) -> bool:
    if param_type == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if param_type == "float":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if param_type == "string":
        return isinstance(value, str)
    if param_type == "boolean":
        return isinstance(value, bool)
    if param_type == "File":
        return isinstance(value, str)
    if param_type == "enum":
        return value in enum_values
    return False


def _parse_type(raw, input_id: str):
    """Returns (param_type, required, enum_values)."""
    required = True
    if isinstance(raw, list):  # ["null", T] optional form
        parts = [t for t in raw if t != "null"]
        if len(parts) != 1:
            raise ToolError(f"input {input_id!r}: unsupported union type")
        required = "null" not in raw
        raw = parts[0]
    if isinstance(raw, str):
        if raw.endswith("?"):
            required = False
            raw = raw[:-1]
        if raw in SCALAR_TYPES:
            return raw, required, ()
        if raw in ("long", "double"):  # common aliases folded into the subset
            return {"long": "int", "double": "float"}[raw], required, ()
        raise ToolError(f"input {input_id!r}: unsupported type {raw!r}")
    if isinstance(raw, dict) and raw.get("type") == "enum":
        symbols = tuple(str(s) for s in raw.get("symbols", ()))
        if not symbols:
            raise ToolError(f"input {input_id!r}: enum without symbols")
        return "enum", required, symbols
    raise ToolError(f"input {input_id!r}: unsupported type {raw!r}")


def _iter_named(section):
    """CWL allows list-of-dicts or mapping form for inputs/outputs/steps."""
    if section is None:
        return []
    if isinstance(section, dict):
        out = []
        for key, val in section.items():
            if isinstance(val, (str, list)) or val is None:
                out.append((str(key), {"type": val}))
            else:
                out.append((str(key), dict(val)))
        return out
    if isinstance(section, list):
        out = []
        for entry in section:
            if not isinstance(entry, dict) or "id" not in entry:
                raise ToolError("list-form entries need an 'id'")
            e = dict(entry)
            return_id = str(e.pop("id"))
            out.append((return_id, e))
        return out
    raise ToolError("inputs/outputs must be a mapping or a list")


def load_document(text: str) -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ToolError(f"document parse error: {exc}") from exc
    if not isinstance(doc, dict):
        raise ToolError("document must be a mapping")
    return doc


def parse_tool(text: str) -> ToolDescriptor:
    """Parse a CWL-subset CommandLineTool document (YAML or JSON)."""
    doc = load_document(text)
    if doc.get("class") != "CommandLineTool":
        raise ToolError(f"unknown class {doc.get('class')!r} (expected CommandLineTool)")
    version = str(doc.get("cwlVersion", ""))
    if version not in SUPPORTED_CWL_VERSIONS:
        raise ToolError(f"unsupported cwlVersion {version!r}")

    base = doc.get("baseCommand")
    if base is None:
        raise ToolError("missing baseCommand")
    base_command = tuple([base] if isinstance(base, str) else [str(b) for b in base])

    hints = doc.get("hints") or {}
    reqs = doc.get("requirements") or {}
    image_ref = ""
    for section in (hints, reqs):
        entries = section.values() if isinstance(section, dict) else section
        for entry in entries:
            if isinstance(entry, dict) and entry.get("dockerPull"):
                image_ref = str(entry["dockerPull"])
        if isinstance(section, dict) and "DockerRequirement" in section:
            image_ref = str(section["DockerRequirement"].get("dockerPull", image_ref))
    image_ref = str(doc.get("image", image_ref))

    inputs = []
    for input_id, body in _iter_named(doc.get("inputs")):
        ptype, required, enum_values = _parse_type(body.get("type"), input_id)
        default = body.get("default")
        if default is not None:
            required = False
            if ptype == "float" and isinstance(default, int):
                default = float(default)
        binding = body.get("inputBinding") or {}
        inputs.append(
            InputParameter(
                id=input_id,
                param_type=ptype,
                required=required,
                default=default,
                enum_values=enum_values,
                position=int(binding["position"]) if "position" in binding else (0 if binding else None),
                prefix=binding.get("prefix"),
            )
        )
    if len({p.id for p in inputs}) != len(inputs):
        raise ToolError("duplicate input id")

    outputs = []
    for output_id, body in _iter_named(doc.get("outputs")):
        glob = (body.get("outputBinding") or {}).get("glob") or body.get("glob") or ""
        outputs.append((output_id, str(glob)))

    return ToolDescriptor(
        id=str(doc.get("id", "tool")),
        version=str(doc.get("version", "1.0")),
        image_ref=image_ref,
        base_command=base_command,
        inputs=tuple(inputs),
        outputs=tuple(outputs),
    )


def descriptor_to_dict(d: ToolDescriptor) -> dict:
    return {
        "id": d.id,
        "version": d.version,
        "image_ref": d.image_ref,
        "base_command": list(d.base_command),
        "inputs": [
            {
                "id": p.id,
                "param_type": p.param_type,
                "required": p.required,
                "default": p.default,
                "enum_values": list(p.enum_values),
                "position": p.position,
                "prefix": p.prefix,
            }
            for p in d.inputs
        ],
        "outputs": [{"id": oid, "glob": glob} for oid, glob in d.outputs],
    }


def descriptor_from_dict(doc: dict) -> ToolDescriptor:
    return ToolDescriptor(
        id=doc["id"],
        version=doc["version"],
        image_ref=doc.get("image_ref", ""),
        base_command=tuple(doc["base_command"]),
        inputs=tuple(
            InputParameter(
                id=p["id"],
                param_type=p["param_type"],
                required=p.get("required", True),
                default=p.get("default"),
                enum_values=tuple(p.get("enum_values", ())),
                position=p.get("position"),
                prefix=p.get("prefix"),
            )
            for p in doc.get("inputs", ())
        ),
        outputs=tuple((o["id"], o["glob"]) for o in doc.get("outputs", ())),
    )


def render_form_schema(descriptor: ToolDescriptor) -> list:
    """One form field per input, in declaration order."""
    widget_by_type = {
        "int": "number",
        "float": "number",
        "string": "text",
        "boolean": "checkbox",
        "File": "file-picker",
        "enum": "select",
    }
    return [
        FormField(
            field_id=p.id,
            label=p.id,
            widget=widget_by_type[p.param_type],
            required=p.required,
            default=p.default,
            options=p.enum_values,
        )
        for p in descriptor.inputs
    ]


def form_schema_to_dict(fields: list) -> list:
    return [
        {
            "field_id": f.field_id,
            "label": f.label,
            "widget": f.widget,
            "required": f.required,
            "default": f.default,
            "options": list(f.options),
        }
        for f in fields
    ]


def check_bindings(descriptor: ToolDescriptor, bindings: dict) -> dict:
    """Validate bindings against the descriptor; returns bindings with defaults filled."""
    resolved = {}
    for p in descriptor.inputs:
        if p.id in bindings:
            value = bindings[p.id]
            if p.param_type == "float" and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            if not type_check(p.param_type, p.enum_values, value):
                raise ToolError(f"input {p.id!r}: value {value!r} does not match type {p.param_type}")
            resolved[p.id] = value
        elif p.default is not None:
            resolved[p.id] = p.default
        elif p.required:
            raise ToolError(f"missing required input {p.id!r}")
    for key in bindings:
        if all(p.id != key for p in descriptor.inputs):
            raise ToolError(f"unknown input {key!r}")
    return resolved


def build_command(descriptor: ToolDescriptor, bindings: dict) -> list:
    """Base command plus bound arguments sorted by binding position.

    Ties are broken by input declaration order. Booleans emit the prefix
    only when true; File values are substituted by their workspace path.
    """
    resolved = check_bindings(descriptor, bindings)
    argv = list(descriptor.base_command)
    bound = [
        (p.position, idx, p)
        for idx, p in enumerate(descriptor.inputs)
        if p.has_binding and p.id in resolved
    ]
    bound.sort(key=lambda t: (t[0], t[1]))
    for _, _, p in bound:
        value = resolved[p.id]
        if p.param_type == "boolean":
            if value and p.prefix:
                argv.append(p.prefix)
            continue
        if p.prefix:
            argv.append(p.prefix)
        argv.append(str(value))
    return argv


class Catalog:
    """Tool store persisted as one JSON document per id@version."""

    def __init__(self, state_dir: str):
        self.dir = os.path.join(state_dir, "tools")
        os.makedirs(self.dir, exist_ok=True)

    def _path(self, tool_id: str, version: str) -> str:
        return os.path.join(self.dir, f"{tool_id}@{version}.json")

    def register(self, descriptor: ToolDescriptor, visibility: str = "public") -> SoftwareRecord:
        record = SoftwareRecord(descriptor=descriptor, uploaded_at=time.time(), visibility=visibility)
        doc = {
            "descriptor": descriptor_to_dict(descriptor),
            "uploaded_at": record.uploaded_at,
            "visibility": visibility,
        }
        path = self._path(descriptor.id, descriptor.version)
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
        os.replace(tmp, path)
        return record

    def list(self, visibility: str | None = None) -> list:
        records = []
        for name in sorted(os.listdir(self.dir)):
            if not name.endswith(".json"):
                continue
            with open(os.path.join(self.dir, name), encoding="utf-8") as fh:
                doc = json.load(fh)
            record = SoftwareRecord(
                descriptor=descriptor_from_dict(doc["descriptor"]),
                uploaded_at=doc["uploaded_at"],
                visibility=doc.get("visibility", "public"),
            )
            if visibility is None or record.visibility == visibility:
                records.append(record)
        return records

    def get(self, tool_id: str, version: str | None = None) -> ToolDescriptor:
        if version is not None:
            path = self._path(tool_id, version)
            if not os.path.exists(path):
                raise ToolError(f"unknown tool {tool_id!r} version {version!r}")
            with open(path, encoding="utf-8") as fh:
                return descriptor_from_dict(json.load(fh)["descriptor"])
        matches = sorted(
            n for n in os.listdir(self.dir) if n.startswith(tool_id + "@") and n.endswith(".json")
        )
        if not matches:
            raise ToolError(f"unknown tool {tool_id!r}")
        with open(os.path.join(self.dir, matches[-1]), encoding="utf-8") as fh:
            return descriptor_from_dict(json.load(fh)["descriptor"])
