"""Job runners: a deterministic simulated runner (the primary test
vehicle) and a local-process runner.

The simulated runner's randomness is fully specified — SplitMix64 keyed
by (seed, task id) feeding Box–Muller — so traces are bitwise
reproducible across platforms.
"""

from __future__ import annotations

import glob as globlib
import hashlib
import math
import os
import subprocess
import time
from dataclasses import dataclass, field

import psutil
import yaml

from .catalog import ToolDescriptor, build_command
from .features import MIB, raw_feature_map


class ExecutorError(Exception):
    pass


class MissingOutputError(ExecutorError):
    pass


MASK64 = (1 << 64) - 1


class SplitMix64:
    """Reference SplitMix64 generator."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        # 53-bit mantissa; open interval (0, 1]-adjacent, never exactly 0
        return ((self.next_u64() >> 11) + 1) / (1 << 53)

    def normal(self) -> float:
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def derive_key(seed: int, task_id: str) -> int:
    digest = hashlib.sha256(seed.to_bytes(8, "big", signed=False) + task_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class RunResult:
    exit_status: int
    wall_seconds: float
    cpu_seconds: float
    peak_mem_mb: float
    output_files: tuple = ()  # of (output id, path, size bytes)

    def to_dict(self) -> dict:
        return {
            "exit_status": self.exit_status,
            "wall_seconds": self.wall_seconds,
            "cpu_seconds": self.cpu_seconds,
            "peak_mem_mb": self.peak_mem_mb,
            "output_files": [list(o) for o in self.output_files],
        }


@dataclass(frozen=True)
class AffineModel:
    intercept: float
    coeffs: tuple = ()  # of (feature name, coefficient)

    def evaluate(self, features: dict) -> float:
        total = self.intercept
        for name, coeff in self.coeffs:
            total += coeff * features.get(name, 0.0)
        return max(total, 0.0)


@dataclass(frozen=True)
class ToolCostModel:
    peak_mem_mb: AffineModel
    cpu_seconds: AffineModel
    noise_sigma: float = 0.0
    failure_rate: float = 0.0
    output_mb: float = 1.0


@dataclass(frozen=True)
class SimulatedCostModel:
    tools: dict = field(default_factory=dict)  # tool id -> ToolCostModel

    def for_tool(self, tool_id: str) -> ToolCostModel:
        try:
            return self.tools[tool_id]
        except KeyError:
            raise ExecutorError(f"no cost model entry for tool {tool_id!r}") from None


def _affine_from_dict(doc: dict) -> AffineModel:
    coeffs = tuple(sorted((str(k), float(v)) for k, v in (doc.get("coeffs") or {}).items()))
    return AffineModel(intercept=float(doc.get("intercept", 0.0)), coeffs=coeffs)


def load_cost_model(text: str) -> SimulatedCostModel:
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ExecutorError("cost model document must be a mapping")
    return cost_model_from_dict(doc)


def cost_model_from_dict(doc: dict) -> SimulatedCostModel:
    tools = {}
    for tool_id, entry in doc.items():
        tools[str(tool_id)] = ToolCostModel(
            peak_mem_mb=_affine_from_dict(entry.get("peak_mem_mb", {})),
            cpu_seconds=_affine_from_dict(entry.get("cpu_seconds", {})),
            noise_sigma=float(entry.get("noise_sigma", 0.0)),
            failure_rate=float(entry.get("failure_rate", 0.0)),
            output_mb=float(entry.get("output_mb", 1.0)),
        )
    return SimulatedCostModel(tools=tools)


def run_simulated(
    task_id: str,
    descriptor: ToolDescriptor,
    bindings: dict,
    model: SimulatedCostModel,
    seed: int,
    workspace: str | None = None,
) -> RunResult:
    """Deterministic simulated execution.

    Consumption = clamp(affine(features) * (1 + sigma * g)), g standard
    normal from a stream keyed by (seed, task id): draw order is
    failure-check uniform, then one normal per metric (memory, cpu).
    """
    entry = model.for_tool(descriptor.id)
    rng = SplitMix64(derive_key(seed, task_id))
    failed = rng.uniform() < entry.failure_rate
    features = raw_feature_map(descriptor, bindings)

    peak_mem = entry.peak_mem_mb.evaluate(features) * (1.0 + entry.noise_sigma * rng.normal())
    cpu = entry.cpu_seconds.evaluate(features) * (1.0 + entry.noise_sigma * rng.normal())
    peak_mem = max(peak_mem, 0.0)
    cpu = max(cpu, 0.0)

    outputs = []
    if not failed:
        size_bytes = int(entry.output_mb * MIB)
        for output_id, _glob in descriptor.outputs:
            path = ""
            if workspace is not None:
                out_dir = os.path.join(workspace, "outputs")
                os.makedirs(out_dir, exist_ok=True)
                path = os.path.join(out_dir, f"{output_id}.out")
                with open(path, "wb") as fh:
                    if size_bytes:
                        fh.seek(size_bytes - 1)
                        fh.write(b"\0")
            outputs.append((output_id, path, size_bytes))

    return RunResult(
        exit_status=1 if failed else 0,
        wall_seconds=cpu,  # single-core model: wall == cpu
        cpu_seconds=cpu,
        peak_mem_mb=peak_mem,
        output_files=tuple(outputs),
    )


def _process_tree_rss_mb(proc: psutil.Process) -> float:
    total = 0
    try:
        procs = [proc] + proc.children(recursive=True)
        for p in procs:
            total += p.memory_info().rss
    except psutil.Error:
        pass
    return total / MIB


def run_local(
    descriptor: ToolDescriptor,
    bindings: dict,
    workspace: str,
    sample_period: float = 0.1,
) -> RunResult:
    """Spawn the tool's command locally, sampling process-tree peak RSS.

    Sampling at 100 ms may miss short spikes; acceptable because node
    classification uses coarse classes. Nonzero exit is data, not an
    error; a declared output glob matching nothing is an error.
    """
    argv = build_command(descriptor, bindings)
    os.makedirs(workspace, exist_ok=True)
    started = time.monotonic()
    try:
        popen = subprocess.Popen(argv, cwd=workspace)
    except OSError as exc:
        raise ExecutorError(f"spawn failure for {argv!r}: {exc}") from exc

    proc = psutil.Process(popen.pid)
    peak_mb = 0.0
    cpu_seconds = 0.0
    while True:
        try:
            peak_mb = max(peak_mb, _process_tree_rss_mb(proc))
            times = proc.cpu_times()
            cpu_seconds = times.user + times.system
        except psutil.Error:
            pass
        try:
            popen.wait(timeout=sample_period)
            break
        except subprocess.TimeoutExpired:
            continue
    wall = time.monotonic() - started

    outputs = []
    for output_id, pattern in descriptor.outputs:
        matches = sorted(globlib.glob(os.path.join(workspace, pattern)))
        if not matches:
            raise MissingOutputError(f"output {output_id!r}: glob {pattern!r} matched nothing")
        for path in matches:
            outputs.append((output_id, path, os.path.getsize(path)))

    return RunResult(
        exit_status=popen.returncode,
        wall_seconds=wall,
        cpu_seconds=min(cpu_seconds, wall * (os.cpu_count() or 1)),
        peak_mem_mb=peak_mb,
        output_files=tuple(outputs),
    )
