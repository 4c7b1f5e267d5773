"""Operator command line.

Task commands talk to a running service over HTTP; `simulate`,
`profile train`, and `package` work fully offline against the state
directory so CI needs no server.
"""

from __future__ import annotations

import functools
import json
import os
import sys

import click
import httpx
import yaml

from . import cluster as cl
from . import executor as ex
from . import scheduler as sched
from .catalog import Catalog, ToolError, parse_tool
from .crate import CrateError, build_crate, validate_crate, write_crate
from .profiler import (
    DEFAULT_HEADROOM,
    ProfilerError,
    ProfileStore,
    ProfilingRequest,
    collect_samples,
    expand_grid,
    label_samples,
    train_profile,
)
from .repo import RepositoryClient, RepositoryConfig, RepositoryError
from .tasks import COMPLETE, TaskStore

EXIT_OK, EXIT_USER, EXIT_SYSTEM = 0, 1, 2


def _load_config(path: str | None) -> dict:
    candidates = [path] if path else ["hetsched.yaml"]
    for candidate in candidates:
        if candidate and os.path.exists(candidate):
            with open(candidate, encoding="utf-8") as fh:
                return yaml.safe_load(fh) or {}
    return {}


class Ctx:
    def __init__(self, config_path, state_dir, api_url, as_json):
        cfg = _load_config(config_path)
        self.state_dir = (
            state_dir or os.environ.get("HETSCHED_STATE_DIR") or cfg.get("state_dir") or "./state"
        )
        self.api_url = (
            api_url or os.environ.get("HETSCHED_API_URL") or cfg.get("api_url") or "http://127.0.0.1:8000"
        )
        self.work_dir = cfg.get("work_dir") or "./work"
        self.config = cfg
        self.as_json = as_json

    def client(self) -> httpx.Client:
        return httpx.Client(base_url=self.api_url, timeout=30.0)

    def emit(self, doc, text_fn=None):
        if self.as_json or text_fn is None:
            click.echo(json.dumps(doc, indent=2, sort_keys=True, default=str))
        else:
            click.echo(text_fn(doc))


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ToolError, ProfilerError, CrateError, sched.SchedulerError, cl.ClusterError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_USER)
        except httpx.HTTPError as exc:
            click.echo(f"API error: {exc}", err=True)
            sys.exit(EXIT_SYSTEM)
        except (RepositoryError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_SYSTEM)

    return wrapper


def parse_input_value(raw: str):
    """k=v parser: @path marks files, otherwise YAML scalar rules."""
    if raw.startswith("@"):
        return raw[1:]
    return yaml.safe_load(raw)


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help="Config file (default hetsched.yaml)")
@click.option("--state-dir", default=None, help="State directory")
@click.option("--api-url", default=None, help="Service base URL")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output")
@click.pass_context
def main(ctx, config_path, state_dir, api_url, as_json):
    """hetsched: profile-driven scheduling for containerized jobs."""
    ctx.obj = Ctx(config_path, state_dir, api_url, as_json)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
@click.option("--cluster-spec", "cluster_path", required=True, type=click.Path(exists=True))
@click.option("--cost-model", "cost_path", required=True, type=click.Path(exists=True))
@click.option("--work-dir", default=None)
@click.option("--seed", default=0, type=int)
@click.option("--time-scale", default=0.05, type=float, help="Real seconds per simulated second")
@click.pass_obj
@handle_errors
def serve(ctx, host, port, cluster_path, cost_path, work_dir, seed, time_scale):
    """Start the HTTP service."""
    import uvicorn

    from .api import Service, ServiceConfig, create_app

    with open(cluster_path, encoding="utf-8") as fh:
        cluster = cl.load_cluster_spec(fh.read())
    with open(cost_path, encoding="utf-8") as fh:
        cost_model = ex.load_cost_model(fh.read())
    service = Service(
        ServiceConfig(
            state_dir=ctx.state_dir,
            work_dir=work_dir or ctx.work_dir,
            cluster=cluster,
            cost_model=cost_model,
            seed=seed,
            time_scale=time_scale,
        )
    )
    service.start()
    uvicorn.run(create_app(service), host=host, port=port)


@main.group()
def tool():
    """Manage the software catalog."""


@tool.command("add")
@click.argument("path", type=click.Path(exists=True))
@click.option("--visibility", type=click.Choice(["public", "private"]), default="public")
@click.pass_obj
@handle_errors
def tool_add(ctx, path, visibility):
    with open(path, encoding="utf-8") as fh:
        descriptor = parse_tool(fh.read())
    record = Catalog(ctx.state_dir).register(descriptor, visibility)
    ctx.emit(
        {"id": descriptor.id, "version": descriptor.version, "visibility": record.visibility},
        lambda d: f"registered {d['id']}@{d['version']}",
    )


@tool.command("list")
@click.option("--visibility", type=click.Choice(["public", "private"]), default=None)
@click.pass_obj
@handle_errors
def tool_list(ctx, visibility):
    records = Catalog(ctx.state_dir).list(visibility)
    doc = [
        {"id": r.descriptor.id, "version": r.descriptor.version, "visibility": r.visibility}
        for r in records
    ]
    ctx.emit(doc, lambda d: "\n".join(f"{e['id']}@{e['version']} ({e['visibility']})" for e in d) or "(empty)")


@main.command()
@click.argument("tool_id")
@click.option("--input", "inputs", multiple=True, help="k=v binding; @path for files")
@click.pass_obj
@handle_errors
def submit(ctx, tool_id, inputs):
    """Submit a task through the API."""
    bindings = {}
    for raw in inputs:
        key, _, value = raw.partition("=")
        bindings[key] = parse_input_value(value)
    with ctx.client() as client:
        resp = client.post("/v1/tasks", json={"tool_id": tool_id, "bindings": bindings})
    if resp.status_code != 200:
        click.echo(f"error: {resp.json().get('detail', resp.text)}", err=True)
        sys.exit(EXIT_USER)
    ctx.emit(resp.json(), lambda d: d["id"])


@main.command()
@click.argument("task_id")
@click.pass_obj
@handle_errors
def status(ctx, task_id):
    """Show a task's state."""
    with ctx.client() as client:
        resp = client.get(f"/v1/tasks/{task_id}", params={"view": "FULL"})
    if resp.status_code == 404:
        click.echo(f"error: task {task_id} not found", err=True)
        sys.exit(EXIT_USER)
    ctx.emit(resp.json(), lambda d: f"{d['id']}: {d['state']}")


@main.command()
@click.argument("task_id")
@click.pass_obj
@handle_errors
def cancel(ctx, task_id):
    """Cancel a task (idempotent)."""
    with ctx.client() as client:
        resp = client.post(f"/v1/tasks/{task_id}:cancel")
    if resp.status_code == 404:
        click.echo(f"error: task {task_id} not found", err=True)
        sys.exit(EXIT_USER)
    ctx.emit(resp.json(), lambda d: f"{d['id']}: {d['state']}")


@main.group()
def profile():
    """Profiling-grid collection and model training."""


@profile.command("grid")
@click.argument("tool_id")
@click.option("--alt", "alts", multiple=True, required=True, help="k=v1,v2,... alternatives")
@click.option("--cluster-spec", "cluster_path", required=True, type=click.Path(exists=True))
@click.option("--cost-model", "cost_path", required=True, type=click.Path(exists=True))
@click.option("--max-runs", default=1000, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--headroom", default=DEFAULT_HEADROOM, type=float)
@click.pass_obj
@handle_errors
def profile_grid(ctx, tool_id, alts, cluster_path, cost_path, max_runs, seed, headroom):
    """Run the profiling grid with the simulated runner and store samples."""
    catalog = Catalog(ctx.state_dir)
    descriptor = catalog.get(tool_id)
    with open(cluster_path, encoding="utf-8") as fh:
        cluster = cl.load_cluster_spec(fh.read())
    with open(cost_path, encoding="utf-8") as fh:
        cost_model = ex.load_cost_model(fh.read())
    alternatives = {}
    for raw in alts:
        key, _, values = raw.partition("=")
        alternatives[key] = [parse_input_value(v) for v in values.split(",")]
    request = ProfilingRequest(tool_id=tool_id, alternatives=alternatives, max_runs=max_runs, seed=seed)
    grid = expand_grid(request, descriptor)

    def runner(task_id, bindings):
        return ex.run_simulated(task_id, descriptor, bindings, cost_model, seed)

    dataset = collect_samples(grid, descriptor, runner, seed)
    dataset = label_samples(dataset, list(cluster.classes), headroom)
    store = ProfileStore(ctx.state_dir)
    path = store.save_dataset(dataset)
    ctx.emit(
        {"tool_id": tool_id, "samples": len(dataset.samples), "failures": len(dataset.failures), "path": path},
        lambda d: f"collected {d['samples']} samples ({d['failures']} failures) -> {d['path']}",
    )


@profile.command("train")
@click.argument("tool_id")
@click.option("--seed", default=0, type=int)
@click.pass_obj
@handle_errors
def profile_train(ctx, tool_id, seed):
    """Train the execution profile from stored samples."""
    from .features import FeatureSchema

    catalog = Catalog(ctx.state_dir)
    descriptor = catalog.get(tool_id)
    store = ProfileStore(ctx.state_dir)
    dataset = store.load_dataset(tool_id, FeatureSchema(names=()))
    if not dataset.samples:
        raise ProfilerError(f"no stored samples for {tool_id!r}; run `profile grid` first")
    n_features = len(dataset.samples[0].features)
    from .features import build_schema

    schema = build_schema(descriptor, [s.bindings for s in dataset.samples])
    if len(schema.names) != n_features:
        raise ProfilerError("stored samples do not match the tool's inputs")
    dataset.schema = schema
    profile_obj = train_profile(dataset, seed)
    path = store.save(profile_obj)
    ctx.emit(
        {
            "tool_id": tool_id,
            "family": profile_obj.family,
            "hyperparams": profile_obj.hyperparams,
            "cv_accuracy": profile_obj.cv_accuracy,
            "path": path,
        },
        lambda d: f"trained {d['family']} {d['hyperparams']} cv_accuracy={d['cv_accuracy']:.3f} -> {d['path']}",
    )


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True))
@click.option("--no-profiles", is_flag=True, help="Ignore stored execution profiles")
@click.option("--trace-out", type=click.Path(), default=None, help="Write the event trace as JSON lines")
@click.pass_obj
@handle_errors
def simulate(ctx, scenario_path, no_profiles, trace_out):
    """Run a deterministic cluster simulation scenario."""
    with open(scenario_path, encoding="utf-8") as fh:
        scenario = sched.load_scenario(fh.read(), catalog=Catalog(ctx.state_dir))
    if no_profiles:
        scenario.use_profiles = False
    profiles = ProfileStore(ctx.state_dir) if scenario.use_profiles else None
    report = sched.run_simulation(scenario, profiles)
    if trace_out:
        with open(trace_out, "w", encoding="utf-8") as fh:
            fh.write(report.trace_jsonl())
    doc = report.to_dict()
    doc.pop("events")
    ctx.emit(
        doc,
        lambda d: (
            f"makespan: {d['makespan']:.3f}s\n"
            f"mean wait: {d['mean_wait_seconds']:.3f}s  max wait: {d['max_wait_seconds']:.3f}s\n"
            + "\n".join(f"busy[{k}]: {v:.3f}s" for k, v in sorted(d["per_class_busy_seconds"].items()))
        ),
    )


@main.command()
@click.argument("task_id")
@click.option("--doi", default=None)
@click.option("--author", default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.pass_obj
@handle_errors
def package(ctx, task_id, doi, author, out_dir):
    """Build and validate an RO-crate for a completed task."""
    store = TaskStore(ctx.state_dir)
    record = store.get(task_id)
    if record.state != COMPLETE:
        click.echo(f"error: task is {record.state}, not COMPLETE", err=True)
        sys.exit(EXIT_USER)
    descriptor = Catalog(ctx.state_dir).get(record.tool_id)
    options = {}
    if doi:
        options["doi"] = doi
    if author:
        options["author"] = author
    crate_dir = out_dir or os.path.join(ctx.state_dir, "crates", task_id)
    pkg = build_crate(record, descriptor, options)
    manifest = write_crate(pkg, crate_dir)
    failures = validate_crate(crate_dir)
    ctx.emit(
        {"crate_dir": crate_dir, "manifest": manifest, "validation_failures": failures},
        lambda d: f"crate at {d['crate_dir']} ({len(d['manifest'])} files, {len(d['validation_failures'])} failures)",
    )


@main.group()
def repo():
    """Open-data repository transfer."""


def _repo_config(ctx, name, base_url):
    cfg = (ctx.config.get("repositories") or {}).get(name, {})
    return RepositoryConfig(
        name=name,
        base_url=base_url or cfg.get("base_url", "https://zenodo.org"),
        access_token=os.environ.get("HETSCHED_REPO_TOKEN") or cfg.get("access_token"),
    )


@repo.command("pull")
@click.argument("record_id")
@click.option("--name", "file_name", default=None, help="Single file to fetch (default: all)")
@click.option("--dest", default=".", type=click.Path())
@click.option("--repo-name", default="zenodo")
@click.option("--base-url", default=None)
@click.pass_obj
@handle_errors
def repo_pull(ctx, record_id, file_name, dest, repo_name, base_url):
    client = RepositoryClient(_repo_config(ctx, repo_name, base_url))
    record = client.fetch_record(record_id)
    names = [file_name] if file_name else [f.name for f in record.files]
    paths = [client.download_file(record, n, dest) for n in names]
    ctx.emit({"record_id": record.record_id, "files": paths}, lambda d: "\n".join(d["files"]))


@repo.command("push")
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--title", required=True)
@click.option("--repo-name", default="zenodo")
@click.option("--base-url", default=None)
@click.pass_obj
@handle_errors
def repo_push(ctx, paths, title, repo_name, base_url):
    client = RepositoryClient(_repo_config(ctx, repo_name, base_url))
    handle = client.create_deposit({"title": title})
    for path in paths:
        client.upload_file(handle, path)
    handle = client.publish(handle)
    ctx.emit(
        {"deposit_id": handle.deposit_id, "state": handle.state, "doi": handle.doi},
        lambda d: f"published deposit {d['deposit_id']}: doi {d['doi']}",
    )


@main.group()
def report():
    """Job and cluster-load reports."""


@report.command("jobs")
@click.option("--tool-id", default=None)
@click.option("--state", default=None)
@click.pass_obj
@handle_errors
def report_jobs(ctx, tool_id, state):
    params = {k: v for k, v in {"tool_id": tool_id, "state": state}.items() if v}
    with ctx.client() as client:
        resp = client.get("/v1/reports/jobs", params=params)
    resp.raise_for_status()
    jobs = resp.json()["jobs"]
    ctx.emit(
        jobs,
        lambda d: "\n".join(
            f"{j['task_id']}  {j['tool_id']:<16} {str(j['final_state']):<14} "
            f"wait={j['wait_seconds'] if j['wait_seconds'] is not None else '-'}"
            for j in d
        )
        or "(no jobs)",
    )


@report.command("load")
@click.option("--from", "window_from", type=float, default=None)
@click.option("--to", "window_to", type=float, default=None)
@click.pass_obj
@handle_errors
def report_load(ctx, window_from, window_to):
    params = {}
    if window_from is not None:
        params["from"] = window_from
    if window_to is not None:
        params["to"] = window_to
    with ctx.client() as client:
        resp = client.get("/v1/reports/load", params=params)
    resp.raise_for_status()
    doc = resp.json()
    ctx.emit(
        doc,
        lambda d: "\n".join(
            f"{name:<16} nodes={c['node_count']} busy={c['busy_seconds']:.1f}s util={c['utilization']:.1%}"
            for name, c in sorted(d["per_class"].items())
        ),
    )


if __name__ == "__main__":
    main()
