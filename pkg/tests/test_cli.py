import json
import os

import httpx
import pytest
import yaml
from click.testing import CliRunner
from fastapi.testclient import TestClient

from hetsched import api, cli
from hetsched import cluster as cl
from hetsched import executor as ex
from hetsched import repo as repomod
from hetsched.catalog import parse_tool
from hetsched.mockrepo import MockFile, MockRepository
from conftest import MEMTOOL_COST, MEMTOOL_CWL, TWO_CLASS_CLUSTER
from tests_scenarios import demo_scenario_doc


@pytest.fixture
def workspace(tmp_path):
    (tmp_path / "memtool.cwl").write_text(MEMTOOL_CWL)
    (tmp_path / "cluster.yaml").write_text(yaml.safe_dump(TWO_CLASS_CLUSTER))
    (tmp_path / "cost.yaml").write_text(yaml.safe_dump(MEMTOOL_COST))
    (tmp_path / "scenario.yaml").write_text(yaml.safe_dump(demo_scenario_doc()))
    return tmp_path


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, workspace, *args, env=None):
    full_env = {"HETSCHED_STATE_DIR": str(workspace / "state")}
    full_env.update(env or {})
    return runner.invoke(cli.main, list(args), env=full_env, catch_exceptions=False)


@pytest.fixture
def service(workspace, monkeypatch):
    svc = api.Service(
        api.ServiceConfig(
            state_dir=str(workspace / "state"),
            work_dir=str(workspace / "work"),
            cluster=cl.load_cluster_spec(yaml.safe_dump(TWO_CLASS_CLUSTER)),
            cost_model=ex.cost_model_from_dict(MEMTOOL_COST),
        )
    )
    svc.catalog.register(parse_tool(MEMTOOL_CWL))
    app = api.create_app(svc)
    monkeypatch.setattr(cli.Ctx, "client", lambda self: TestClient(app))
    return svc


class TestToolCommands:
    def test_add_and_list(self, runner, workspace):
        result = invoke(runner, workspace, "tool", "add", str(workspace / "memtool.cwl"))
        assert result.exit_code == 0
        assert "registered memtool@1.0" in result.output
        result = invoke(runner, workspace, "--json", "tool", "list")
        doc = json.loads(result.output)
        assert doc == [{"id": "memtool", "version": "1.0", "visibility": "public"}]

    def test_add_invalid_tool_exit_1(self, runner, workspace):
        bad = workspace / "bad.cwl"
        bad.write_text("{class: Nope}")
        result = invoke(runner, workspace, "tool", "add", str(bad))
        assert result.exit_code == 1
        assert "error:" in result.output


class TestTaskCommands:
    def test_submit_status_cancel(self, runner, workspace, service):
        result = invoke(
            runner, workspace, "submit", "memtool", "--input", "file_mb=500"
        )
        assert result.exit_code == 0
        task_id = result.output.strip()

        result = invoke(runner, workspace, "status", task_id)
        assert f"{task_id}: QUEUED" in result.output

        result = invoke(runner, workspace, "cancel", task_id)
        assert f"{task_id}: CANCELED" in result.output

    def test_status_json_is_valid_json(self, runner, workspace, service):
        task_id = invoke(
            runner, workspace, "submit", "memtool", "--input", "file_mb=500"
        ).output.strip()
        result = invoke(runner, workspace, "--json", "status", task_id)
        assert json.loads(result.output)["state"] == "QUEUED"

    def test_unknown_task_exit_1(self, runner, workspace, service):
        result = invoke(runner, workspace, "status", "nope")
        assert result.exit_code == 1

    def test_unreachable_api_exit_2(self, runner, workspace):
        result = invoke(runner, workspace, "--api-url", "http://127.0.0.1:1", "status", "x")
        assert result.exit_code == 2
        assert "API error" in result.output

    def test_report_jobs(self, runner, workspace, service):
        invoke(runner, workspace, "submit", "memtool", "--input", "file_mb=500")
        for _ in range(3):
            service.step()
        result = invoke(runner, workspace, "--json", "report", "jobs")
        jobs = json.loads(result.output)
        assert len(jobs) == 1 and jobs[0]["final_state"] == "COMPLETE"

    def test_report_load(self, runner, workspace, service):
        invoke(runner, workspace, "submit", "memtool", "--input", "file_mb=500")
        for _ in range(3):
            service.step()
        result = invoke(runner, workspace, "--json", "report", "load")
        doc = json.loads(result.output)
        assert doc["per_class"]["regular-memory"]["node_count"] == 2


class TestProfileCommands:
    def grid(self, runner, workspace):
        sizes = ",".join(str(100 + i * 400) for i in range(14))
        return invoke(
            runner,
            workspace,
            "--json",
            "profile",
            "grid",
            "memtool",
            "--alt",
            f"file_mb={sizes}",
            "--cluster-spec",
            str(workspace / "cluster.yaml"),
            "--cost-model",
            str(workspace / "cost.yaml"),
        )

    def test_grid_then_train(self, runner, workspace):
        invoke(runner, workspace, "tool", "add", str(workspace / "memtool.cwl"))
        result = self.grid(runner, workspace)
        assert result.exit_code == 0
        assert json.loads(result.output)["samples"] == 14

        result = invoke(runner, workspace, "--json", "profile", "train", "memtool")
        assert result.exit_code == 0
        doc = json.loads(result.output)
        assert doc["cv_accuracy"] >= 0.95
        assert os.path.exists(doc["path"])

    def test_train_without_samples_exit_1(self, runner, workspace):
        invoke(runner, workspace, "tool", "add", str(workspace / "memtool.cwl"))
        result = invoke(runner, workspace, "profile", "train", "memtool")
        assert result.exit_code == 1
        assert "profile grid" in result.output


class TestSimulate:
    def test_simulate_no_profiles(self, runner, workspace):
        trace = workspace / "trace.jsonl"
        result = invoke(
            runner,
            workspace,
            "--json",
            "simulate",
            str(workspace / "scenario.yaml"),
            "--no-profiles",
            "--trace-out",
            str(trace),
        )
        assert result.exit_code == 0
        doc = json.loads(result.output)
        assert doc["makespan"] == 2200.0
        assert len(trace.read_text().splitlines()) > 0


class TestPackage:
    def test_package_completed_task(self, runner, workspace, service):
        task_id = invoke(
            runner, workspace, "submit", "memtool", "--input", "file_mb=500"
        ).output.strip()
        for _ in range(3):
            service.step()
        out = workspace / "crate"
        result = invoke(
            runner, workspace, "--json", "package", task_id, "--doi", "10.5072/mock.1", "--out", str(out)
        )
        assert result.exit_code == 0
        doc = json.loads(result.output)
        assert doc["validation_failures"] == []

    def test_package_queued_task_exit_1(self, runner, workspace, service):
        task_id = invoke(
            runner, workspace, "submit", "memtool", "--input", "file_mb=500"
        ).output.strip()
        result = invoke(runner, workspace, "package", task_id)
        assert result.exit_code == 1


class TestRepoCommands:
    @pytest.fixture
    def mock_repo(self, monkeypatch):
        app = MockRepository(token="tok")
        app.add_record("7", "rec", [MockFile("data.bin", b"abc")])
        original = repomod.RepositoryClient
        monkeypatch.setattr(
            cli,
            "RepositoryClient",
            lambda config: original(config, transport=httpx.WSGITransport(app=app)),
        )
        return app

    def test_pull(self, runner, workspace, mock_repo, tmp_path):
        dest = tmp_path / "downloads"
        result = invoke(
            runner,
            workspace,
            "repo",
            "pull",
            "7",
            "--dest",
            str(dest),
            "--base-url",
            "http://repo.test",
        )
        assert result.exit_code == 0
        assert (dest / "data.bin").read_bytes() == b"abc"

    def test_push_prints_doi(self, runner, workspace, mock_repo, tmp_path):
        f = tmp_path / "crate.zip"
        f.write_bytes(b"zip")
        result = invoke(
            runner,
            workspace,
            "repo",
            "push",
            str(f),
            "--title",
            "demo",
            "--base-url",
            "http://repo.test",
            env={"HETSCHED_REPO_TOKEN": "tok"},
        )
        assert result.exit_code == 0
        assert "doi 10.5072/mock.1" in result.output

    def test_push_without_token_exit_2(self, runner, workspace, mock_repo, tmp_path):
        f = tmp_path / "crate.zip"
        f.write_bytes(b"zip")
        result = invoke(
            runner, workspace, "repo", "push", str(f), "--title", "demo", "--base-url", "http://repo.test"
        )
        assert result.exit_code == 2


class TestConfigResolution:
    def test_config_file_state_dir(self, runner, workspace, tmp_path):
        cfg = tmp_path / "hetsched.yaml"
        state = tmp_path / "cfg-state"
        cfg.write_text(yaml.safe_dump({"state_dir": str(state)}))
        result = runner.invoke(
            cli.main,
            ["--config", str(cfg), "tool", "add", str(workspace / "memtool.cwl")],
            env={},
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        assert (state / "tools" / "memtool@1.0.json").exists()

    def test_flag_beats_env(self, runner, workspace, tmp_path):
        flag_state = tmp_path / "flag-state"
        result = invoke(
            runner,
            workspace,
            "--state-dir",
            str(flag_state),
            "tool",
            "add",
            str(workspace / "memtool.cwl"),
        )
        assert result.exit_code == 0
        assert (flag_state / "tools" / "memtool@1.0.json").exists()
