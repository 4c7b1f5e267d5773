import os

import httpx
import pytest

from hetsched import repo
from hetsched.mockrepo import MockFile, MockRepository

TOKEN = "secret-token"


@pytest.fixture
def mock_repo():
    app = MockRepository(token=TOKEN)
    app.add_record(
        "42",
        "demo record",
        [
            MockFile("data.bin", b"hello repository\n" * 100),
            MockFile("bad.bin", b"payload", corrupt=True),
            MockFile("cut.bin", b"0123456789", truncate_at=4),
        ],
    )
    return app


def make_client(app, token=TOKEN):
    return repo.RepositoryClient(
        repo.RepositoryConfig(name="mock", base_url="http://repo.test", access_token=token),
        transport=httpx.WSGITransport(app=app),
        sleep=lambda s: None,
    )


class TestConfig:
    def test_relative_base_url_rejected(self):
        with pytest.raises(repo.RepositoryError, match="absolute"):
            repo.RepositoryConfig(name="x", base_url="repo.test")


class TestFetch:
    def test_record_metadata(self, mock_repo):
        record = make_client(mock_repo).fetch_record("42")
        assert record.title == "demo record"
        assert record.file("data.bin").size == 1700
        assert record.file("data.bin").checksum.startswith("md5:")

    def test_record_not_found(self, mock_repo):
        with pytest.raises(repo.RecordNotFound):
            make_client(mock_repo).fetch_record("999")

    def test_unknown_file_name(self, mock_repo):
        record = make_client(mock_repo).fetch_record("42")
        with pytest.raises(repo.RepositoryError, match="unknown file"):
            record.file("nope.bin")

    def test_malformed_body_protocol_error(self):
        def bad_app(environ, start_response):
            body = b'{"files": [{"nonsense": true}]}'
            start_response("200 OK", [("Content-Type", "application/json")])
            return [body]

        with pytest.raises(repo.ProtocolError, match="malformed record"):
            make_client(bad_app).fetch_record("42")

    def test_get_retries_then_fails(self):
        calls = []

        class FlakyTransport(httpx.BaseTransport):
            def handle_request(self, request):
                calls.append(request.url.path)
                raise httpx.ConnectError("boom", request=request)

        client = repo.RepositoryClient(
            repo.RepositoryConfig(name="m", base_url="http://repo.test"),
            transport=FlakyTransport(),
            sleep=lambda s: None,
        )
        with pytest.raises(repo.RepositoryError, match="after retries"):
            client.fetch_record("42")
        assert len(calls) == 3


class TestDownload:
    def test_verified_download(self, mock_repo, tmp_path):
        client = make_client(mock_repo)
        record = client.fetch_record("42")
        dest = client.download_file(record, "data.bin", str(tmp_path))
        assert open(dest, "rb").read() == b"hello repository\n" * 100

    def test_corrupt_bytes_leave_no_file(self, mock_repo, tmp_path):
        client = make_client(mock_repo)
        record = client.fetch_record("42")
        with pytest.raises(repo.ChecksumMismatch):
            client.download_file(record, "bad.bin", str(tmp_path))
        assert os.listdir(tmp_path) == []

    def test_truncated_stream_leaves_no_file(self, mock_repo, tmp_path):
        client = make_client(mock_repo)
        record = client.fetch_record("42")
        with pytest.raises(repo.ChecksumMismatch):
            client.download_file(record, "cut.bin", str(tmp_path))
        assert os.listdir(tmp_path) == []


class TestDeposit:
    def test_full_push_flow(self, mock_repo, tmp_path):
        client = make_client(mock_repo)
        handle = client.create_deposit({"title": "my crate"})
        assert handle.state == "draft" and handle.bucket == handle.deposit_id
        f = tmp_path / "crate.zip"
        f.write_bytes(b"zipzip")
        client.upload_file(handle, str(f))
        handle = client.publish(handle)
        assert handle.state == "published"
        assert handle.doi == "10.5072/mock.1"

    def test_write_without_token_is_401(self, mock_repo):
        client = make_client(mock_repo, token=None)
        with pytest.raises(repo.AuthError):
            client.create_deposit({"title": "x"})

    def test_publish_empty_deposit_rejected(self, mock_repo):
        client = make_client(mock_repo)
        handle = client.create_deposit({"title": "x"})
        with pytest.raises(repo.RepositoryError, match="400"):
            client.publish(handle)

    def test_publish_idempotent(self, mock_repo, tmp_path):
        client = make_client(mock_repo)
        handle = client.create_deposit({})
        f = tmp_path / "a.txt"
        f.write_text("a")
        client.upload_file(handle, str(f))
        first = client.publish(handle).doi
        second = client.publish(handle).doi
        assert first == second == "10.5072/mock.1"

    def test_reads_stay_public(self, mock_repo):
        client = make_client(mock_repo, token=None)
        assert client.fetch_record("42").record_id == "42"
