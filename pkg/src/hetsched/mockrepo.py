"""In-process mock of the Zenodo-style repository protocol, used by the
offline test suite and runnable standalone for manual poking.

Failure injection: register a file with corrupt=True to serve wrong
bytes, or truncate_at=N to cut the stream mid-file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from wsgiref.simple_server import make_server


@dataclass
class MockFile:
    name: str
    content: bytes
    corrupt: bool = False
    truncate_at: int | None = None

    @property
    def checksum(self) -> str:
        return "md5:" + hashlib.md5(self.content).hexdigest()


@dataclass
class MockRecord:
    record_id: str
    title: str
    files: list = field(default_factory=list)


@dataclass
class MockDeposit:
    deposit_id: str
    metadata: dict
    files: dict = field(default_factory=dict)
    published: bool = False
    doi: str | None = None


class MockRepository:
    """WSGI app implementing the repository protocol subset."""

    def __init__(self, token: str = "secret-token"):
        self.token = token
        self.records: dict = {}
        self.deposits: dict = {}
        self._next_deposit = 1

    def add_record(self, record_id: str, title: str, files: list) -> MockRecord:
        record = MockRecord(record_id=record_id, title=title, files=files)
        self.records[record_id] = record
        return record

    # -------------------------------------------------------- WSGI

    def __call__(self, environ, start_response):
        method = environ["REQUEST_METHOD"]
        path = environ["PATH_INFO"]
        auth = environ.get("HTTP_AUTHORIZATION", "")

        def reply(status: str, body: bytes, content_type="application/json"):
            start_response(status, [("Content-Type", content_type), ("Content-Length", str(len(body)))])
            return [body]

        def json_reply(status: str, doc):
            return reply(status, json.dumps(doc).encode())

        if method == "GET" and path.startswith("/api/records/"):
            parts = path[len("/api/records/"):].split("/")
            record = self.records.get(parts[0])
            if record is None:
                return json_reply("404 Not Found", {"message": "record not found"})
            if len(parts) >= 3 and parts[1] == "files":
                for f in record.files:
                    if f.name == parts[2]:
                        body = f.content
                        if f.corrupt:
                            body = b"X" * len(body)
                        if f.truncate_at is not None:
                            body = body[: f.truncate_at]
                        return reply("200 OK", body, "application/octet-stream")
                return json_reply("404 Not Found", {"message": "file not found"})
            return json_reply(
                "200 OK",
                {
                    "id": record.record_id,
                    "metadata": {"title": record.title},
                    "files": [
                        {
                            "key": f.name,
                            "size": len(f.content),
                            "checksum": f.checksum,
                            "links": {"self": f"/api/records/{record.record_id}/files/{f.name}"},
                        }
                        for f in record.files
                    ],
                },
            )

        if not auth.endswith(self.token):
            return json_reply("401 Unauthorized", {"message": "token required"})

        if method == "POST" and path == "/api/deposit/depositions":
            deposit_id = str(self._next_deposit)
            self._next_deposit += 1
            try:
                size = int(environ.get("CONTENT_LENGTH") or 0)
                payload = json.loads(environ["wsgi.input"].read(size) or b"{}")
            except json.JSONDecodeError:
                payload = {}
            deposit = MockDeposit(deposit_id=deposit_id, metadata=payload.get("metadata", {}))
            self.deposits[deposit_id] = deposit
            return json_reply(
                "201 Created",
                {"id": deposit_id, "state": "draft", "links": {"bucket": deposit_id}},
            )

        if method == "PUT" and path.startswith("/api/files/"):
            _, _, _, bucket, name = path.split("/", 4)
            deposit = self.deposits.get(bucket)
            if deposit is None:
                return json_reply("404 Not Found", {"message": "no such bucket"})
            size = int(environ.get("CONTENT_LENGTH") or 0)
            deposit.files[name] = environ["wsgi.input"].read(size)
            return json_reply("200 OK", {"key": name, "size": size})

        if method == "POST" and path.startswith("/api/deposit/depositions/") and path.endswith("/actions/publish"):
            deposit_id = path.split("/")[4]
            deposit = self.deposits.get(deposit_id)
            if deposit is None:
                return json_reply("404 Not Found", {"message": "no such deposit"})
            if not deposit.files:
                return json_reply("400 Bad Request", {"message": "publish on empty deposit"})
            if not deposit.published:
                deposit.published = True
                deposit.doi = f"10.5072/mock.{deposit_id}"
            # publishing twice is an idempotent success
            return json_reply("200 OK", {"id": deposit_id, "state": "published", "doi": deposit.doi})

        return json_reply("404 Not Found", {"message": "no such route"})


def serve(port: int = 8090, token: str = "secret-token"):
    app = MockRepository(token=token)
    with make_server("127.0.0.1", port, app) as httpd:
        print(f"mock repository on http://127.0.0.1:{port} (token: {token})")
        httpd.serve_forever()


if __name__ == "__main__":
    serve()
