"""Zenodo-style open-repository client: record metadata, verified
downloads, and deposit/publish.

Downloads stream to a temp file, verify md5, and rename atomically, so
the destination is either absent or complete-and-verified. Retries (3
attempts, 0.5/1/2 s backoff) apply to idempotent GETs only.
"""

from __future__ import annotations

import hashlib
import os
import time
from dataclasses import dataclass, field

import httpx


class RepositoryError(Exception):
    pass


class RecordNotFound(RepositoryError):
    pass


class ProtocolError(RepositoryError):
    pass


class AuthError(RepositoryError):
    pass


class ChecksumMismatch(RepositoryError):
    pass


@dataclass(frozen=True)
class RepositoryConfig:
    name: str
    base_url: str
    access_token: str | None = None

    def __post_init__(self):
        if not self.base_url.startswith(("http://", "https://")):
            raise RepositoryError(f"base_url must be absolute HTTP(S): {self.base_url!r}")


@dataclass(frozen=True)
class RecordFile:
    name: str
    size: int
    checksum: str  # "md5:<hex>"
    download_url: str


@dataclass(frozen=True)
class RecordMetadata:
    record_id: str
    title: str
    files: tuple = ()

    def file(self, name: str) -> RecordFile:
        for f in self.files:
            if f.name == name:
                return f
        raise RepositoryError(f"unknown file {name!r} in record {self.record_id}")


@dataclass
class DepositHandle:
    deposit_id: str
    state: str = "draft"  # draft | published
    doi: str | None = None
    bucket: str | None = None


RETRY_BACKOFF = (0.5, 1.0, 2.0)


class RepositoryClient:
    def __init__(self, config: RepositoryConfig, timeout: float = 30.0, transport=None, sleep=time.sleep):
        self.config = config
        self._sleep = sleep
        headers = {}
        if config.access_token:
            headers["Authorization"] = f"Bearer {config.access_token}"
        self._client = httpx.Client(
            base_url=config.base_url, timeout=timeout, headers=headers, transport=transport
        )

    def close(self):
        self._client.close()

    def _get(self, url: str, **kwargs) -> httpx.Response:
        last_exc = None
        for attempt, backoff in enumerate(RETRY_BACKOFF):
            try:
                return self._client.get(url, **kwargs)
            except httpx.TransportError as exc:
                last_exc = exc
                if attempt < len(RETRY_BACKOFF) - 1:
                    self._sleep(backoff)
        raise RepositoryError(f"GET {url} failed after retries: {last_exc}")

    @staticmethod
    def _check(resp: httpx.Response) -> None:
        if resp.status_code == 401:
            raise AuthError("missing or invalid access token")
        if resp.status_code == 404:
            raise RecordNotFound(resp.request.url.path)
        if resp.status_code // 100 != 2:
            raise RepositoryError(f"repository error {resp.status_code}: {resp.text[:200]}")

    def fetch_record(self, record_id: str) -> RecordMetadata:
        resp = self._get(f"/api/records/{record_id}")
        self._check(resp)
        try:
            doc = resp.json()
            files = tuple(
                RecordFile(
                    name=f["key"] if "key" in f else f["name"],
                    size=int(f["size"]),
                    checksum=str(f["checksum"]),
                    download_url=str(f.get("links", {}).get("self") or f["download_url"]),
                )
                for f in doc["files"]
            )
            return RecordMetadata(
                record_id=str(doc.get("id", record_id)),
                title=str(doc.get("metadata", {}).get("title", doc.get("title", ""))),
                files=files,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed record body: {exc}") from exc

    def download_file(self, record: RecordMetadata, name: str, dest_dir: str) -> str:
        entry = record.file(name)
        os.makedirs(dest_dir, exist_ok=True)
        dest = os.path.join(dest_dir, name)
        tmp = dest + ".part"
        digest = hashlib.md5()
        try:
            with self._client.stream("GET", entry.download_url) as resp:
                self._check(resp)
                with open(tmp, "wb") as fh:
                    for chunk in resp.iter_bytes():
                        digest.update(chunk)
                        fh.write(chunk)
            expected = entry.checksum.split(":", 1)[-1]
            if digest.hexdigest() != expected:
                raise ChecksumMismatch(f"{name}: expected md5 {expected}, got {digest.hexdigest()}")
        except (httpx.HTTPError, RepositoryError):
            if os.path.exists(tmp):
                os.remove(tmp)
            raise
        os.replace(tmp, dest)
        return dest

    def create_deposit(self, metadata: dict) -> DepositHandle:
        resp = self._client.post("/api/deposit/depositions", json={"metadata": metadata})
        self._check(resp)
        doc = resp.json()
        return DepositHandle(
            deposit_id=str(doc["id"]),
            state=doc.get("state", "draft"),
            bucket=doc.get("links", {}).get("bucket"),
        )

    def upload_file(self, handle: DepositHandle, path: str) -> DepositHandle:
        name = os.path.basename(path)
        bucket = handle.bucket or handle.deposit_id
        with open(path, "rb") as fh:
            resp = self._client.put(f"/api/files/{bucket}/{name}", content=fh.read())
        self._check(resp)
        return handle

    def publish(self, handle: DepositHandle) -> DepositHandle:
        resp = self._client.post(f"/api/deposit/depositions/{handle.deposit_id}/actions/publish")
        self._check(resp)
        doc = resp.json()
        handle.state = "published"
        handle.doi = doc.get("doi")
        return handle
