"""On-disk cache of coset tables.

File layout: ``MAGIC``, a little-endian u32 header length, a JSON header
(``format``, ``p``, ``r``, ``label``, ``count``), the int64 arrays ``reps``
(n x 16), ``satake_exponents`` and ``labels`` (n x 2 each), and finally the
sha256 digest of everything before it.  A digest mismatch means the file is
rebuilt, never reused.
"""
from __future__ import annotations

import fcntl
import hashlib
import json
import logging
import os
import struct
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .cosets import CosetTable

log = logging.getLogger(__name__)

MAGIC = b"SP4COSET"
FORMAT_VERSION = 1
ENV_VAR = "SP4VERIFY_CACHE"


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or Path.home() / ".cache"
    return Path(base) / "sp4verify"


class CacheCorrupt(ValueError):
    pass


def encode(table: CosetTable) -> bytes:
    header = json.dumps({"format": FORMAT_VERSION, "p": table.p, "r": table.r,
                         "label": None if table.label is None else [table.label.a, table.label.b],
                         "count": len(table)}, sort_keys=True).encode()
    body = b"".join([
        MAGIC, struct.pack("<I", len(header)), header,
        np.ascontiguousarray(table.reps, dtype="<i8").tobytes(),
        np.ascontiguousarray(table.satake_exponents, dtype="<i8").tobytes(),
        np.ascontiguousarray(table.labels, dtype="<i8").tobytes(),
    ])
    return body + hashlib.sha256(body).digest()


def decode(blob: bytes) -> CosetTable:
    if len(blob) < len(MAGIC) + 36 or not blob.startswith(MAGIC):
        raise CacheCorrupt("bad magic")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CacheCorrupt("checksum mismatch")
    pos = len(MAGIC)
    (hlen,) = struct.unpack_from("<I", body, pos)
    pos += 4
    header = json.loads(body[pos:pos + hlen])
    pos += hlen
    if header["format"] != FORMAT_VERSION:
        raise CacheCorrupt(f"format {header['format']} != {FORMAT_VERSION}")
    n = header["count"]
    data = np.frombuffer(body, dtype="<i8", offset=pos)
    if data.size != 20 * n:
        raise CacheCorrupt("payload size does not match the header")
    reps = data[:16 * n].reshape(n, 4, 4).astype(np.int64)
    exps = data[16 * n:18 * n].reshape(n, 2).astype(np.int64)
    labels = data[18 * n:].reshape(n, 2).astype(np.int64)
    return CosetTable(header["p"], header["r"], reps, exps, labels, version=FORMAT_VERSION)


class TableCache:
    """Tables of all of ``S(p^r)`` keyed by ``(p, r, format)``."""

    def __init__(self, directory: str | os.PathLike | None = None):
        self.directory = Path(directory) if directory is not None else default_cache_dir()

    def path(self, p: int, r: int) -> Path:
        return self.directory / f"cosets_p{p}_r{r}_v{FORMAT_VERSION}.bin"

    @contextmanager
    def _lock(self):
        self.directory.mkdir(parents=True, exist_ok=True)
        with open(self.directory / ".lock", "a+") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)

    def load(self, p: int, r: int) -> CosetTable | None:
        path = self.path(p, r)
        if not path.exists():
            return None
        try:
            table = decode(path.read_bytes())
        except (CacheCorrupt, ValueError, KeyError) as exc:
            log.warning("discarding cache file %s: %s", path, exc)
            return None
        if (table.p, table.r) != (p, r):
            log.warning("discarding cache file %s: holds p=%d r=%d", path, table.p, table.r)
            return None
        return table

    def store(self, table: CosetTable) -> Path:
        path = self.path(table.p, table.r)
        blob = encode(table)
        with self._lock():
            fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=path.name, suffix=".tmp")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(blob)
                os.replace(tmp, path)
            except BaseException:
                Path(tmp).unlink(missing_ok=True)
                raise
        return path
