"""Disk-resident mini-batch access.

Two access paths are implemented and instrumented:

  packaged   a fixed partition is written once as M sequential binary files
             (little-endian float64, row-major, the p design values then the
             response per row) plus a JSON manifest with per-file SHA-256
             checksums; epochs then read whole files sequentially.
  shuffled   rows are fetched from the original CSV at random byte offsets
             through a one-time row-offset index, as a per-epoch reshuffle
             requires.

Both expose engine-compatible sources, so the optimizer runs unchanged over
memory or disk.
"""

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .partitions import PartitionPlan

FORMAT_VERSION = 1
_DTYPE = "<f8"


class CsvFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"CSV line {line_no}: {message}")


class ChecksumError(IOError):
    pass


class StaleIndexError(IOError):
    pass


@dataclass(frozen=True)
class PackManifest:
    directory: Path
    N: int
    M: int
    n: int
    p: int
    files: tuple  # (name, sha256, nbytes) per batch
    source_csv: str

    def batch_path(self, m: int) -> Path:
        return self.directory / self.files[m][0]


@dataclass
class IoTiming:
    batch_seconds: list
    epoch_seconds: float
    bytes_read: int


def _load_csv_values(csv_path) -> np.ndarray:
    """Parse the whole CSV once; on failure locate the offending line."""
    try:
        values = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2,
                            dtype=np.float64)
        if np.isfinite(values).all():
            return values
    except ValueError:
        pass
    # slow rescan purely to produce an accurate error position
    with open(csv_path, "r", encoding="ascii") as fh:
        header = fh.readline()
        width = len(header.split(","))
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            toks = line.strip().split(",")
            if len(toks) != width:
                raise CsvFormatError(line_no, f"expected {width} fields, found {len(toks)}")
            for tok in toks:
                try:
                    v = float(tok)
                except ValueError:
                    raise CsvFormatError(line_no, f"not a number: {tok!r}") from None
                if not np.isfinite(v):
                    raise CsvFormatError(line_no, f"non-finite value: {tok!r}")
    raise CsvFormatError(1, "unparseable CSV")


def pack(csv_path, plan: PartitionPlan, out_dir) -> PackManifest:
    """Write one packaged binary file per batch of a fixed plan.

    The CSV is read exactly once; each batch file holds its n rows
    contiguously in plan order.
    """
    if plan.regime != "fixed":
        raise ValueError("packaging requires a fixed partition plan")
    values = _load_csv_values(csv_path)
    N, width = values.shape
    p = width - 1
    M, n = plan.batches.shape
    if M * n != N:
        raise ValueError(f"plan covers {M * n} rows but CSV has {N}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for m in range(M):
        block = np.ascontiguousarray(values[plan.batches[m]], dtype=_DTYPE)
        payload = block.tobytes()
        name = f"batch_{m:05d}.bin"
        (out / name).write_bytes(payload)
        files.append((name, hashlib.sha256(payload).hexdigest(), len(payload)))
    manifest = PackManifest(directory=out, N=N, M=M, n=n, p=p,
                            files=tuple(files), source_csv=str(csv_path))
    doc = {
        "format_version": FORMAT_VERSION,
        "dtype": _DTYPE,
        "layout": "row-major, x1..xp then y per row",
        "N": N, "M": M, "n": n, "p": p,
        "source_csv": str(csv_path),
        "files": [{"name": f, "sha256": h, "bytes": b} for f, h, b in files],
    }
    (out / "manifest.json").write_text(json.dumps(doc, indent=1), encoding="ascii")
    return manifest


def open_manifest(directory, verify: bool = True) -> PackManifest:
    """Load a packaged directory; with verify=True every batch file is
    checksummed and any mismatch fails the open."""
    directory = Path(directory)
    doc = json.loads((directory / "manifest.json").read_text(encoding="ascii"))
    if doc.get("format_version") != FORMAT_VERSION:
        raise IOError(f"unsupported pack format {doc.get('format_version')}")
    files = tuple((f["name"], f["sha256"], f["bytes"]) for f in doc["files"])
    manifest = PackManifest(directory=directory, N=doc["N"], M=doc["M"], n=doc["n"],
                            p=doc["p"], files=files, source_csv=doc.get("source_csv", ""))
    if verify:
        for m in range(manifest.M):
            _verify_batch(manifest, m)
    return manifest


def _verify_batch(manifest: PackManifest, m: int) -> bytes:
    name, digest, nbytes = manifest.files[m]
    payload = manifest.batch_path(m).read_bytes()
    if len(payload) != nbytes or hashlib.sha256(payload).hexdigest() != digest:
        raise ChecksumError(f"checksum mismatch for {name}")
    return payload


def read_batch(manifest: PackManifest, m: int, verify: bool = False):
    """Sequential read of one packaged batch -> (X block, Y block)."""
    if not 0 <= m < manifest.M:
        raise IndexError(f"batch index {m} out of range")
    if verify:
        payload = _verify_batch(manifest, m)
        arr = np.frombuffer(payload, dtype=_DTYPE).reshape(manifest.n, manifest.p + 1)
    else:
        arr = np.fromfile(manifest.batch_path(m), dtype=_DTYPE).reshape(manifest.n, manifest.p + 1)
    return np.ascontiguousarray(arr[:, :-1]), arr[:, -1].copy()


def read_epoch_packaged(manifest: PackManifest) -> IoTiming:
    """Read every batch once, sequentially, and record the timing."""
    batch_seconds = []
    nbytes = 0
    tic = time.perf_counter_ns()
    for m in range(manifest.M):
        t0 = time.perf_counter_ns()
        X, Y = read_batch(manifest, m)
        batch_seconds.append((time.perf_counter_ns() - t0) / 1e9)
        nbytes += X.nbytes + Y.nbytes
    epoch = (time.perf_counter_ns() - tic) / 1e9
    return IoTiming(batch_seconds=batch_seconds, epoch_seconds=epoch, bytes_read=nbytes)


@dataclass(frozen=True)
class RowIndex:
    path: str
    offsets: np.ndarray  # byte offset of each data row
    widths: np.ndarray   # byte length of each data row
    p: int
    size: int
    mtime_ns: int


def build_row_index(csv_path) -> RowIndex:
    """One-time scan of the CSV recording each data row's byte offset."""
    path = Path(csv_path)
    stat = path.stat()
    offsets = []
    widths = []
    with open(path, "rb") as fh:
        header = fh.readline()
        p = len(header.split(b",")) - 1
        pos = fh.tell()
        for line in fh:
            if line.strip():
                offsets.append(pos)
                widths.append(len(line))
            pos += len(line)
    return RowIndex(path=str(path), offsets=np.asarray(offsets, dtype=np.int64),
                    widths=np.asarray(widths, dtype=np.int64), p=p,
                    size=stat.st_size, mtime_ns=stat.st_mtime_ns)


def _check_fresh(index: RowIndex) -> None:
    stat = Path(index.path).stat()
    if stat.st_size != index.size or stat.st_mtime_ns != index.mtime_ns:
        raise StaleIndexError(f"{index.path} changed since the row index was built")


def _parse_rows(raw_lines: list, p: int) -> np.ndarray:
    """Parse a batch of raw CSV lines in one C-level call (bit-exact floats)."""
    try:
        block = np.loadtxt(raw_lines, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise CsvFormatError(-1, f"unparseable rows: {exc}") from None
    if block.shape[1] != p + 1:
        raise CsvFormatError(-1, f"expected {p + 1} fields, found {block.shape[1]}")
    return block


def shuffled_epoch_read(csv_path, plan: PartitionPlan, index: RowIndex | None = None):
    """Fetch each batch's rows from their random CSV positions.

    Returns ``(blocks, timing)`` where ``blocks`` lazily yields one
    (X block, Y block) pair per batch and ``timing`` fills in as the
    iterator is consumed (epoch_seconds once exhausted).
    """
    if index is None:
        index = build_row_index(csv_path)
    _check_fresh(index)
    timing = IoTiming(batch_seconds=[], epoch_seconds=0.0, bytes_read=0)

    def blocks():
        tic = time.perf_counter_ns()
        with open(index.path, "rb") as fh:
            for rows in plan.batches:
                t0 = time.perf_counter_ns()
                raw_lines = []
                for r in rows:
                    fh.seek(index.offsets[r])
                    raw = fh.read(index.widths[r])
                    raw_lines.append(raw)
                    timing.bytes_read += len(raw)
                block = _parse_rows(raw_lines, index.p)
                timing.batch_seconds.append((time.perf_counter_ns() - t0) / 1e9)
                yield np.ascontiguousarray(block[:, :-1]), block[:, -1].copy()
        timing.epoch_seconds = (time.perf_counter_ns() - tic) / 1e9

    return blocks(), timing


def read_epoch_shuffled(csv_path, plan: PartitionPlan, index: RowIndex | None = None) -> IoTiming:
    """Consume one shuffled epoch purely for its timing."""
    blocks, timing = shuffled_epoch_read(csv_path, plan, index)
    for _ in blocks:
        pass
    return timing


class PackedSource:
    """Engine data source over a packaged directory (fixed regime only)."""

    def __init__(self, manifest: PackManifest):
        self.manifest = manifest
        self.N = manifest.N
        self.p = manifest.p
        self.M = manifest.M

    def baked_plan(self) -> PartitionPlan:
        idx = np.arange(self.N, dtype=np.int64).reshape(self.M, self.manifest.n)
        return PartitionPlan(batches=idx, regime="fixed", seed=0, epoch=0)

    def gather(self, idx2d: np.ndarray):
        expected = np.arange(self.N, dtype=np.int64).reshape(idx2d.shape) \
            if idx2d.size == self.N else None
        if expected is None or not np.array_equal(idx2d, expected):
            raise ValueError("packaged source serves only its baked fixed plan")
        Xs = np.empty((self.N, self.p))
        Ys = np.empty(self.N)
        n = self.manifest.n
        for m in range(self.M):
            X, Y = read_batch(self.manifest, m)
            Xs[m * n:(m + 1) * n] = X
            Ys[m * n:(m + 1) * n] = Y
        return Xs, Ys


class CsvRowSource:
    """Engine data source reading rows from a CSV via the row-offset index."""

    def __init__(self, csv_path, index: RowIndex | None = None):
        self.index = index if index is not None else build_row_index(csv_path)
        self.N = len(self.index.offsets)
        self.p = self.index.p

    def gather(self, idx2d: np.ndarray):
        _check_fresh(self.index)
        rows = idx2d.reshape(-1)
        raw_lines = []
        with open(self.index.path, "rb") as fh:
            for r in rows:
                fh.seek(self.index.offsets[r])
                raw_lines.append(fh.read(self.index.widths[r]))
        block = _parse_rows(raw_lines, self.p)
        return np.ascontiguousarray(block[:, :-1]), block[:, -1].copy()
