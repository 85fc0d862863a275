"""Report rows (CSV and JSON) and the WKBF binary snapshot format.

CSV/JSON rows have the fixed fields ``eps, quantity, value, norm_kind, sigma,
status, config_hash``.  Floats are written with 17 significant digits so
identical runs produce identical bytes.

WKBF snapshot layout (all little-endian):

    offset  type          content
    0       4 bytes       magic b"WKBF"
    4       u32           format version (1)
    8       u32           ndim
    12      u32 * ndim    grid dimensions
    ...     f64           eps
    ...     f64           t
    ...     f64 pairs     coefficients (re, im), row-major, numpy FFT ordering
"""

from __future__ import annotations

import csv
import io
import json
import math
import struct
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .errors import ConfigError, WkbLabError

COLUMNS = ("eps", "quantity", "value", "norm_kind", "sigma", "status", "config_hash")
MAGIC = b"WKBF"
VERSION = 1


def fmt_float(v: Optional[float]) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def fmt_sigma(sigma) -> str:
    if sigma is None:
        return ""
    if isinstance(sigma, (tuple, list)):
        return ":".join(fmt_float(s) for s in sigma)
    return fmt_float(sigma)


@dataclass(frozen=True)
class ReportRow:
    eps: Optional[float]
    quantity: str
    value: float
    norm_kind: str = ""
    sigma: object = None
    status: str = "ok"
    config_hash: str = ""

    def cells(self) -> list[str]:
        return [fmt_float(self.eps), self.quantity, fmt_float(self.value), self.norm_kind,
                fmt_sigma(self.sigma), self.status, self.config_hash]


def stamp(rows: Iterable[ReportRow], config_hash: str) -> list[ReportRow]:
    return [ReportRow(**{**asdict(r), "config_hash": config_hash}) for r in rows]


def rows_to_csv(rows: Iterable[ReportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow(row.cells())
    return buf.getvalue()


def rows_to_json(rows: Iterable[ReportRow], meta: Optional[dict] = None) -> str:
    records = [dict(zip(COLUMNS, row.cells())) for row in rows]
    return json.dumps({"meta": meta or {}, "columns": list(COLUMNS), "rows": records}, indent=2, sort_keys=False) + "\n"


def read_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise WkbLabError(f"unexpected CSV header {reader.fieldnames}")
    return list(reader)


def concat_reports(texts: Iterable[str]) -> list[dict]:
    """Join CSV reports; refuses reports produced from different configs."""
    out: list[dict] = []
    hashes = set()
    for text in texts:
        rows = read_csv(text)
        hashes.update(r["config_hash"] for r in rows)
        out.extend(rows)
    if len(hashes) > 1:
        raise ConfigError(f"reports come from different configs: {sorted(hashes)}")
    return out


class ReportWriter:
    """Single writer for one output directory; every file of a run goes through it."""

    def __init__(self, directory: Union[str, Path], formats=("csv", "json")):
        self.directory = Path(directory)
        self.formats = tuple(formats)
        self.written: list[Path] = []

    def _path(self, name: str) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        return self.directory / name

    def write_report(self, stem: str, rows: list[ReportRow], meta: Optional[dict] = None) -> list[Path]:
        paths = []
        if "csv" in self.formats:
            p = self._path(f"{stem}.csv")
            p.write_text(rows_to_csv(rows))
            paths.append(p)
        if "json" in self.formats:
            p = self._path(f"{stem}.json")
            p.write_text(rows_to_json(rows, meta))
            paths.append(p)
        self.written.extend(paths)
        return paths

    def write_snapshot(self, name: str, coeffs: np.ndarray, eps: float, t: float) -> Path:
        p = self._path(name)
        p.write_bytes(encode_snapshot(coeffs, eps, t))
        self.written.append(p)
        return p


def encode_snapshot(coeffs: np.ndarray, eps: float, t: float) -> bytes:
    c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    head = MAGIC + struct.pack("<II", VERSION, c.ndim) + struct.pack(f"<{c.ndim}I", *c.shape)
    head += struct.pack("<dd", eps, t)
    return head + c.astype("<c16").tobytes(order="C")


def decode_snapshot(blob: bytes) -> tuple[np.ndarray, float, float]:
    if blob[:4] != MAGIC:
        raise WkbLabError("not a WKBF snapshot")
    version, ndim = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise WkbLabError(f"unsupported WKBF version {version}")
    off = 12
    shape = struct.unpack_from(f"<{ndim}I", blob, off)
    off += 4 * ndim
    eps, t = struct.unpack_from("<dd", blob, off)
    off += 16
    count = math.prod(shape)
    if len(blob) - off != 16 * count:
        raise WkbLabError("truncated WKBF snapshot")
    coeffs = np.frombuffer(blob, dtype="<c16", count=count, offset=off).reshape(shape).astype(np.complex128)
    return coeffs, eps, t
