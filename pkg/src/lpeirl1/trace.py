"""Per-iteration trace records and their CSV interchange format.

The CSV header starts with the nine standard columns
k,F_eps,psi,step_norm,rel_step,support_size,eps_norm1,mse,stationarity
followed by bookkeeping columns (sign_hash, support_hash, min_nonzero,
dist_ref) that let the diagnose pipeline reproduce in-process results from
the file alone. Floats are written with shortest round-trip decimals, so a
parse of the file recovers the in-memory values bit for bit.
"""

from __future__ import annotations

import csv
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import FileFormatError

# First nine columns are a fixed external contract; extras follow them.
REQUIRED_COLUMNS = (
    "k",
    "F_eps",
    "psi",
    "step_norm",
    "rel_step",
    "support_size",
    "eps_norm1",
    "mse",
    "stationarity",
)
EXTRA_COLUMNS = ("sign_hash", "support_hash", "min_nonzero", "dist_ref")
TRACE_COLUMNS = REQUIRED_COLUMNS + EXTRA_COLUMNS


def hash_sign_pattern(signs: np.ndarray) -> int:
    """CRC-32 of the order-preserving byte encoding of a {-1,0,+1} pattern."""
    b = (np.asarray(signs, dtype=np.int8) + 1).astype(np.uint8).tobytes()
    return zlib.crc32(b)


def hash_support(signs: np.ndarray) -> int:
    """CRC-32 of the support indicator bytes (1 where nonzero)."""
    b = (np.asarray(signs, dtype=np.int8) != 0).astype(np.uint8).tobytes()
    return zlib.crc32(b)


@dataclass
class IterationRecord:
    """Scalar snapshot of one solver iteration.

    x is an optional full-vector snapshot kept only in memory (dropped by
    the CSV serializer); every other field is a scalar.
    """

    k: int
    F_eps: float
    psi: float
    step_norm: float
    rel_step: float
    support_size: int
    sign_hash: int
    support_hash: int
    eps_norm1: float
    min_nonzero: float | None = None
    stationarity: float | None = None
    mse: float | None = None
    dist_ref: float | None = None
    x: np.ndarray | None = field(default=None, repr=False, compare=False)


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def write_trace_csv(path, records) -> None:
    """Write records as CSV with the standard header; empty cells for None."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    str(r.k),
                    _fmt(r.F_eps),
                    _fmt(r.psi),
                    _fmt(r.step_norm),
                    _fmt(r.rel_step),
                    str(r.support_size),
                    _fmt(r.eps_norm1),
                    _fmt(r.mse),
                    _fmt(r.stationarity),
                    str(r.sign_hash),
                    str(r.support_hash),
                    _fmt(r.min_nonzero),
                    _fmt(r.dist_ref),
                ]
            )


def _parse_float(cell: str, row: int, col: str, optional: bool = False):
    if cell == "":
        if optional:
            return None
        raise FileFormatError(f"row {row}: missing value for column {col!r}")
    try:
        return float(cell)
    except ValueError as exc:
        raise FileFormatError(f"row {row}: bad float {cell!r} in column {col!r}") from exc


def _parse_int(cell: str, row: int, col: str) -> int:
    try:
        return int(cell)
    except ValueError as exc:
        raise FileFormatError(f"row {row}: bad integer {cell!r} in column {col!r}") from exc


def read_trace_csv(path) -> list[IterationRecord]:
    """Parse a trace CSV back into records; raises FileFormatError with the row number."""
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FileFormatError("row 1: empty trace file") from None
        if tuple(header[: len(REQUIRED_COLUMNS)]) != REQUIRED_COLUMNS:
            raise FileFormatError(
                f"row 1: header must start with {','.join(REQUIRED_COLUMNS)}"
            )
        idx = {name: i for i, name in enumerate(header)}
        records: list[IterationRecord] = []
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FileFormatError(
                    f"row {rowno}: expected {len(header)} cells, got {len(row)}"
                )

            def cell(name):
                i = idx.get(name)
                return row[i] if i is not None else ""

            records.append(
                IterationRecord(
                    k=_parse_int(cell("k"), rowno, "k"),
                    F_eps=_parse_float(cell("F_eps"), rowno, "F_eps"),
                    psi=_parse_float(cell("psi"), rowno, "psi"),
                    step_norm=_parse_float(cell("step_norm"), rowno, "step_norm"),
                    rel_step=_parse_float(cell("rel_step"), rowno, "rel_step"),
                    support_size=_parse_int(cell("support_size"), rowno, "support_size"),
                    eps_norm1=_parse_float(cell("eps_norm1"), rowno, "eps_norm1"),
                    mse=_parse_float(cell("mse"), rowno, "mse", optional=True),
                    stationarity=_parse_float(
                        cell("stationarity"), rowno, "stationarity", optional=True
                    ),
                    sign_hash=_parse_int(cell("sign_hash") or "0", rowno, "sign_hash"),
                    support_hash=_parse_int(
                        cell("support_hash") or "0", rowno, "support_hash"
                    ),
                    min_nonzero=_parse_float(
                        cell("min_nonzero"), rowno, "min_nonzero", optional=True
                    ),
                    dist_ref=_parse_float(cell("dist_ref"), rowno, "dist_ref", optional=True),
                )
            )
    return records


def mse(x: np.ndarray, x_true: np.ndarray) -> float:
    """Mean squared error (1/n) * ||x - x_true||^2."""
    d = x - x_true
    return float(d @ d) / x.shape[0]
