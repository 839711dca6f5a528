"""Delimited persistence of diagnostics, snapshots and the run manifest."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .diagnostics import DiagRecord

DIAG_HEADER = "t,rank,h_norm_sq,kappa_plus,kappa_minus,mass"


def _fmt(x: float) -> str:
    """17 significant digits: parses back to the identical double."""
    return f"{x:.17g}"


def write_diagnostics_csv(path: str | Path, records: Iterable[DiagRecord]) -> None:
    lines = [DIAG_HEADER]
    for rec in records:
        lines.append(",".join([
            _fmt(rec.t), str(rec.rank), _fmt(rec.h_norm_sq),
            _fmt(rec.kappa_plus), _fmt(rec.kappa_minus), _fmt(rec.mass),
        ]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_diagnostics_csv(path: str | Path) -> list[DiagRecord]:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0] != DIAG_HEADER:
        raise ValueError(f"{path}: missing diagnostics header {DIAG_HEADER!r}")
    records = []
    for line in lines[1:]:
        t, rank, h2, kp, km, mass = line.split(",")
        records.append(DiagRecord(
            t=float(t), rank=int(rank), h_norm_sq=float(h2),
            kappa_plus=float(kp), kappa_minus=float(km), mass=float(mass),
        ))
    return records


def write_snapshot_rho_1d(path: str | Path, x: np.ndarray, rho: np.ndarray) -> None:
    lines = ["x,rho"]
    lines += [f"{_fmt(xj)},{_fmt(rj)}" for xj, rj in zip(x, rho)]
    Path(path).write_text("\n".join(lines) + "\n")


def write_snapshot_rho_2d(path: str | Path, rho: np.ndarray,
                          shape: tuple[int, int],
                          domain: Sequence[tuple[float, float]]) -> None:
    """Row-major dense CSV; the header line carries the grid shape and domain."""
    (a1, b1), (a2, b2) = domain
    header = (f"# nx1={shape[0]} nx2={shape[1]} "
              f"domain=[{_fmt(a1)},{_fmt(b1)}]x[{_fmt(a2)},{_fmt(b2)}]")
    grid = rho.reshape(shape)
    lines = [header]
    lines += [",".join(_fmt(v) for v in row) for row in grid]
    Path(path).write_text("\n".join(lines) + "\n")


def write_snapshot_f_1d(path: str | Path, f: np.ndarray, v_nodes: np.ndarray) -> None:
    """Dense matrix CSV (cells x velocity nodes); header carries the nodes."""
    header = "# v=" + ",".join(_fmt(v) for v in v_nodes)
    lines = [header]
    lines += [",".join(_fmt(v) for v in row) for row in f]
    Path(path).write_text("\n".join(lines) + "\n")


def write_manifest(path: str | Path, entries: dict) -> None:
    lines = [f"{key} = {value}" for key, value in entries.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out
