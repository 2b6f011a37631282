"""Drive construction, single runs, 2-D scans and CSV emission."""

from __future__ import annotations

import csv
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..effective import EffectiveDrive
from ..errors import NhstaError
from ..propagator import Trajectory, evolve, fidelity, populations
from ..three_level import ThreeLevelDrive
from ..two_level import TwoLevelDrive
from .config import ScanSpec, SystemConfig, with_axis_value

FLOAT_FMT = "%.17g"


def build_drive(cfg: SystemConfig):
    """Hamiltonian builder for ``cfg`` (``H_ref + H_CD``)."""
    key = cfg.cd_key
    if cfg.system == "TwoLevel":
        return TwoLevelDrive(cfg.params, key, imag_only=cfg.imag_only, dress_cd=cfg.dress_cd)
    if cfg.system == "ThreeLevel":
        return ThreeLevelDrive(cfg.params, key, dress_cd=cfg.dress_cd, compare=key == "projector")
    return EffectiveDrive(cfg.params, key)


def initial_state(cfg: SystemConfig) -> np.ndarray:
    psi = np.zeros(cfg.dim, dtype=complex)
    psi[cfg.initial_state - 1] = 1.0
    return psi


def with_dt(cfg: SystemConfig, dt: float | None) -> SystemConfig:
    if dt is None:
        return cfg
    return replace(cfg, integrator=replace(cfg.integrator, dt=dt))


def propagate(cfg: SystemConfig) -> tuple[Trajectory, object]:
    drive = build_drive(cfg)
    tr = evolve(drive, initial_state(cfg), cfg.tf, cfg.integrator, meta={"system": cfg.system, "cd": cfg.cd})
    return tr, drive


def trajectory_header(dim: int) -> list[str]:
    cols = ["t"] + [f"P{i}" for i in range(1, dim + 1)] + ["norm"]
    for i in range(1, dim + 1):
        cols += [f"reC{i}", f"imC{i}"]
    return cols


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def write_rows(path: str | Path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_trajectory_csv(path: str | Path, tr: Trajectory) -> Path:
    pops = populations(tr)
    norm = tr.norms()
    amps = np.empty((len(tr.times), 2 * tr.dim))
    amps[:, 0::2] = tr.states.real
    amps[:, 1::2] = tr.states.imag
    table = np.column_stack([tr.times, pops, norm, amps])
    return write_rows(path, trajectory_header(tr.dim), table)


def summarize(cfg: SystemConfig, tr: Trajectory, drive, preset: str | None = None) -> dict:
    discrepancy = getattr(drive, "max_cd_discrepancy", None) if getattr(drive, "compare", False) else None
    return {
        "preset": preset,
        "fidelity": fidelity(tr, cfg.target_level),
        "finalPopulations": [float(x) for x in populations(tr)[-1]],
        "minNorm": float(np.min(tr.norms())),
        "maxCdDiscrepancy": discrepancy,
    }


def run_config(
    cfg: SystemConfig,
    csv_path: str | Path | None = None,
    preset: str | None = None,
) -> tuple[Trajectory, dict]:
    """Propagate ``cfg``, write its trajectory CSV and return ``(trajectory, summary)``.

    The CSV goes to ``csv_path``, else ``cfg.outputs["trajectory"]``, else
    nowhere.
    """
    tr, drive = propagate(cfg)
    path = csv_path or cfg.outputs.get("trajectory")
    if path:
        write_trajectory_csv(path, tr)
    return tr, summarize(cfg, tr, drive, preset)


@dataclass
class ScanResult:
    axis1: np.ndarray
    axis2: np.ndarray
    fidelity: np.ndarray  # shape (len(axis1), len(axis2)); NaN marks a failed cell
    failures: list[tuple[float, float, str]] = field(default_factory=list)

    def rows(self):
        for i, a in enumerate(self.axis1):
            for j, b in enumerate(self.axis2):
                yield a, b, self.fidelity[i, j]

    def finite_min(self) -> float:
        return float(np.nanmin(self.fidelity))


def _cell(cfg: SystemConfig, target: int) -> tuple[float, str | None]:
    try:
        tr, _ = propagate(cfg)
        return fidelity(tr, target), None
    except NhstaError as exc:
        return math.nan, f"{type(exc).__name__}: {exc}"


def default_threads() -> int:
    return os.cpu_count() or 1


def run_scan(spec: ScanSpec, threads: int | None = None, csv_path: str | Path | None = None) -> ScanResult:
    """Fidelity on the ``axis1 x axis2`` grid, rows ordered axis1-major.

    Failed cells become NaN and are listed in a ``<csv>.log`` sidecar.
    Results do not depend on ``threads``.
    """
    a1, a2 = spec.axis1.values(), spec.axis2.values()
    cells = []
    for x in a1:
        for y in a2:
            cfg = with_axis_value(with_axis_value(spec.base, spec.axis1.name, x), spec.axis2.name, y)
            cells.append(cfg)
    target = spec.target_level
    threads = threads or default_threads()
    if threads > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(cells))) as pool:
            out = list(pool.map(_cell, cells, [target] * len(cells)))
    else:
        out = [_cell(c, target) for c in cells]
    fid = np.array([f for f, _ in out]).reshape(len(a1), len(a2))
    failures = []
    for k, (_, err) in enumerate(out):
        if err is not None:
            x, y = a1[k // len(a2)], a2[k % len(a2)]
            failures.append((x, y, err))
            warnings.warn(f"scan cell ({x:.6g}, {y:.6g}) failed: {err}", stacklevel=2)
    result = ScanResult(np.array(a1), np.array(a2), fid, failures)
    path = csv_path or spec.outputs.get("scan")
    if path:
        write_scan_csv(path, result)
    return result


def write_scan_csv(path: str | Path, result: ScanResult) -> Path:
    path = write_rows(path, ["axis1", "axis2", "fidelity"], result.rows())
    log = path.with_name(path.name + ".log")
    with open(log, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["axis1", "axis2", "error"])
        for x, y, err in result.failures:
            w.writerow([_fmt(x), _fmt(y), err])
    return path
