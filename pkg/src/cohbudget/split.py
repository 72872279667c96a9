"""
Shared-laser transceiver: one laser split between the signal modulator and the LO.

The split ratio ``rho`` is the fraction of laser power sent to the modulator.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ._parallel import ordered_map
from .budget import LinkConfig, link_budget
from .model import Infeasible, NoiseParams

GRID_CSV_HEADER = ("rho", "y_value", "opb_db", "feasible")
Y_AXES = ("p_laser_dbm", "irnd", "rin_db_hz")

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SplitConfig:
    p_laser_dbm: float
    rho: float
    excess_loss_db: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"split ratio must lie in (0, 1), got {self.rho}")
        if not self.excess_loss_db >= 0:
            raise ValueError("excess_loss_db must be >= 0")


def opb_with_split(cfg: SplitConfig, link: LinkConfig, params: NoiseParams) -> float | Infeasible:
    """OPB [dB] with the laser split ``rho : 1 - rho`` between modulator and LO."""
    mod_in = cfg.p_laser_dbm + 10.0 * math.log10(cfg.rho) - cfg.excess_loss_db
    lo = cfg.p_laser_dbm + 10.0 * math.log10(1.0 - cfg.rho) - cfg.excess_loss_db
    return link_budget(link, params, mod_input_dbm=mod_in, lo_power_dbm=lo).opb_db


def _opb_value(rho, p_laser_dbm, excess_loss_db, link, params) -> float:
    v = opb_with_split(SplitConfig(p_laser_dbm, rho, excess_loss_db), link, params)
    return -math.inf if isinstance(v, Infeasible) else v


def seed_grid(n: int = 101) -> np.ndarray:
    """``n`` evenly spaced split ratios strictly inside (0, 1)."""
    return np.linspace(0.0, 1.0, n + 2)[1:-1]


@dataclass(frozen=True)
class SplitOptimum:
    rho_opt: float
    opb_opt_db: float
    iterations: int
    at_boundary: bool = False
    unimodal: bool = True

    def to_json_dict(self) -> dict:
        return {"rho_opt": self.rho_opt, "opb_opt_db": self.opb_opt_db, "iterations": self.iterations}


def optimize_split(
    p_laser_dbm: float,
    link: LinkConfig,
    params: NoiseParams,
    excess_loss_db: float = 0.0,
    tol: float = 1e-4,
    n_seed: int = 101,
) -> SplitOptimum | Infeasible:
    """
    Split ratio maximising the OPB.

    A seed grid brackets the best point, golden-section search refines it to
    ``tol``. If the best seed sits on the last (or first) grid point the
    search runs up to the open boundary and the result is flagged
    ``at_boundary``. ``unimodal`` is False when the seed grid shows more than
    one local maximum; the bracket then comes from a 100x denser grid.
    """
    grid = seed_grid(n_seed)

    def f(rho):
        return _opb_value(rho, p_laser_dbm, excess_loss_db, link, params)

    vals = np.array([f(r) for r in grid])
    if not np.isfinite(vals).any():
        return Infeasible("no feasible split ratio on the seed grid")
    finite = np.where(np.isfinite(vals), vals, -1e300)
    steps = np.sign(np.diff(finite))
    steps = steps[steps != 0]
    unimodal = not np.any(np.diff(steps) > 0)
    if not unimodal:
        grid = seed_grid(100 * n_seed + 1)
        vals = np.array([f(r) for r in grid])
    k = int(np.argmax(vals))

    # stay strictly inside (0, 1)
    eps = 1e-12
    lo = grid[k - 1] if k > 0 else eps
    hi = grid[k + 1] if k + 1 < len(grid) else 1.0 - eps

    c = hi - _INV_PHI * (hi - lo)
    d_ = lo + _INV_PHI * (hi - lo)
    fc, fd = f(c), f(d_)
    it = 0
    while hi - lo > tol:
        it += 1
        if fc >= fd:
            hi, d_, fd = d_, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d_, fd
            d_ = lo + _INV_PHI * (hi - lo)
            fd = f(d_)
    rho, best = (c, fc) if fc >= fd else (d_, fd)
    if vals[k] > best:
        rho, best = float(grid[k]), float(vals[k])
    at_boundary = bool(rho < 2 * tol or rho > 1.0 - 2 * tol)
    return SplitOptimum(float(rho), float(best), it, at_boundary, bool(unimodal))


def _apply_y(y_axis: str, y: float, p_laser_dbm: float, params: NoiseParams):
    if y_axis == "p_laser_dbm":
        return y, params
    if y_axis == "irnd":
        return p_laser_dbm, replace(params, irnd=y)
    if y_axis == "rin_db_hz":
        return p_laser_dbm, replace(params, rin_db_hz=y)
    raise ValueError(f"y_axis must be one of {Y_AXES}, got {y_axis!r}")


def _check_grid(name, values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError(f"{name} grid is empty")
    if np.any(np.diff(values) <= 0):
        raise ValueError(f"{name} grid must be strictly increasing")
    return values


@dataclass(frozen=True)
class OpbGrid:
    rho: np.ndarray
    y_axis: str
    y: np.ndarray
    opb_db: np.ndarray  # shape (len(y), len(rho)), NaN where infeasible

    def argmax_rho(self) -> np.ndarray:
        """Best grid split ratio per y value (NaN for all-infeasible rows)."""
        out = np.full(len(self.y), np.nan)
        for i, row in enumerate(self.opb_db):
            if np.isfinite(row).any():
                out[i] = self.rho[np.nanargmax(row)]
        return out

    def to_csv(self, fh=None) -> str | None:
        out = io.StringIO() if fh is None else fh
        w = csv.writer(out, lineterminator="\n")
        w.writerow(GRID_CSV_HEADER)
        for i, y in enumerate(self.y):
            for j, rho in enumerate(self.rho):
                v = self.opb_db[i, j]
                ok = bool(np.isfinite(v))
                w.writerow([format(rho, ".12g"), format(y, ".12g"), format(v, ".12g") if ok else "",
                            "true" if ok else "false"])
        return out.getvalue() if fh is None else None


def opb_grid(
    rho_values: Sequence[float],
    y_axis: str,
    y_values: Sequence[float],
    link: LinkConfig,
    params: NoiseParams,
    p_laser_dbm: float = 16.0,
    excess_loss_db: float = 0.0,
) -> OpbGrid:
    """
    OPB over split ratio and one more parameter.

    ``y_axis`` is the laser power [dBm], the TIA noise density ``irnd``
    [A/sqrt(Hz)] or the LO RIN [dB/Hz]. ``p_laser_dbm`` is used unless the
    laser power itself is swept.
    """
    rho = _check_grid("rho", rho_values)
    y = _check_grid("y", y_values)
    if y_axis not in Y_AXES:
        raise ValueError(f"y_axis must be one of {Y_AXES}, got {y_axis!r}")

    def row(yv):
        p, prm = _apply_y(y_axis, float(yv), p_laser_dbm, params)
        vals = []
        for r in rho:
            v = opb_with_split(SplitConfig(p, float(r), excess_loss_db), link, prm)
            vals.append(math.nan if isinstance(v, Infeasible) else v)
        return vals

    mat = np.array(ordered_map(row, y), dtype=float).reshape(len(y), len(rho))
    return OpbGrid(rho, y_axis, y, mat)
