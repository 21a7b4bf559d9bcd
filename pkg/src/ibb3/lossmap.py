"""Gridded per-half-bridge switching-energy maps.

A LossMap holds soft and hard switching energies per half-bridge and per
transition on a rectangular (voltage, current) grid.  The current axis
is the switched current per device: with n_par devices in parallel each
device commutates i/n_par, so a half-bridge evaluation looks the map up
at the per-device current and receives the per-half-bridge energy (two
devices worth).  Queries inside the grid are bilinear; outside they
clamp to the nearest edge and set a flag.

CSV format: header ``v_V, i_A, e_soft_J, e_hard_J``, rectangular grid,
row-major by voltage.  Ragged grids are rejected.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np


class LossMapError(ValueError):
    pass


@dataclass
class LossMap:
    v_grid: np.ndarray
    i_grid: np.ndarray
    e_soft: np.ndarray  # (len(v_grid), len(i_grid)) joules per half-bridge
    e_hard: np.ndarray
    normalization: str = "per-half-bridge-per-transition"
    clamped_queries: int = field(default=0, compare=False)

    def __post_init__(self):
        self.v_grid = np.asarray(self.v_grid, dtype=float)
        self.i_grid = np.asarray(self.i_grid, dtype=float)
        self.e_soft = np.asarray(self.e_soft, dtype=float)
        self.e_hard = np.asarray(self.e_hard, dtype=float)
        if self.v_grid.size < 2 or self.i_grid.size < 2:
            raise LossMapError("loss map needs at least a 2x2 grid")
        if np.any(np.diff(self.v_grid) <= 0) or np.any(np.diff(self.i_grid) <= 0):
            raise LossMapError("grids must be strictly increasing")
        shape = (self.v_grid.size, self.i_grid.size)
        if self.e_soft.shape != shape or self.e_hard.shape != shape:
            raise LossMapError("energy tables must match the grid shape")
        if np.any(self.e_soft < 0) or np.any(self.e_hard < 0):
            raise LossMapError("energies must be >= 0")
        if np.any(self.e_soft > self.e_hard + 1e-18):
            raise LossMapError("e_soft must not exceed e_hard anywhere")

    def energy(self, v: float, i: float, kind: str) -> float:
        """Bilinear lookup; clamped extrapolation outside the grid."""
        if v < 0 or i < 0:
            raise LossMapError("v and i must be >= 0")
        table = self.e_soft if kind == "soft" else self.e_hard
        vq, iq = v, i
        if (v < self.v_grid[0] or v > self.v_grid[-1]
                or i < self.i_grid[0] or i > self.i_grid[-1]):
            self.clamped_queries += 1
            vq = min(max(v, self.v_grid[0]), self.v_grid[-1])
            iq = min(max(i, self.i_grid[0]), self.i_grid[-1])
        kv = min(np.searchsorted(self.v_grid, vq, side="right") - 1,
                 self.v_grid.size - 2)
        ki = min(np.searchsorted(self.i_grid, iq, side="right") - 1,
                 self.i_grid.size - 2)
        kv = max(kv, 0)
        ki = max(ki, 0)
        fv = (vq - self.v_grid[kv]) / (self.v_grid[kv + 1] - self.v_grid[kv])
        fi = (iq - self.i_grid[ki]) / (self.i_grid[ki + 1] - self.i_grid[ki])
        e00 = table[kv, ki]
        e01 = table[kv, ki + 1]
        e10 = table[kv + 1, ki]
        e11 = table[kv + 1, ki + 1]
        return float((1 - fv) * ((1 - fi) * e00 + fi * e01)
                     + fv * ((1 - fi) * e10 + fi * e11))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["v_V", "i_A", "e_soft_J", "e_hard_J"])
            for kv, v in enumerate(self.v_grid):
                for ki, i in enumerate(self.i_grid):
                    w.writerow([f"{v:.9g}", f"{i:.9g}",
                                f"{self.e_soft[kv, ki]:.9g}",
                                f"{self.e_hard[kv, ki]:.9g}"])


def load_csv(path_or_text) -> LossMap:
    """Load a loss map from CSV (path or already-read text)."""
    if isinstance(path_or_text, str) and "\n" in path_or_text:
        fh = io.StringIO(path_or_text)
        rows = list(csv.reader(fh))
    else:
        with open(path_or_text, newline="") as fh:
            rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["v_V", "i_A", "e_soft_J", "e_hard_J"]:
        raise LossMapError("expected header v_V, i_A, e_soft_J, e_hard_J")
    data = [(float(a), float(b), float(c), float(d)) for a, b, c, d in rows[1:] if a]
    if not data:
        raise LossMapError("empty loss map")
    v_vals = sorted({r[0] for r in data})
    i_vals = sorted({r[1] for r in data})
    if len(data) != len(v_vals) * len(i_vals):
        raise LossMapError("ragged grid: every (v, i) node must appear exactly once")
    e_s = np.full((len(v_vals), len(i_vals)), np.nan)
    e_h = np.full_like(e_s, np.nan)
    vi = {v: k for k, v in enumerate(v_vals)}
    ii = {i: k for k, i in enumerate(i_vals)}
    for v, i, es, eh in data:
        e_s[vi[v], ii[i]] = es
        e_h[vi[v], ii[i]] = eh
    if np.any(np.isnan(e_s)) or np.any(np.isnan(e_h)):
        raise LossMapError("ragged grid: missing nodes")
    return LossMap(np.array(v_vals), np.array(i_vals), e_s, e_h)


def _synthetic(v_max, i_max, e_oss_hb_vref, v_ref, s_hard, s_soft,
               n_v=13, n_i=17) -> LossMap:
    """Anchor-plus-ramp synthetic map.

    e_hard(v, i) = E_oss_hb(v_ref) (v/v_ref)^2 + s_hard v i
    e_soft(v, i) = s_soft v i
    evaluated on the grid nodes; staying bilinear between nodes keeps
    node queries exact.
    """
    v = np.linspace(0.0, v_max, n_v)
    i = np.linspace(0.0, i_max, n_i)
    vv, ii = np.meshgrid(v, i, indexing="ij")
    e_hard = e_oss_hb_vref * (vv / v_ref) ** 2 + s_hard * vv * ii
    e_soft = s_soft * vv * ii
    return LossMap(v, i, e_soft, e_hard)


def synthetic_gan_map() -> LossMap:
    """Shipped map for the 600 V GaN half-bridge (two devices).

    Anchors: soft 2 x 3.2 uJ at (400 V, 20 A/device); hard 2 x 40 uJ at
    (400 V, 5 A/device); zero-current hard energy = stored output
    capacitance energy of the pair.
    """
    e_oss_hb = 10.4e-6           # 2 * 0.5 * C_oss * 400^2 with C_oss = 65 pF
    s_soft = 6.4e-6 / (400.0 * 20.0)
    s_hard = (80.0e-6 - e_oss_hb) / (400.0 * 5.0)
    return _synthetic(640.0, 40.0, e_oss_hb, 400.0, s_hard, s_soft)


def synthetic_sic_map() -> LossMap:
    """Shipped map for the 900 V SiC half-bridge (single devices).

    Same anchor-plus-ramp construction with SiC-scale constants.
    """
    e_oss_hb = 2 * 0.5 * 220e-12 * 400.0 ** 2   # ~17.6 uJ at 400 V
    s_soft = 1.2e-9
    s_hard = 60e-9
    return _synthetic(900.0, 40.0, e_oss_hb, 400.0, s_hard, s_soft)
