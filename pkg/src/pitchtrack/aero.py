"""Aerodynamic coefficient tables indexed by angle of attack and Mach number."""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CSV_HEADER = ["alpha_deg", "mach", "cl", "cd", "xcp_m"]


@dataclass(frozen=True)
class AeroTables:
    """Dense ``C_L``, ``C_D`` and ``x_cp`` grids, shape ``(n_alpha, n_mach)``.

    ``x_cp`` is measured from the nose tip in metres. Breakpoints must be
    strictly increasing; coefficient lookups outside the grid clamp to the
    nearest breakpoint.
    """

    alpha_rad: tuple[float, ...]
    mach: tuple[float, ...]
    cl: tuple[tuple[float, ...], ...]
    cd: tuple[tuple[float, ...], ...]
    xcp_m: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        na, nm = len(self.alpha_rad), len(self.mach)
        if na < 1 or nm < 1:
            raise ValueError("aero tables need at least one breakpoint per axis")
        for name, bp in (("alpha", self.alpha_rad), ("mach", self.mach)):
            if any(b <= a for a, b in zip(bp, bp[1:])):
                raise ValueError(f"{name} breakpoints must be strictly increasing")
        for name in ("cl", "cd", "xcp_m"):
            grid = getattr(self, name)
            if len(grid) != na or any(len(row) != nm for row in grid):
                raise ValueError(f"{name} table must have shape ({na}, {nm})")
            if not all(math.isfinite(v) for row in grid for v in row):
                raise ValueError(f"{name} table contains non-finite values")
        if any(v < 0 for row in self.cd for v in row):
            raise ValueError("drag coefficient must be non-negative")

    @classmethod
    def from_arrays(cls, alpha_rad, mach, cl, cd, xcp_m) -> "AeroTables":
        def grid(a):
            return tuple(tuple(float(v) for v in row) for row in np.asarray(a, dtype=float))

        return cls(tuple(float(a) for a in alpha_rad), tuple(float(m) for m in mach),
                   grid(cl), grid(cd), grid(xcp_m))

    def scaled(self, cl: float = 1.0, cd: float = 1.0, xcp: float = 1.0) -> "AeroTables":
        if cl == 1.0 and cd == 1.0 and xcp == 1.0:
            return self
        return AeroTables.from_arrays(
            self.alpha_rad, self.mach,
            np.asarray(self.cl) * cl, np.asarray(self.cd) * cd, np.asarray(self.xcp_m) * xcp,
        )


def _bracket(bp, v):
    n = len(bp)
    if n == 1 or v <= bp[0]:
        return 0, 0, 0.0
    if v >= bp[-1]:
        return n - 1, n - 1, 0.0
    i = bisect.bisect_right(bp, v) - 1
    return i, i + 1, (v - bp[i]) / (bp[i + 1] - bp[i])


def _interp(grid, i0, i1, fa, j0, j1, fm):
    r0, r1 = grid[i0], grid[i1]
    lo = r0[j0] + fm * (r0[j1] - r0[j0])
    hi = r1[j0] + fm * (r1[j1] - r1[j0])
    return lo + fa * (hi - lo)


def aero_coefficients(alpha: float, mach: float, at: AeroTables) -> tuple[float, float, float]:
    """Bilinear lookup of ``(C_L, C_D, x_cp)``."""
    i0, i1, fa = _bracket(at.alpha_rad, alpha)
    j0, j1, fm = _bracket(at.mach, mach)
    return (
        _interp(at.cl, i0, i1, fa, j0, j1, fm),
        _interp(at.cd, i0, i1, fa, j0, j1, fm),
        _interp(at.xcp_m, i0, i1, fa, j0, j1, fm),
    )


def xcp_lookup(alpha: float, mach: float, at: AeroTables) -> float:
    i0, i1, fa = _bracket(at.alpha_rad, alpha)
    j0, j1, fm = _bracket(at.mach, mach)
    return _interp(at.xcp_m, i0, i1, fa, j0, j1, fm)


# ---------------------------------------------------------------------------
# Default synthetic tables
# ---------------------------------------------------------------------------

_DEFAULT_ALPHA_DEG = (-90, -60, -45, -30, -20, -15, -10, -6, -4, -2, 0,
                      2, 4, 6, 10, 15, 20, 30, 45, 60, 90)
_DEFAULT_MACH = (0.0, 0.5, 0.8, 0.9, 0.95, 1.05, 1.1, 1.2, 1.5, 2.0, 3.0, 5.0, 8.0)


def _cd0(mach: float) -> float:
    # subsonic plateau, transonic drag rise, supersonic decay
    bump = 0.25 * math.exp(-(((mach - 1.05) / 0.18) ** 2))
    tail = -0.08 * (1.0 - math.exp(-max(mach - 1.2, 0.0) / 1.5))
    return 0.3 + bump + tail


def _xcp_base(mach: float) -> float:
    # centre of pressure drifts aft through the transonic region but stays well
    # ahead of the centre of mass (statically unstable airframe)
    return 2.4 + 0.35 * (1.0 - math.exp(-max(mach - 0.8, 0.0) / 0.6))


def default_aero_tables() -> AeroTables:
    """Slender-body-like tables: ``C_L ~ 2 alpha``, ``C_D ~ C_D0(M) + 1.5 alpha^2``."""
    alpha = np.radians(_DEFAULT_ALPHA_DEG)
    mach = np.asarray(_DEFAULT_MACH, dtype=float)
    a, m = np.meshgrid(alpha, mach, indexing="ij")
    cl = np.sin(2.0 * a)
    cd = np.vectorize(_cd0)(m) + 1.5 * np.sin(a) ** 2
    xcp = np.vectorize(_xcp_base)(m) + 0.4 * np.sin(a) ** 2
    return AeroTables.from_arrays(alpha, mach, cl, cd, xcp)


def load_aero_csv(path) -> AeroTables:
    """Load a dense ``alpha_deg, mach, cl, cd, xcp_m`` grid (alpha outer, Mach inner)."""
    rows = []
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != CSV_HEADER:
            raise ValueError(f"{path}: expected header {', '.join(CSV_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                rows.append([float(v) for v in row[:5]])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric aero row {row!r}") from exc
            if len(row) < 5:
                raise ValueError(f"{path}:{lineno}: expected 5 columns")
    data = np.asarray(rows, dtype=float)
    alpha_deg = list(dict.fromkeys(data[:, 0]))
    mach = list(dict.fromkeys(data[:, 1]))
    na, nm = len(alpha_deg), len(mach)
    if data.shape[0] != na * nm:
        raise ValueError(f"{path}: grid is not dense ({data.shape[0]} rows for {na}x{nm})")
    expect_a = np.repeat(alpha_deg, nm)
    expect_m = np.tile(mach, na)
    if not (np.array_equal(data[:, 0], expect_a) and np.array_equal(data[:, 1], expect_m)):
        raise ValueError(f"{path}: rows must be ordered alpha-major, Mach-minor")
    shape = (na, nm)
    return AeroTables.from_arrays(
        np.radians(alpha_deg), mach,
        data[:, 2].reshape(shape), data[:, 3].reshape(shape), data[:, 4].reshape(shape),
    )


def save_aero_csv(at: AeroTables, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for i, a in enumerate(at.alpha_rad):
            for j, m in enumerate(at.mach):
                w.writerow([repr(math.degrees(a)), repr(m), repr(at.cl[i][j]),
                            repr(at.cd[i][j]), repr(at.xcp_m[i][j])])
