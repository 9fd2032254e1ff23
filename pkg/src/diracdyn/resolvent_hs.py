"""Resolvents, windowed Hilbert-Schmidt norms and free-kernel oracles.

A lattice resolvent entry ``R_ij`` approximates ``K(y_i, y_j) dx`` where
``K`` is the continuum integral kernel, because each spinor component is
sampled with spacing ``dx``.  The continuum Hilbert-Schmidt norm of
``1_I (h - z)^-1`` is therefore the Frobenius norm of the rows of ``R``
belonging to nodes in ``I``; equivalently ``dx`` times the Frobenius norm of
the sampled kernel ``R/dx``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import DiracMatrix, Grid, assemble_halfline, assemble_line

__all__ = [
    "resolvent",
    "resolvent_columns",
    "free_halfline_kernel",
    "free_line_kernel",
    "hs_window",
    "hs_scan",
    "HSScan",
    "centered_windows",
    "anchored_windows",
    "halfline_hs_closed_form",
    "kernel_check",
    "KernelCheck",
    "WindowError",
    "power_law_fit",
]

DELTA_MIN = 1.0


class WindowError(ValueError):
    """A window lies outside the grid or too close to the origin."""


def _shifted(H, z):
    m = H.matrix if isinstance(H, DiracMatrix) else sp.csr_matrix(H)
    return (m - z * sp.identity(m.shape[0], format="csr")).tocsc()


def resolvent(H, z: complex = 1j, *, tol: float = 1e-10) -> np.ndarray:
    """Dense ``(H - z)^-1`` with a residual check ``||(H - z) X - I|| <= tol``."""
    if complex(z).imag == 0:
        raise ValueError("z must be off the real axis")
    A = _shifted(H, z)
    n = A.shape[0]
    X = spla.splu(A).solve(np.eye(n, dtype=complex))
    res = np.abs(A @ X - np.eye(n)).max() if n else 0.0
    if not np.isfinite(res) or res > tol * max(1.0, abs(A).max()):
        raise np.linalg.LinAlgError(f"resolvent residual {res:.3g} exceeds tolerance")
    return X


def resolvent_columns(H, cols: np.ndarray, z: complex = 1j) -> np.ndarray:
    """Selected columns of ``(H - z)^-1`` by sparse LU."""
    A = _shifted(H, z)
    n = A.shape[0]
    cols = np.asarray(cols)
    rhs = np.zeros((n, cols.size), dtype=complex)
    rhs[cols, np.arange(cols.size)] = 1.0
    return spla.splu(A).solve(rhs)


# ---------------------------------------------------------------- closed forms


def free_halfline_kernel(x1: float, x2: float) -> np.ndarray:
    """Kernel of ``(sigma_1 (-i d/dx) - i)^-1`` on ``(0, inf)`` with ``psi_1(0) = 0``.

    For ``x1 > x2``: ``i e^-x1 [[sinh x2, cosh x2], [sinh x2, cosh x2]]``;
    for ``x1 < x2``: ``i e^-x2 [[sinh x1, -sinh x1], [-cosh x1, cosh x1]]``.
    """
    if x1 < 0 or x2 < 0:
        raise ValueError("half-line kernel needs x1, x2 >= 0")
    if x1 == x2:
        raise ValueError("the kernel jumps across x1 = x2 and has no value on the diagonal")
    if x1 > x2:
        s, c = math.sinh(x2), math.cosh(x2)
        return 1j * math.exp(-x1) * np.array([[s, c], [s, c]], dtype=complex)
    s, c = math.sinh(x1), math.cosh(x1)
    return 1j * math.exp(-x2) * np.array([[s, -s], [-c, c]], dtype=complex)


def free_line_kernel(x: float, y: float) -> np.ndarray:
    """Kernel of ``(sigma_1 (-i d/dx) - i)^-1`` on the line: ``(i/2) e^-|x-y| (1 + sgn(x-y) sigma_1)``."""
    if x == y:
        raise ValueError("the kernel jumps across x = y")
    sgn = 1.0 if x > y else -1.0
    return 0.5j * math.exp(-abs(x - y)) * np.array([[1, sgn], [sgn, 1]], dtype=complex)


def halfline_hs_closed_form(lo: float, hi: float) -> float:
    """``int_lo^hi int_0^inf |K(x1, x2)|_F^2 dx2 dx1`` for the free half-line kernel.

    The squared Frobenius norm is ``e^{-2|x1-x2|} + e^{-2(x1+x2)}`` and the
    inner integral equals 1 for every ``x1 > 0``, so the value is ``hi - lo``.
    """
    return float(hi - lo)


# ---------------------------------------------------------------- kernel check


@dataclass
class KernelCheck:
    dx: float
    max_abs_error: float
    columns: list
    n_rows: int


def kernel_check(
    dx: float,
    *,
    extent: float = 30.0,
    column_points: Sequence[float] = (0.5, 1.0, 2.0, 3.0),
    row_extent: float = 8.0,
) -> KernelCheck:
    """Compare columns of the lattice ``(h_0 - i)^-1`` with :func:`free_halfline_kernel`.

    ``h_0`` is the free ``k = 0`` half-line operator with ``psi_1(0) = 0``.
    For each component sitting next to a requested point the whole column
    of ``R/dx`` is compared at rows with position below ``row_extent``; rows
    within ``dx`` of the column position are skipped because the kernel
    jumps there.
    """
    grid = Grid.covering("half-line", extent, dx)
    H = assemble_halfline(grid, k=0.0, alpha=0.0)
    pos = H.component_positions()
    comp = np.tile([0, 1], grid.n)  # 0 upper, 1 lower
    cols = []
    for p in column_points:
        for c in (0, 1):
            cand = np.nonzero(comp == c)[0]
            cols.append(int(cand[np.argmin(np.abs(pos[cand] - p))]))
    R = resolvent_columns(H, np.array(cols), 1j) / dx
    rows = np.nonzero(pos < row_extent)[0]
    err = 0.0
    for jc, col in enumerate(cols):
        for r in rows:
            if abs(pos[r] - pos[col]) < dx:
                continue
            ref = free_halfline_kernel(pos[r], pos[col])[comp[r], comp[col]]
            err = max(err, abs(R[r, jc] - ref))
    return KernelCheck(dx=dx, max_abs_error=err, columns=[float(pos[c]) for c in cols], n_rows=rows.size)


# ---------------------------------------------------------------- HS windows


def _window_rows(grid: Grid, lo: float, hi: float) -> np.ndarray:
    nodes = np.nonzero(grid.node_mask(lo, hi))[0]
    return np.sort(np.concatenate([2 * nodes, 2 * nodes + 1]))


def _check_window(H: DiracMatrix, lo: float, hi: float, delta_min: float):
    grid = H.grid
    if not hi > lo:
        raise WindowError("window must have positive length")
    wl, wr = grid.walls
    if lo < wl or hi > wr:
        raise WindowError(f"window ({lo}, {hi}) leaves the grid span ({wl}, {wr})")
    if grid.geometry == "half-line" and lo < delta_min:
        raise WindowError(
            f"half-line windows must stay in [{delta_min}, inf): the square-root bound is only "
            "claimed for windows supported away from the origin"
        )


def hs_window(
    H: DiracMatrix, interval: tuple, z: complex = 1j, *, delta_min: float = DELTA_MIN
) -> float:
    """Continuum-normalized ``||1_I (h - z)^-1||_HS``.

    The value is the Frobenius norm of the rows of ``(H - z)^-1`` that belong
    to nodes ``x_j`` in ``[lo, hi)`` (both spinor components), which is
    ``dx`` times the Frobenius norm of the sampled kernel.  Rows of
    ``(H - z)^-1`` are conjugated columns of ``(H - conj z)^-1``.
    With window edges on cell boundaries this is a midpoint rule in
    ``x``; off-boundary edges add an ``O(dx)`` node-count error.
    """
    lo, hi = interval
    _check_window(H, lo, hi, delta_min)
    rows = _window_rows(H.grid, lo, hi)
    if rows.size == 0:
        return 0.0
    cols = resolvent_columns(H, rows, np.conj(z))
    return float(np.linalg.norm(cols))


def power_law_fit(sizes, values):
    """Least-squares fit ``log v = exponent log s + log c``; returns ``(exponent, c, residual)``."""
    s = np.asarray(sizes, dtype=float)
    v = np.asarray(values, dtype=float)
    if np.unique(s).size < 2:
        raise ValueError("a power-law fit needs at least two distinct sizes")
    if np.any(v <= 0) or np.any(s <= 0):
        raise ValueError("power-law fit needs positive data")
    A = np.column_stack([np.log(s), np.ones_like(s)])
    coef, *_ = np.linalg.lstsq(A, np.log(v), rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - np.log(v)) ** 2)))
    return float(coef[0]), float(math.exp(coef[1])), resid


@dataclass
class HSScan:
    windows: list
    hs_values: np.ndarray
    fit_exponent: float
    fit_constant: float
    fit_residual: float
    z: complex = 1j
    meta: dict = field(default_factory=dict)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([hi - lo for lo, hi in self.windows])

    @property
    def constants(self) -> np.ndarray:
        """Per-window ratio ``hs/sqrt(|I|)``."""
        return self.hs_values / np.sqrt(self.lengths)

    @property
    def constant_spread(self) -> float:
        c = self.constants
        return float(c.max() / c.min())

    def fitted(self) -> np.ndarray:
        return self.fit_constant * self.lengths**self.fit_exponent

    def to_csv(self, path, meta=None, scenario=None):
        from .io import write_csv

        m = dict(self.meta)
        m.update(meta or {})
        m.update(
            fit_exponent=self.fit_exponent, fit_constant=self.fit_constant, fit_residual=self.fit_residual
        )
        rows = [
            (lo, hi, hi - lo, v, f)
            for (lo, hi), v, f in zip(self.windows, self.hs_values, self.fitted())
        ]
        return write_csv(path, ["lo", "hi", "length", "hs", "fitted_hs"], rows, meta=m, scenario=scenario)


def centered_windows(lengths: Iterable[float], center: float = 0.0) -> list:
    return [(center - 0.5 * L, center + 0.5 * L) for L in lengths]


def anchored_windows(lengths: Iterable[float], start: float = DELTA_MIN) -> list:
    return [(start, start + L) for L in lengths]


def hs_scan(
    H: DiracMatrix, windows: Sequence[tuple], z: complex = 1j, *, delta_min: float = DELTA_MIN
) -> HSScan:
    """HS values over a window family and the log-log fit against ``|I|``."""
    windows = [tuple(map(float, w)) for w in windows]
    lengths = [hi - lo for lo, hi in windows]
    if np.unique(lengths).size < 2:
        raise ValueError("hs_scan needs at least two distinct window lengths")
    if len(windows) < 4 or max(lengths) / min(lengths) < 10.0:
        warnings.warn("scan spans fewer than 4 windows or less than a decade of |I|", RuntimeWarning)
    values = np.array([hs_window(H, w, z, delta_min=delta_min) for w in windows])
    exponent, const, resid = power_law_fit(lengths, values)
    meta = dict(H.grid.describe())
    meta.update(channel=H.channel, momentum=H.momentum, mass=H.mass, z=str(z))
    return HSScan(windows, values, exponent, const, resid, z=z, meta=meta)
