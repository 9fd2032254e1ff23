"""Staggered lattice discretization of the one-dimensional Dirac operators.

Each node ``x_j`` carries two spinor components that live half a cell
apart: on the line the lower component sits at ``x_j - dx/4`` and the upper
at ``x_j + dx/4``; on the half-line the lower component sits at ``x_j`` and
the upper at ``x_j + dx/2``.  Read in position order the components form a
single chain with spacing ``dx/2`` on which ``sigma_1 (-i d/dx)`` is the
nearest-neighbour difference.  The resulting matrix is Hermitian and
tridiagonal in chain order, its free dispersion is ``(2/dx) sin(p dx/2)``
and it has no doubler branch.

Public matrices and wave packets use the interleaved layout
``(upper_0, lower_0, upper_1, lower_1, ...)``; chain order is that layout
with every pair swapped, so the permutation is ``index ^ 1``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

__all__ = [
    "Grid",
    "DiracMatrix",
    "EigenSystem",
    "assemble_line",
    "assemble_halfline",
    "assemble_chain",
    "eigensystem",
    "spectral_projector",
    "chain_permutation",
    "LinearAlgebraError",
]

Field = Union[None, float, np.ndarray, Callable]


class LinearAlgebraError(RuntimeError):
    """A decomposition or solve did not meet its accuracy contract."""


def chain_permutation(size: int, lower_first: bool = True) -> np.ndarray:
    """Index map between interleaved layout and chain order (an involution).

    With ``lower_first`` the chain starts with a lower component, so every
    pair is swapped; otherwise chain order and layout coincide.
    """
    idx = np.arange(size)
    return idx ^ 1 if lower_first else idx


# ---------------------------------------------------------------- grid


@dataclass(frozen=True)
class Grid:
    """Uniform node grid.

    Line nodes are ``x_j = (j - (n-1)/2) dx`` (symmetric about 0).
    Half-line nodes are ``x_j = (j + 1/2) dx`` for ``j = 0..n-1``, which is
    the offset grid ``(j - 1/2) dx`` counted from one.  ``periodic`` closes a
    line grid into a ring of length ``n dx``.
    """

    geometry: str
    n: int
    dx: float
    periodic: bool = False

    def __post_init__(self):
        if self.geometry not in ("line", "half-line"):
            raise ValueError("geometry must be 'line' or 'half-line'")
        if self.n < 1:
            raise ValueError("grid needs at least one node")
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if self.periodic and self.geometry != "line":
            raise ValueError("only line grids can be periodic")

    @classmethod
    def line(cls, n: int, dx: float, periodic: bool = False) -> "Grid":
        return cls("line", int(n), float(dx), periodic)

    @classmethod
    def halfline(cls, n: int, dx: float) -> "Grid":
        return cls("half-line", int(n), float(dx))

    @classmethod
    def covering(cls, geometry: str, extent: float, dx: float) -> "Grid":
        """Smallest grid whose nodes reach ``extent`` (``[-L, L]`` or ``(0, L]``)."""
        if geometry == "line":
            return cls.line(2 * int(math.ceil(extent / dx)), dx)
        return cls.halfline(int(math.ceil(extent / dx)), dx)

    @property
    def x(self) -> np.ndarray:
        j = np.arange(self.n, dtype=float)
        if self.geometry == "line":
            return (j - 0.5 * (self.n - 1)) * self.dx
        return (j + 0.5) * self.dx

    @property
    def size(self) -> int:
        """Dimension of the spinor space, ``2n``."""
        return 2 * self.n

    @property
    def extent(self) -> float:
        """Largest ``|x|`` reached by any spinor component."""
        return float(np.max(np.abs(self.chain_positions)))

    @property
    def chain_positions(self) -> np.ndarray:
        """Component positions in chain order (spacing ``dx/2``)."""
        start = self.x[0] - 0.25 * self.dx if self.geometry == "line" else self.x[0]
        return start + 0.5 * self.dx * np.arange(2 * self.n)

    @property
    def layout_nodes(self) -> np.ndarray:
        """Node position of every entry of an interleaved spinor array."""
        return np.repeat(self.x, 2)

    @property
    def walls(self) -> tuple:
        """Hard-wall locations (inner wall of a half-line grid is the origin)."""
        y = self.chain_positions
        h = 0.5 * self.dx
        if self.geometry == "half-line":
            return (0.0, float(y[-1] + h))
        return (float(y[0] - h), float(y[-1] + h))

    def node_mask(self, lo: float, hi: float) -> np.ndarray:
        """Nodes with ``lo <= x_j < hi``."""
        x = self.x
        return (x >= lo) & (x < hi)

    def describe(self) -> dict:
        return {"geometry": self.geometry, "n": self.n, "dx": self.dx, "periodic": self.periodic}


# ---------------------------------------------------------------- fields


def _evaluate(f: Field, grid: Grid, pts: np.ndarray, name: str) -> np.ndarray:
    """Evaluate a field at arbitrary positions.

    Callables are evaluated exactly; arrays must be node samples and are
    linearly interpolated (held constant past the outer nodes).
    """
    if f is None:
        return np.zeros_like(pts)
    if callable(f):
        return np.asarray(f(pts), dtype=float) * np.ones_like(pts)
    arr = np.asarray(f, dtype=float)
    if arr.ndim == 0:
        return np.full_like(pts, float(arr))
    if arr.shape != (grid.n,):
        raise ValueError(f"{name} has {arr.size} samples but the grid has {grid.n} nodes")
    if grid.n == 1:
        return np.full_like(pts, arr[0])
    return np.interp(pts, grid.x, arr)


# ---------------------------------------------------------------- matrix


@dataclass
class DiracMatrix:
    """Hermitian tridiagonal (in chain order) Dirac matrix plus metadata.

    ``diag`` and ``offdiag`` are the chain-order diagonal and superdiagonal;
    ``wrap`` is the coupling from the last to the first chain site on a
    periodic grid.
    """

    grid: Grid
    diag: np.ndarray
    offdiag: np.ndarray
    channel: Optional[float] = None
    momentum: Optional[float] = None
    mass: float = 0.0
    alpha: Optional[float] = None
    wrap: Optional[complex] = None
    label: str = ""
    lower_first: bool = True
    info: dict = field(default_factory=dict)

    @property
    def permutation(self) -> np.ndarray:
        return chain_permutation(self.size, self.lower_first)

    def component_positions(self) -> np.ndarray:
        """Position of every component in interleaved layout."""
        return self.grid.chain_positions[self.permutation]

    @property
    def size(self) -> int:
        return self.diag.size

    @property
    def is_tridiagonal(self) -> bool:
        return self.wrap is None

    def chain_matrix(self) -> sp.csr_matrix:
        m = sp.diags(
            [self.diag.astype(complex), self.offdiag, self.offdiag.conj()], [0, 1, -1], format="lil"
        )
        if self.wrap is not None:
            m[self.size - 1, 0] += self.wrap
            m[0, self.size - 1] += np.conj(self.wrap)
        return m.tocsr()

    @property
    def matrix(self) -> sp.csr_matrix:
        """Sparse matrix in interleaved layout."""
        p = self.permutation
        return self.chain_matrix()[p][:, p].tocsr()

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def hermiticity_defect(self) -> float:
        m = self.matrix
        d = m - m.conj().T
        return float(abs(d).max()) if d.nnz else 0.0

    def norm_bound(self) -> float:
        """Gershgorin bound on the spectral radius."""
        e = np.abs(self.offdiag)
        rows = np.abs(self.diag).copy()
        rows[:-1] += e
        rows[1:] += e
        if self.wrap is not None:
            rows[0] += abs(self.wrap)
            rows[-1] += abs(self.wrap)
        return float(rows.max())

    def export_triplets(self, path):
        from .io import write_triplets

        meta = dict(self.grid.describe())
        meta.update(channel=self.channel, momentum=self.momentum, mass=self.mass, alpha=self.alpha)
        return write_triplets(path, self.matrix, meta=meta)


def assemble_chain(
    grid: Grid,
    onsite: np.ndarray,
    sigma2: np.ndarray,
    *,
    boundary_ghost: Optional[complex] = None,
    sigma2_ghost: float = 0.0,
    lower_first: bool = True,
) -> tuple:
    """Chain diagonal and superdiagonal for ``sigma_1 p + sigma_2 W + diag``.

    ``onsite`` is the diagonal at the chain sites, ``sigma2`` the coefficient
    ``W`` at the bond midpoints.  The ``sigma_2 W`` term couples each
    component to the average of its two neighbours, which keeps it Hermitian
    and second-order accurate.  With ``lower_first=False`` the chain starts
    with an upper component, which flips the sign of the ``sigma_2`` coupling
    (the chain is then the ``sigma_1`` conjugate).  ``boundary_ghost`` is the ratio
    ``psi_1(0)/psi_2(0)`` eliminated at the inner end of a half-line chain.
    """
    dx = grid.dx
    s = np.arange(grid.size - 1)
    sign = np.where(s % 2 == 0, 1.0, -1.0)
    if not lower_first:
        sign = -sign
    off = np.full(grid.size - 1, -1j / dx) + sign * 0.5j * sigma2
    diag = np.asarray(onsite, dtype=float).copy()
    if boundary_ghost is not None:
        # lower row 0 sees  (i/dx) psi_1(0) + (i W/2) psi_1(0)  with psi_1(0) = g psi_2(0)
        extra = (1j / dx + 0.5j * sigma2_ghost) * boundary_ghost
        if abs(extra.imag) > 1e-12 * (1 + abs(extra)):
            raise ValueError("boundary condition does not give a Hermitian boundary row")
        diag[0] += extra.real
    return diag, off


def _mass_diag(grid: Grid, m: float, lower_first: bool = True) -> np.ndarray:
    # upper components carry +m, lower ones -m
    odd_upper = np.where(np.arange(grid.size) % 2 == 1, 1.0, -1.0)
    return m * (odd_upper if lower_first else -odd_upper)


def assemble_line(
    grid: Grid,
    V: Field = None,
    A: Field = None,
    xi: float = 0.0,
    m: float = 0.0,
    *,
    label: str = "",
) -> DiracMatrix:
    """Discretize ``h(xi) = sigma_1 (-i d/dx) + sigma_2 (xi - A) + V + m sigma_3``.

    ``V`` and ``A`` are callables (evaluated exactly at the staggered
    positions), constants, or node samples (linearly interpolated).
    """
    if grid.geometry != "line":
        raise ValueError("assemble_line needs a line grid")
    if m < 0:
        raise ValueError("mass must be nonnegative")
    y = grid.chain_positions
    mid = y[:-1] + 0.25 * grid.dx
    onsite = _evaluate(V, grid, y, "V") + _mass_diag(grid, m)
    w = xi - _evaluate(A, grid, mid, "A")
    diag, off = assemble_chain(grid, onsite, w)
    wrap = None
    if grid.periodic:
        # bond from the last upper component back to the first lower one
        ymid = y[-1] + 0.25 * grid.dx
        ww = xi - _evaluate(A, grid, np.array([ymid]), "A")[0]
        wrap = -1j / grid.dx - 0.5j * ww
    return DiracMatrix(grid, diag, off, momentum=float(xi), mass=float(m), wrap=wrap, label=label)


def _check_channel(k: float) -> float:
    k = float(k)
    if k != 0.0 and abs(k - math.floor(k) - 0.5) > 1e-12:
        raise ValueError(f"channel k={k} is not in Z + 1/2 or 0")
    return k


def assemble_halfline(
    grid: Grid,
    V: Field = None,
    A: Field = None,
    k: float = 0.5,
    m: float = 0.0,
    alpha: Optional[float] = None,
    *,
    label: str = "",
) -> DiracMatrix:
    """Discretize ``h_k = sigma_1 (-i d/dx) + sigma_2 (k/x - A) + V + m sigma_3`` on ``(0, inf)``.

    For ``k > 0`` the chain starts with the upper component so that the
    eliminated ghost at ``x = 0`` is ``psi_2``, which suppresses the
    non-square-integrable branch ``psi_2 ~ x^-k``; for ``k < 0`` the ghost is
    ``psi_1``.  With this choice ``sigma_1 h_k sigma_1 = h_-k`` holds exactly
    on the lattice when ``V = A = m = 0``.

    For ``k = 0`` the boundary condition ``psi_1(0) = i tan(alpha) psi_2(0)``
    is eliminated through a ghost component at ``x = 0``; ``alpha = 0`` is
    ``psi_1(0) = 0`` and is the default.  Channels with ``|k| >= 1/2`` are
    limit point at 0 and take no boundary parameter.
    """
    if grid.geometry != "half-line":
        raise ValueError("assemble_halfline needs a half-line grid")
    if m < 0:
        raise ValueError("mass must be nonnegative")
    k = _check_channel(k)
    if k != 0.0 and alpha is not None:
        raise ValueError("a boundary parameter is only admissible for k = 0 (|k| >= 1/2 is limit point)")
    if k == 0.0 and alpha is None:
        alpha = 0.0
    lower_first = k <= 0.0
    y = grid.chain_positions
    mid = y[:-1] + 0.25 * grid.dx
    onsite = _evaluate(V, grid, y, "V") + _mass_diag(grid, m, lower_first)
    w = k / mid - _evaluate(A, grid, mid, "A")
    ghost = None
    ghost_w = 0.0
    if k == 0.0:
        if abs(math.cos(alpha)) < 1e-12:
            raise ValueError("alpha = pi/2 (mod pi) leaves psi_1(0) unconstrained; not supported")
        ghost = 1j * math.tan(alpha)
        ghost_w = -float(_evaluate(A, grid, np.array([0.25 * grid.dx]), "A")[0])
    diag, off = assemble_chain(
        grid, onsite, w, boundary_ghost=ghost, sigma2_ghost=ghost_w, lower_first=lower_first
    )
    return DiracMatrix(
        grid,
        diag,
        off,
        channel=k,
        mass=float(m),
        alpha=alpha if k == 0.0 else None,
        label=label,
        lower_first=lower_first,
    )


# ---------------------------------------------------------------- eigen


class EigenSystem:
    """Eigenpairs of a :class:`DiracMatrix`, possibly restricted to an energy window.

    Eigenvectors are unit vectors in the Euclidean inner product.  For
    tridiagonal matrices they are stored as real vectors of the gauged chain
    matrix plus a phase per site, so transforms cost two real products.
    """

    def __init__(
        self, grid, eigenvalues, chain_vectors, phases=None, window=None, complete=True, permutation=None
    ):
        self.grid = grid
        self.eigenvalues = np.asarray(eigenvalues, dtype=float)
        self._q = chain_vectors
        self._phase = phases
        self.window = window
        self.complete = complete
        self._perm = chain_permutation(grid.size) if permutation is None else permutation

    def __len__(self):
        return self.eigenvalues.size

    @property
    def vectors(self) -> np.ndarray:
        """Complex eigenvectors as columns, interleaved layout."""
        v = self._q.astype(complex)
        if self._phase is not None:
            v = self._phase[:, None] * v
        return v[self._perm]

    @property
    def eigenvectors(self) -> np.ndarray:
        return self.vectors

    def coefficients(self, amplitudes: np.ndarray) -> np.ndarray:
        """``V^dagger a`` for interleaved amplitudes (vector or columns)."""
        b = np.asarray(amplitudes)[self._perm]
        if self._phase is None:
            return self._q.conj().T @ b
        b = (self._phase.conj() * b.T).T if b.ndim > 1 else self._phase.conj() * b
        qt = self._q.T
        return qt @ b.real + 1j * (qt @ b.imag)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """``V c`` in interleaved layout (vector or columns)."""
        c = np.asarray(coeffs)
        if self._phase is None:
            b = self._q @ c
        else:
            b = self._q @ c.real + 1j * (self._q @ c.imag)
            b = (self._phase * b.T).T if b.ndim > 1 else self._phase * b
        out = np.empty_like(b)
        out[self._perm] = b
        return out

    def quadratic_form(self, weights: np.ndarray, idx=None) -> np.ndarray:
        """``V^dagger diag(weights) V`` over the columns ``idx`` (all if None).

        The site phases cancel against a diagonal weight, so with stored
        phases the result is real.
        """
        q = self._q if idx is None else self._q[:, idx]
        w = np.asarray(weights)[self._perm]
        if self._phase is None:
            return q.conj().T @ (w[:, None] * q)
        return q.T @ (w[:, None] * q)

    def select(self, lo: float, hi: float) -> np.ndarray:
        """Indices of eigenvalues in the closed interval ``[lo, hi]``."""
        return np.nonzero((self.eigenvalues >= lo) & (self.eigenvalues <= hi))[0]

    def subset(self, idx) -> "EigenSystem":
        return EigenSystem(
            self.grid,
            self.eigenvalues[idx],
            self._q[:, idx],
            self._phase,
            self.window,
            complete=False,
            permutation=self._perm,
        )

    def residuals(self, H: DiracMatrix) -> np.ndarray:
        """``||H v - lambda v||`` for every stored pair."""
        v = self.vectors
        r = H.matrix @ v - v * self.eigenvalues[None, :]
        return np.linalg.norm(r, axis=0)

    def orthonormality_defect(self) -> float:
        v = self.vectors
        g = v.conj().T @ v
        return float(np.max(np.abs(g - np.eye(g.shape[0])))) if g.size else 0.0

    def mean_gap(self, lo: float | None = None, hi: float | None = None) -> float:
        ev = self.eigenvalues
        if lo is not None:
            ev = ev[(ev >= lo) & (ev <= hi)]
        if ev.size < 2:
            return math.inf
        return float((ev[-1] - ev[0]) / (ev.size - 1))

    def min_gap(self, lo: float | None = None, hi: float | None = None) -> float:
        ev = self.eigenvalues
        if lo is not None:
            ev = ev[(ev >= lo) & (ev <= hi)]
        return float(np.min(np.diff(ev))) if ev.size > 1 else math.inf

    def to_csv(self, path, meta=None):
        from .io import write_csv

        m = dict(self.grid.describe())
        m.update(meta or {})
        return write_csv(path, ["index", "eigenvalue"], enumerate(self.eigenvalues), meta=m)


def _gauge_phases(off: np.ndarray) -> tuple:
    mag = np.abs(off)
    unit = np.where(mag > 0, off.conj() / np.where(mag > 0, mag, 1.0), 1.0)
    phases = np.concatenate([[1.0 + 0j], np.cumprod(unit)])
    return mag, phases


def _tridiagonal_eigh(d, e, window):
    kwargs = {}
    if window is not None:
        kwargs = dict(select="v", select_range=(float(window[0]), float(window[1])))
    errors = []
    for driver in ("stemr", "banded", "stebz"):
        try:
            if driver == "banded":
                band = np.vstack([np.concatenate([[0.0], e]), d])
                if window is not None:
                    w, q = sla.eig_banded(band, select="v", select_range=kwargs["select_range"])
                else:
                    w, q = sla.eig_banded(band)
            else:
                w, q = sla.eigh_tridiagonal(d, e, lapack_driver=driver, **kwargs)
            # windowed drivers can return a view of a full-size workspace
            return np.array(w), np.array(q, order="F")
        except (np.linalg.LinAlgError, ValueError) as exc:
            errors.append(f"{driver}: {exc}")
    raise LinearAlgebraError("tridiagonal eigensolver failed: " + "; ".join(errors))


def eigensystem(
    H: DiracMatrix, window: tuple | None = None, *, check: bool = True, tol: float = 1e-10
) -> EigenSystem:
    """Eigen-decomposition of ``H``, optionally only for eigenvalues in ``window``.

    Tridiagonal matrices go through a phase gauge to a real symmetric
    tridiagonal problem (MRRR with banded and bisection fallbacks); periodic
    matrices use dense ``eigh``.  With ``check`` the residual and
    orthonormality contracts are verified on a sample of pairs.
    """
    if H.is_tridiagonal:
        mag, phases = _gauge_phases(H.offdiag)
        w, q = _tridiagonal_eigh(H.diag, mag, window)
        es = EigenSystem(
            H.grid, w, q, phases, window=window, complete=window is None, permutation=H.permutation
        )
    else:
        w, v = np.linalg.eigh(H.chain_matrix().toarray())
        if window is not None:
            keep = (w >= window[0]) & (w <= window[1])
            w, v = w[keep], np.array(v[:, keep])
        es = EigenSystem(
            H.grid, w, v, None, window=window, complete=window is None, permutation=H.permutation
        )
    if check and len(es):
        idx = np.unique(np.linspace(0, len(es) - 1, min(len(es), 64)).astype(int))
        sub = es.subset(idx)
        scale = max(H.norm_bound(), 1.0)
        res = sub.residuals(H)
        if np.max(res) > tol * scale:
            raise LinearAlgebraError(f"eigen residual {np.max(res):.3g} exceeds {tol:g}*||H||")
        if sub.orthonormality_defect() > 1e3 * tol:
            warnings.warn("eigenvectors lose orthonormality beyond tolerance", RuntimeWarning)
    return es


def spectral_projector(es: EigenSystem, interval: tuple) -> np.ndarray:
    """Dense orthogonal projector onto eigenvectors with eigenvalue in ``interval``."""
    lo, hi = interval
    if not hi >= lo:
        raise ValueError("interval must satisfy lo <= hi")
    idx = es.select(lo, hi)
    if es.window is not None and (lo < es.window[0] or hi > es.window[1]) and not es.complete:
        warnings.warn("projector interval exceeds the computed eigen window", RuntimeWarning)
    v = es.subset(idx).vectors
    return v @ v.conj().T
