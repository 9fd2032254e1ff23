"""Gauge unitary for electric potentials and the position-dependent Lorentz boost.

The boost is the similarity ``h -> e^F h e^F`` with ``F = sigma_2 theta/2``
and rapidity ``theta = atanh(beta)``.  It trades the magnetic tail ``A2``
for a reduced electric potential ``V2/gamma`` (or, in the reverse direction,
the electric tail for a reduced magnetic one).  It is not unitary, so the
boosted operator is only ever used through linear solves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import (
    DiracMatrix,
    Grid,
    _check_channel,
    _mass_diag,
    assemble_chain,
    assemble_halfline,
    assemble_line,
)
from .potentials import PotentialSpec, _running_integral, boost_ratio, check_hypothesis

__all__ = [
    "gauge_phase",
    "gauge_unitary",
    "BoostData",
    "boost_fields",
    "assemble_boosted",
    "assemble_original",
    "ResolventIdentityReport",
    "verify_resolvent_identity",
    "boost_blocks",
    "lorentz_free_defect",
    "gauge_covariance_residual",
    "resolvent_norm",
    "BoostRefusal",
]

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
EYE2 = np.eye(2, dtype=complex)


class BoostRefusal(ValueError):
    """The velocity field violates ``|beta| < 1`` or the hypothesis audit."""


def _block_diag(blocks: np.ndarray) -> sp.csr_matrix:
    """Sparse block diagonal from an ``(n, 2, 2)`` stack (interleaved layout)."""
    return sp.block_diag(list(blocks), format="csr")


# ---------------------------------------------------------------- gauge


def gauge_phase(V, grid: Grid, points: Optional[np.ndarray] = None) -> np.ndarray:
    """Phase ``Phi(x) = int_0^x V`` at ``points`` (default: the nodes).

    Callables are integrated with Gauss-Legendre panels; node samples use
    the cumulative midpoint (trapezoid) rule anchored at 0.
    """
    pts = grid.x if points is None else np.asarray(points, dtype=float)
    if V is None:
        return np.zeros_like(pts)
    if callable(V):
        return _running_integral(V, pts)
    v = np.asarray(V, dtype=float)
    if v.ndim == 0:
        return float(v) * pts
    if v.shape != (grid.n,):
        raise ValueError("V samples must match the grid nodes")
    x = grid.x
    # cumulative trapezoid from the first node, then shift so that Phi(0) = 0
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(x))])
    if grid.geometry == "half-line":
        cum = cum + v[0] * x[0]
    else:
        cum = cum - np.interp(0.0, x, cum)
    return np.interp(pts, x, cum)


def gauge_unitary(V, grid: Grid, method: str = "blocks", lower_first: bool = True):
    """Unitary ``U`` with ``U (h_V - z)^-1 U^dagger ~ (h_0 - z)^-1``.

    ``method="blocks"`` returns the node-wise 2x2 blocks ``exp(i sigma_1
    Phi(x_j))`` (sparse, exact for constant ``V`` at the nodes).  Because the
    two components of a node sit half a cell apart this intertwines the
    lattice operators only to first order in ``dx``.

    ``method="symmetric"`` returns ``exp(i G)`` where ``G`` is the real
    symmetric tridiagonal chain matrix with ``Phi(bond midpoint)/2`` on every
    bond, i.e. ``Phi sigma_1`` with ``sigma_1`` averaged over both ways of
    pairing neighbouring components.  This is second order (dense output).
    """
    if method == "blocks":
        phi = gauge_phase(V, grid)
        c, s = np.cos(phi), np.sin(phi)
        blocks = c[:, None, None] * EYE2 + 1j * s[:, None, None] * SIGMA1
        return _block_diag(blocks)
    if method == "symmetric":
        y = grid.chain_positions
        mid = y[:-1] + 0.25 * grid.dx
        g = 0.5 * gauge_phase(V, grid, mid)
        G = np.diag(g, 1) + np.diag(g, -1)
        w, q = np.linalg.eigh(G)
        U = (q * np.exp(1j * w)[None, :]) @ q.T
        p = np.arange(grid.size) ^ 1 if lower_first else np.arange(grid.size)
        return U[p][:, p]
    raise ValueError("method must be 'blocks' or 'symmetric'")


# ---------------------------------------------------------------- boost data


@dataclass(frozen=True)
class BoostData:
    """Velocity field of the boost sampled at the nodes, plus exact evaluators."""

    grid: Grid
    direction: str
    beta: np.ndarray
    theta: np.ndarray
    gamma: np.ndarray
    theta_prime: np.ndarray
    spec: Optional[PotentialSpec] = None

    @property
    def M(self) -> np.ndarray:
        """``gamma (1 - beta sigma_2) = e^{-2F}`` per node, shape ``(n, 2, 2)``."""
        return self.gamma[:, None, None] * (EYE2 - self.beta[:, None, None] * SIGMA2)

    @property
    def M_inverse(self) -> np.ndarray:
        return self.gamma[:, None, None] * (EYE2 + self.beta[:, None, None] * SIGMA2)

    @property
    def F(self) -> np.ndarray:
        """``sigma_2 theta/2`` per node."""
        return 0.5 * self.theta[:, None, None] * SIGMA2

    def expF(self, sign: float = 1.0) -> np.ndarray:
        """``exp(sign F) = cosh(theta/2) + sign sinh(theta/2) sigma_2`` per node."""
        h = 0.5 * self.theta
        return np.cosh(h)[:, None, None] * EYE2 + sign * np.sinh(h)[:, None, None] * SIGMA2

    @property
    def theta_max(self) -> float:
        return float(np.max(np.abs(self.theta))) if self.theta.size else 0.0

    def fields_at(self, pts):
        """``(beta, gamma, theta')`` at arbitrary positions (exact primitives)."""
        pts = np.asarray(pts, dtype=float)
        if self.spec is None:
            b = np.interp(pts, self.grid.x, self.beta)
            tp = np.interp(pts, self.grid.x, self.theta_prime)
            return b, 1.0 / np.sqrt(1.0 - b**2), tp
        b, db, _ = boost_ratio(self.spec, self.direction, pts)
        return b, 1.0 / np.sqrt(1.0 - b**2), db / (1.0 - b**2)

    def invariant_defects(self) -> dict:
        """Pointwise identities that must hold to rounding."""
        one = self.gamma * np.sqrt(1.0 - self.beta**2)
        mm = np.einsum("nij,njk->nik", self.M_inverse, self.M) - EYE2
        ff = np.einsum("nij,njk->nik", self.expF(1.0), self.expF(-1.0)) - EYE2
        return {
            "gamma_sqrt": float(np.max(np.abs(one - 1.0))) if one.size else 0.0,
            "M_inverse": float(np.max(np.abs(mm))) if mm.size else 0.0,
            "expF_inverse": float(np.max(np.abs(ff))) if ff.size else 0.0,
        }


def boost_fields(
    spec: PotentialSpec, grid: Grid, direction: str = "H1", *, audit: bool = True
) -> BoostData:
    """Sample ``beta, theta, gamma, theta'`` for the chosen hypothesis direction.

    ``direction`` is ``"H1"`` (line or half-line, ``beta = A2/V2``) or
    ``"H1'"`` (``beta = V2/A2``).  ``"H2"`` is accepted as an alias of
    ``"H1"`` for half-line specs.
    """
    if direction == "H2":
        direction = "H1"
    if direction not in ("H1", "H1'"):
        raise ValueError("direction must be 'H1', 'H2' or \"H1'\"")
    if audit:
        which = direction
        if direction == "H1" and spec.geometry == "half-line":
            which = "H2"
        rep = check_hypothesis(spec, which, grid=grid)
        if rep.ratio_sup >= 1.0:
            raise BoostRefusal(
                f"|beta| reaches {rep.ratio_sup:.6g} >= 1; hypothesis condition ii) fails"
            )
        if not rep.passed:
            raise BoostRefusal("hypothesis audit failed: " + "; ".join(rep.messages))
    x = grid.x
    beta, dbeta, _ = boost_ratio(spec, direction, x)
    if np.any(np.abs(beta) >= 1.0):
        raise BoostRefusal("|beta| >= 1 on the grid; hypothesis condition ii) fails")
    theta = np.arctanh(beta)
    gamma = np.cosh(theta)
    return BoostData(grid, direction, beta, theta, gamma, dbeta / (1.0 - beta**2), spec)


# ---------------------------------------------------------------- boosted operator


def assemble_boosted(
    spec: PotentialSpec,
    grid: Grid,
    bd: BoostData,
    *,
    xi: float = 0.0,
    k: Optional[float] = None,
    m: float = 0.0,
) -> DiracMatrix:
    """Assemble the boosted operator ``h~ = e^F h e^F`` on the lattice.

    Writing ``h = sigma_1 p + sigma_2 W + V + m sigma_3`` and using the exact
    cancellation ``A2 = beta V2`` (or ``V2 = beta A2``) the boost gives

    * ``beta = A2/V2``: ``sigma_2`` coefficient ``gamma (W1 + beta V1)`` and
      potential ``V2/gamma + gamma (V1 + beta W1)``,
    * ``beta = V2/A2``: ``sigma_2`` coefficient ``gamma (W1 + beta V1) -
      A2/gamma`` and potential ``gamma (V1 + beta W1)``,

    plus ``(m + theta'/2) sigma_3``, where ``W1 = xi - A1`` on the line and
    ``k/x - A1`` on the half-line.  With ``V1 = 0`` and ``xi = 0`` these are
    ``V/gamma - gamma (1 + sigma_2 beta) sigma_2 A1`` and
    ``-sigma_2 A/gamma + gamma (1 + sigma_2 beta) V1``.  Every term is a real
    multiple of a Pauli matrix, so the result is Hermitian.
    """
    if bd.grid != grid:
        raise ValueError("boost data were sampled on a different grid")
    if spec.geometry != grid.geometry:
        raise ValueError("spec and grid geometries differ")
    half = grid.geometry == "half-line"
    if half:
        k = 0.5 if k is None else _check_channel(k)
        if k == 0.0:
            raise ValueError("the boosted half-line operator is built for |k| >= 1/2")
    lower_first = not (half and k > 0)

    y = grid.chain_positions
    mid = y[:-1] + 0.25 * grid.dx

    def w1(pts):
        base = (k / pts) if half else np.full_like(pts, xi)
        return base - spec.A1(pts)

    b_s, g_s, tp_s = bd.fields_at(y)
    b_m, g_m, _ = bd.fields_at(mid)
    if bd.direction == "H1":
        sig2 = g_m * (w1(mid) + b_m * spec.V1(mid))
        pot = spec.V2(y) / g_s + g_s * (spec.V1(y) + b_s * w1(y))
    else:
        sig2 = g_m * (w1(mid) + b_m * spec.V1(mid)) - spec.A2(mid) / g_m
        pot = g_s * (spec.V1(y) + b_s * w1(y))
    onsite = pot + _mass_diag(grid, m, lower_first) + _mass_diag(grid, 0.5, lower_first) * tp_s
    diag, off = assemble_chain(grid, onsite, sig2, lower_first=lower_first)
    return DiracMatrix(
        grid,
        diag,
        off,
        channel=k if half else None,
        momentum=None if half else float(xi),
        mass=float(m),
        label="boosted",
        lower_first=lower_first,
        info={"direction": bd.direction, "theta_max": bd.theta_max},
    )


def assemble_original(spec: PotentialSpec, grid: Grid, *, xi=0.0, k=None, m=0.0) -> DiracMatrix:
    """The unboosted operator from the same spec (for residual comparisons)."""
    if grid.geometry == "half-line":
        return assemble_halfline(grid, spec.V, spec.A, k=0.5 if k is None else k, m=m)
    return assemble_line(grid, spec.V, spec.A, xi=xi, m=m)


# ---------------------------------------------------------------- resolvent identity


def boost_blocks(bd: BoostData):
    """Sparse ``(M, e^F, e^-F)`` in interleaved layout."""
    return _block_diag(bd.M), _block_diag(bd.expF(1.0)), _block_diag(bd.expF(-1.0))


@dataclass
class ResolventIdentityReport:
    dx: float
    z: complex
    r1: float
    norm_boosted: float
    norm_original: float
    bound_factor: float
    interior: tuple
    trim: float

    @property
    def bound_slack(self) -> float:
        """``||(h-z)^-1|| e^{max|theta|} - ||(M h~ - z)^-1||`` (nonnegative when the bound holds)."""
        return self.norm_original * self.bound_factor - self.norm_boosted

    @property
    def bound_holds(self) -> bool:
        return self.bound_slack >= 0.0

    def row(self):
        return (self.dx, self.r1, self.bound_slack)


def _interior_indices(grid: Grid, trim: float):
    x = grid.x
    lo_w, hi_w = grid.walls
    span = hi_w - lo_w
    lo, hi = lo_w + trim * span, hi_w - trim * span
    nodes = np.nonzero((x >= lo) & (x <= hi))[0]
    idx = np.sort(np.concatenate([2 * nodes, 2 * nodes + 1]))
    return idx, (lo, hi)


def _shifted_lu(A: sp.spmatrix, z: complex):
    n = A.shape[0]
    return spla.splu((A - z * sp.identity(n, format="csc")).tocsc())


def _top_singular_value(matvec, rmatvec, shape) -> float:
    op = spla.LinearOperator(
        shape,
        matvec=lambda v: matvec(np.ravel(v)),
        rmatvec=lambda v: rmatvec(np.ravel(v)),
        dtype=complex,
    )
    if min(shape) <= 2:
        dense = np.column_stack([matvec(e) for e in np.eye(shape[1], dtype=complex)])
        return float(np.linalg.norm(dense, 2))
    try:
        s = spla.svds(op, k=1, return_singular_vectors=False, tol=1e-10, random_state=0)
    except spla.ArpackError:
        # ARPACK stops when the operator annihilates its start vector, e.g. an
        # exactly vanishing residual; fall back to power iteration
        return _power_norm(op, shape)
    return float(s[0])


def _power_norm(op, shape, steps: int = 50) -> float:
    v = np.random.default_rng(0).standard_normal(shape[1]) + 0j
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(steps):
        w = op.rmatvec(op.matvec(v))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        sigma, v = math.sqrt(nw), w / nw
    return float(sigma)


def resolvent_norm(A: sp.spmatrix, z: complex) -> float:
    """``||(A - z)^-1||`` for a sparse (possibly non-normal) matrix."""
    lu = _shifted_lu(A, z)
    n = A.shape[0]
    return _top_singular_value(lu.solve, lambda v: lu.solve(v, trans="H"), (n, n))


def verify_resolvent_identity(
    H: DiracMatrix,
    H_boosted: DiracMatrix,
    bd: BoostData,
    z: complex = 1j,
    *,
    trim: float = 0.1,
) -> ResolventIdentityReport:
    """Compare ``(M h~ - z)^-1`` with ``e^-F (h - z)^-1 e^F``.

    ``r1`` is the operator norm of the difference restricted to the interior
    nodes (a fraction ``trim`` of the box is dropped at each wall).  The
    bound ``||(M h~ - z)^-1|| <= ||(h - z)^-1|| max e^{|theta|}`` is checked
    with full-matrix norms.  All norms are top singular values computed
    iteratively on sparse LU factorizations.
    """
    if z.imag == 0:
        raise ValueError("z must be off the real axis")
    grid = H.grid
    M, eF, emF = boost_blocks(bd)
    lu_b = _shifted_lu((M @ H_boosted.matrix).tocsc(), z)
    lu_h = _shifted_lu(H.matrix.tocsc(), z)
    idx, window = _interior_indices(grid, trim)
    n = grid.size
    eFh, emFh = eF.conj().T.tocsr(), emF.conj().T.tocsr()

    def pad(v):
        full = np.zeros(n, dtype=complex)
        full[idx] = np.ravel(v)
        return full

    def diff(v):
        u = pad(v)
        return (lu_b.solve(u) - emF @ lu_h.solve(eF @ u))[idx]

    def diff_adj(v):
        u = pad(v)
        return (lu_b.solve(u, trans="H") - eFh @ lu_h.solve(emFh @ u, trans="H"))[idx]

    r1 = _top_singular_value(diff, diff_adj, (idx.size, idx.size))
    norm_b = _top_singular_value(lu_b.solve, lambda v: lu_b.solve(v, trans="H"), (n, n))
    norm_h = _top_singular_value(lu_h.solve, lambda v: lu_h.solve(v, trans="H"), (n, n))
    return ResolventIdentityReport(
        dx=grid.dx,
        z=z,
        r1=r1,
        norm_boosted=norm_b,
        norm_original=norm_h,
        bound_factor=math.exp(bd.theta_max),
        interior=window,
        trim=trim,
    )


def gauge_covariance_residual(
    V, grid: Grid, z: complex = 1j, method: str = "symmetric", m: float = 0.0
) -> float:
    """``||U (h_V - z)^-1 U^dagger - (h_0 - z)^-1||`` on a line grid (operator norm)."""
    if grid.geometry != "line":
        raise ValueError("gauge covariance is checked on the line")
    hv = assemble_line(grid, V, m=m).matrix
    h0 = assemble_line(grid, m=m).matrix
    U = gauge_unitary(V, grid, method=method)
    Uh = U.conj().T
    lu_v, lu_0 = _shifted_lu(hv, z), _shifted_lu(h0, z)
    n = grid.size

    def apply(v):
        return U @ lu_v.solve(Uh @ v) - lu_0.solve(v)

    def apply_adj(v):
        return U @ lu_v.solve(Uh @ v, trans="H") - lu_0.solve(v, trans="H")

    return _top_singular_value(apply, apply_adj, (n, n))


def lorentz_free_defect(grid: Grid, beta: Callable, dbeta: Callable, phi: np.ndarray) -> float:
    """Relative defect of ``e^-F sigma_1 p e^F = gamma (1 - sigma_2 beta) sigma_1 (p - i sigma_2 theta'/2)``.

    Both sides act on the node spinor ``phi`` (interleaved layout); the
    returned number is ``||lhs - rhs|| / ||phi||`` and is ``O(dx)``.
    """
    x = grid.x
    b = np.asarray(beta(x), dtype=float)
    tp = np.asarray(dbeta(x), dtype=float) / (1.0 - b**2)
    th = np.arctanh(b)
    bd = BoostData(grid, "H1", b, th, np.cosh(th), tp)
    M, eF, emF = boost_blocks(bd)
    K = (assemble_line(grid) if grid.geometry == "line" else assemble_halfline(grid, k=0.0)).matrix
    lhs = emF @ (K @ (eF @ phi))
    s3 = np.tile([1.0, -1.0], grid.n) * np.repeat(0.5 * tp, 2)
    rhs = M @ (K @ phi + s3 * phi)
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(phi))
