"""Reduction of symmetric two-dimensional Dirac problems to one-dimensional fibers.

Translation symmetry in ``x2`` (Landau gauge) gives the fibers ``h(xi)``
through a Fourier transform in ``x2``.  Rotation symmetry (rotational gauge)
gives the channels ``h_k``, ``k in Z + 1/2``, through the spinor angular
harmonics

    psi(r, phi) = (2 pi r)^-1/2 (u(r) e^{i(k-1/2) phi}, v(r) e^{i(k+1/2) phi}),

which map ``sigma . (p - A) + V`` onto ``sigma_1 (-i d/dr) + sigma_2 (k/r - A) + V``.
Fiber states are scaled so that their squared norms (the weights) add up to
the squared norm of the two-dimensional state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Sequence

import numpy as np

from .lattice import Grid
from .packets import WavePacket
from .resolvent_hs import power_law_fit

__all__ = [
    "FiberFamily",
    "fiber_translation",
    "inverse_translation",
    "fiber_rotation",
    "inverse_rotation",
    "AggregateReport",
    "aggregate_lower_bound",
    "select_labels",
    "polar_grid",
    "dual_grid",
    "apply_cartesian_dirac",
    "WeightCutError",
]


class WeightCutError(ValueError):
    """The selected fibers carry less than half of the total weight."""


@dataclass
class FiberFamily:
    kind: str
    labels: np.ndarray
    states: list
    weights: np.ndarray
    total: float
    grid: Grid
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("translation", "rotation"):
            raise ValueError("kind must be 'translation' or 'rotation'")

    @property
    def weight_defect(self) -> float:
        return abs(float(self.weights.sum()) - self.total)

    def state(self, label) -> WavePacket:
        i = int(np.argmin(np.abs(self.labels - label)))
        if abs(self.labels[i] - label) > 1e-12 * max(1.0, abs(label)):
            raise KeyError(f"label {label} not in family")
        return self.states[i]

    def nonzero(self, tol: float = 1e-12) -> np.ndarray:
        return self.labels[self.weights > tol * max(self.total, 1e-300)]

    def to_csv(self, path, meta=None, scenario=None):
        from .io import write_csv

        m = {"kind": self.kind, "total": self.total}
        m.update(meta or {})
        rows = zip(self.labels, self.weights, self.weights / self.total)
        return write_csv(path, ["label", "weight", "fraction"], rows, meta=m, scenario=scenario)


# ---------------------------------------------------------------- translation


def dual_grid(n2: int, dx2: float) -> np.ndarray:
    """Momenta ``xi_m = 2 pi m/(n2 dx2)`` in FFT order."""
    return 2.0 * math.pi * np.fft.fftfreq(n2, d=dx2)


def fiber_translation(psi2d: np.ndarray, grid: Grid, x2: np.ndarray) -> FiberFamily:
    """Fourier transform along ``x2`` of a field ``psi2d[j, l, c]`` (node ``j``, ``x2_l``, component ``c``).

    ``psi_hat(x1, xi) = dx2/sqrt(2 pi) sum_l psi(x1, x2_l) e^{-i xi x2_l}``;
    the fiber state at ``xi`` is ``sqrt(d xi) psi_hat(., xi)``.
    """
    psi2d = np.asarray(psi2d, dtype=complex)
    n1, n2, two = psi2d.shape
    if n1 != grid.n or two != 2:
        raise ValueError("psi2d must have shape (grid.n, n2, 2)")
    x2 = np.asarray(x2, dtype=float)
    dx2 = float(x2[1] - x2[0])
    if not np.allclose(np.diff(x2), dx2):
        raise ValueError("x2 must be uniform")
    xi = dual_grid(n2, dx2)
    dxi = 2.0 * math.pi / (n2 * dx2)
    # fft sums e^{-i xi (x2_l - x2_0)}; restore the absolute phase
    hat = np.fft.fft(psi2d, axis=1) * (dx2 / math.sqrt(2 * math.pi))
    hat *= np.exp(-1j * xi * x2[0])[None, :, None]
    order = np.argsort(xi)
    states, weights = [], []
    for m in order:
        amps = (math.sqrt(dxi) * hat[:, m, :]).reshape(-1)
        wp = WavePacket(amps, grid, {"xi": float(xi[m])})
        states.append(wp)
        weights.append(wp.norm2)
    total = grid.dx * dx2 * float(np.sum(np.abs(psi2d) ** 2))
    return FiberFamily(
        "translation", xi[order], states, np.array(weights), total, grid, {"x2": x2, "dxi": dxi}
    )


def inverse_translation(family: FiberFamily) -> np.ndarray:
    """Rebuild ``psi2d`` from a translation family."""
    x2 = family.meta["x2"]
    dxi = family.meta["dxi"]
    dx2 = float(x2[1] - x2[0])
    n2 = x2.size
    xi = dual_grid(n2, dx2)
    hat = np.zeros((family.grid.n, n2, 2), dtype=complex)
    for lab, st in zip(family.labels, family.states):
        m = int(np.argmin(np.abs(xi - lab)))
        hat[:, m, :] = st.amplitudes.reshape(-1, 2) / math.sqrt(dxi)
    hat *= np.exp(1j * xi * x2[0])[None, :, None]
    # sum_m dxi/sqrt(2 pi) psi_hat e^{i xi x2}
    return np.fft.ifft(hat, axis=1) * (math.sqrt(2 * math.pi) / dx2)


# ---------------------------------------------------------------- rotation


def polar_grid(grid: Grid, n_phi: int) -> tuple:
    """Radial nodes of a half-line grid and ``n_phi`` equispaced angles."""
    if grid.geometry != "half-line":
        raise ValueError("the radial grid must be a half-line grid")
    return grid.x, 2.0 * math.pi * np.arange(n_phi) / n_phi


def fiber_rotation(psi_polar: np.ndarray, grid: Grid, k_values: Sequence[float]) -> FiberFamily:
    """Angular-channel decomposition of ``psi_polar[j, m, c]`` (radius ``r_j``, angle ``phi_m``).

    ``u_k(r) = sqrt(2 pi r) (1/N) sum_m psi_1(r, phi_m) e^{-i(k-1/2) phi_m}`` and
    ``v_k`` likewise with ``psi_2`` and ``k + 1/2``.  The weights add up to
    ``int |psi|^2 r dr dphi`` when ``k_values`` covers every harmonic the
    angular grid resolves.
    """
    psi = np.asarray(psi_polar, dtype=complex)
    nr, nphi, two = psi.shape
    if nr != grid.n or two != 2:
        raise ValueError("psi_polar must have shape (grid.n, n_phi, 2)")
    r, phi = polar_grid(grid, nphi)
    ks = np.array(sorted(float(k) for k in k_values))
    for k in ks:
        if abs(k - math.floor(k) - 0.5) > 1e-12:
            raise ValueError(f"rotation channels must be half-integers, got {k}")
    if np.unique(np.round(ks - 0.5).astype(int) % nphi).size < ks.size:
        raise ValueError("two channels alias on this angular grid; increase n_phi")
    scale = np.sqrt(2 * math.pi * r)[:, None]
    states, weights = [], []
    for k in ks:
        up = (psi[:, :, 0] @ np.exp(-1j * (k - 0.5) * phi)) / nphi
        lo = (psi[:, :, 1] @ np.exp(-1j * (k + 0.5) * phi)) / nphi
        amps = np.column_stack([up, lo]) * scale
        wp = WavePacket(amps.reshape(-1), grid, {"k": float(k)})
        states.append(wp)
        weights.append(wp.norm2)
    total = float(np.sum(np.abs(psi) ** 2 * r[:, None, None]) * grid.dx * 2 * math.pi / nphi)
    return FiberFamily("rotation", ks, states, np.array(weights), total, grid, {"n_phi": nphi})


def inverse_rotation(family: FiberFamily, n_phi: Optional[int] = None) -> np.ndarray:
    """Polar samples of ``sum_k (2 pi r)^-1/2 (u_k e^{i(k-1/2) phi}, v_k e^{i(k+1/2) phi})``."""
    n_phi = n_phi or family.meta["n_phi"]
    r, phi = polar_grid(family.grid, n_phi)
    out = np.zeros((r.size, n_phi, 2), dtype=complex)
    inv = 1.0 / np.sqrt(2 * math.pi * r)[:, None]
    for k, st in zip(family.labels, family.states):
        a = st.amplitudes.reshape(-1, 2)
        out[:, :, 0] += inv * a[:, 0:1] * np.exp(1j * (k - 0.5) * phi)[None, :]
        out[:, :, 1] += inv * a[:, 1:2] * np.exp(1j * (k + 0.5) * phi)[None, :]
    return out


def apply_cartesian_dirac(
    psi: Callable, V: Callable, A_radial: Callable, x, y, h: float = 1e-4
) -> np.ndarray:
    """``(sigma . (p - A) + V) psi`` at points ``(x, y)`` by central differences.

    ``psi(x, y)`` returns an array ``(..., 2)``; the vector potential is the
    rotational gauge ``A = A_radial(r) (-sin phi, cos phi)``.  Used to check
    the channel basis structurally, never for dynamics.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dpx = (psi(x + h, y) - psi(x - h, y)) / (2 * h)
    dpy = (psi(x, y + h) - psi(x, y - h)) / (2 * h)
    r = np.hypot(x, y)
    ax = -A_radial(r) * y / r
    ay = A_radial(r) * x / r
    p = psi(x, y)
    px = -1j * dpx - ax[..., None] * p
    py = -1j * dpy - ay[..., None] * p
    out = np.empty_like(p)
    # sigma_1 px + sigma_2 py
    out[..., 0] = px[..., 1] - 1j * py[..., 1]
    out[..., 1] = px[..., 0] + 1j * py[..., 0]
    return out + V(r)[..., None] * p


# ---------------------------------------------------------------- aggregation


def select_labels(family: FiberFamily, fraction: float = 0.5) -> np.ndarray:
    """Heaviest labels whose weights first reach ``fraction`` of the total."""
    order = np.argsort(family.weights)[::-1]
    cum = np.cumsum(family.weights[order])
    n = int(np.searchsorted(cum, fraction * family.total * (1 - 1e-15)) + 1)
    return family.labels[order[: min(n, order.size)]]


@dataclass
class AggregateReport:
    p: float
    labels: np.ndarray
    weight_fraction: float
    T_values: np.ndarray
    aggregated_values: np.ndarray
    fitted_exponent: float
    fitted_constant: float
    constant_sum: float
    min_fiber_exponent: float
    per_fiber_exponents: dict

    def within(self, rel: float = 0.1) -> bool:
        return abs(self.fitted_exponent - self.p) <= rel * self.p

    def to_csv(self, path, meta=None, scenario=None):
        from .io import write_csv

        m = {
            "p": self.p,
            "labels": " ".join("%.17g" % l for l in self.labels),
            "weight_fraction": self.weight_fraction,
            "fitted_exponent": self.fitted_exponent,
            "constant_sum": self.constant_sum,
            "min_fiber_exponent": self.min_fiber_exponent,
        }
        m.update(meta or {})
        return write_csv(
            path, ["T", "aggregated_cesaro"], zip(self.T_values, self.aggregated_values), meta=m, scenario=scenario
        )


def aggregate_lower_bound(
    family: FiberFamily,
    reports: Mapping,
    p: float,
    labels: Optional[Sequence[float]] = None,
    *,
    cut: float = 0.5,
) -> AggregateReport:
    """Sum per-fiber Cesaro moments over a label set carrying at least ``cut`` of the weight.

    ``reports`` maps labels to :class:`~diracdyn.dynamics.BallisticReport`
    computed for the (unnormalized) fiber states on a common T grid.  The
    two-dimensional Cesaro moment dominates the sum over any label subset,
    and the sum of the fitted constants is the aggregated constant.
    """
    if labels is None:
        labels = list(reports.keys())
    labels = np.array(sorted(float(l) for l in labels))
    missing = [l for l in labels if l not in reports]
    if missing:
        raise KeyError(f"no report for labels {missing}")
    w = {float(l): float(wt) for l, wt in zip(family.labels, family.weights)}
    sel = sum(w.get(float(l), 0.0) for l in labels)
    frac = sel / family.total
    if frac < cut:
        raise WeightCutError(
            f"selected fibers carry {frac:.4g} of the weight; at least {cut} is required "
            "so that the aggregated bound controls a fixed fraction of the state"
        )
    T = None
    agg = None
    for l in labels:
        rep = reports[l]
        if rep.p != p:
            raise ValueError("per-fiber reports use a different moment order")
        if T is None:
            T, agg = np.asarray(rep.T_values), np.array(rep.cesaro_values, dtype=float)
        else:
            if not np.allclose(rep.T_values, T):
                raise ValueError("per-fiber reports must share one T grid")
            agg = agg + rep.cesaro_values
    expo, const, _ = power_law_fit(T, agg)
    per = {float(l): float(reports[l].fitted_exponent) for l in labels}
    return AggregateReport(
        p=p,
        labels=labels,
        weight_fraction=frac,
        T_values=T,
        aggregated_values=agg,
        fitted_exponent=expo,
        fitted_constant=const,
        constant_sum=float(sum(reports[l].fitted_constant for l in labels)),
        min_fiber_exponent=min(per.values()),
        per_fiber_exponents=per,
    )
