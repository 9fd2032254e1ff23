"""Time evolution, position moments, Cesaro means and ballistic diagnostics.

Propagation is exact for the matrix: ``e^{-ith} psi = V e^{-i Lambda t} V^dagger psi``.
Every time-dependent quantity refuses times beyond the causality horizon,
after which reflections off the hard walls of the box would contaminate it.
Finite matrices also recur, so fits are confined to times below the
Heisenberg time ``2 pi / mean gap``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .lattice import EigenSystem
from .packets import SUPPORT_TOL, WavePacket
from .resolvent_hs import power_law_fit

__all__ = [
    "evolve",
    "evolve_many",
    "moment",
    "moment_series",
    "cesaro_moment",
    "cesaro_window",
    "ballistic_fit",
    "BallisticReport",
    "causality_check",
    "CausalityReport",
    "last_inequality_check",
    "LastInequalityReport",
    "rage_window",
    "heisenberg_time",
    "free_cesaro_closed_form",
    "proof_radius",
    "proof_lower_bound",
    "HorizonError",
]


class HorizonError(ValueError):
    """Requested time exceeds the causality horizon of the packet."""


def _coefficients(es: EigenSystem, psi: WavePacket, tol: float = 1e-8) -> np.ndarray:
    c = es.coefficients(psi.amplitudes)
    if not es.complete:
        kept = psi.grid.dx * float(np.sum(np.abs(c) ** 2))
        if psi.norm2 - kept > tol * max(psi.norm2, 1.0):
            raise ValueError(
                "packet is not contained in the span of the windowed eigensystem "
                f"(missing mass {psi.norm2 - kept:.3g})"
            )
    return c


def evolve(es: EigenSystem, psi0: WavePacket, t: float) -> WavePacket:
    """``e^{-ith} psi0``."""
    if psi0.grid != es.grid:
        raise ValueError("packet and eigensystem live on different grids")
    if t == 0:
        return WavePacket(psi0.amplitudes.copy(), psi0.grid, dict(psi0.meta))
    c = _coefficients(es, psi0)
    amps = es.synthesize(np.exp(-1j * es.eigenvalues * t) * c)
    return WavePacket(amps, psi0.grid, dict(psi0.meta, t=t))


def evolve_many(es: EigenSystem, psi0: WavePacket, times, coeffs=None) -> np.ndarray:
    """Amplitudes at several times as columns, shape ``(2n, len(times))``."""
    times = np.asarray(times, dtype=float)
    c = _coefficients(es, psi0) if coeffs is None else coeffs
    phases = np.exp(-1j * np.outer(es.eigenvalues, times)) * c[:, None]
    return es.synthesize(phases)


def _weights(grid, p: float) -> np.ndarray:
    return np.repeat(np.abs(grid.x) ** p, 2)


def moment(psi: WavePacket, p: float) -> float:
    """``dx sum |x_j|^p |psi(x_j)|^2`` (both components)."""
    if p <= 0:
        raise ValueError("moment order p must be positive")
    return float(psi.grid.dx * np.sum(_weights(psi.grid, p) * np.abs(psi.amplitudes) ** 2))


class _ReducedForm:
    """``dx |V e^{-i Lambda t} c|_w^2`` through the projected weight matrix.

    Worth it when the packet lives on few eigenvectors: one ``m x m`` product
    per time instead of a synthesis on the whole grid.
    """

    drop = 1e-24  # relative |c|^2 below which coefficients are dropped

    def __init__(self, es, c, w, idx):
        self.ev = es.eigenvalues[idx]
        self.c = c[idx]
        self.form = es.quadratic_form(w, idx)
        self.dx = es.grid.dx

    @classmethod
    def build(cls, es, c, w):
        mag = np.abs(c) ** 2
        idx = np.nonzero(mag > cls.drop * mag.sum())[0]
        if idx.size == 0 or idx.size > es.grid.size // 4:
            return None
        return cls(es, c, w, idx)

    def __call__(self, times, chunk: int = 512):
        out = np.empty(times.size)
        for s in range(0, times.size, chunk):
            d = np.exp(-1j * np.outer(self.ev, times[s : s + chunk])) * self.c[:, None]
            out[s : s + chunk] = self.dx * np.einsum("ij,ij->j", d.conj(), self.form @ d).real
        return out


def _series(es: EigenSystem, psi0: WavePacket, w: np.ndarray, chunk: int = 256):
    """Callable ``times -> dx sum w |e^{-ith} psi0|^2`` with the setup done once."""
    c = _coefficients(es, psi0)
    reduced = _ReducedForm.build(es, c, w)
    if reduced is not None:
        return reduced

    def full(times):
        out = np.empty(times.size)
        for s in range(0, times.size, chunk):
            amps = evolve_many(es, psi0, times[s : s + chunk], coeffs=c)
            out[s : s + chunk] = es.grid.dx * (w @ (np.abs(amps) ** 2))
        return out

    return full


def moment_series(
    es: EigenSystem, psi0: WavePacket, p: float, times, *, chunk: int = 256, weights=None
) -> np.ndarray:
    """``moment(evolve(t), p)`` for every ``t`` in ``times``.

    ``weights`` replaces ``|x|^p`` by an arbitrary per-entry weight (used for
    windowed norms).
    """
    w = _weights(es.grid, p) if weights is None else weights
    return _series(es, psi0, w, chunk)(np.asarray(times, dtype=float))


def _trapezoid_mean(values: np.ndarray, T: float) -> float:
    h = T / (values.size - 1)
    return float(h * (values.sum() - 0.5 * (values[0] + values[-1])) / T)


def _cesaro(series_fn, T: float, n_samples: Optional[int], rtol: float, max_samples: int):
    if T <= 0:
        raise ValueError("T must be positive")
    if n_samples is not None:
        return _trapezoid_mean(series_fn(np.linspace(0.0, T, n_samples)), T), n_samples
    n = 33
    prev_vals = series_fn(np.linspace(0.0, T, n))
    prev = _trapezoid_mean(prev_vals, T)
    while True:
        # doubling reuses the old nodes and only evaluates the midpoints
        mids = np.linspace(0.0, T, n)[:-1] + 0.5 * T / (n - 1)
        mid_vals = series_fn(mids)
        vals = np.empty(2 * n - 1)
        vals[0::2] = prev_vals
        vals[1::2] = mid_vals
        n = 2 * n - 1
        cur = _trapezoid_mean(vals, T)
        if abs(cur - prev) <= rtol * abs(cur) or n >= max_samples:
            if abs(cur - prev) > rtol * abs(cur):
                warnings.warn("Cesaro quadrature hit the sample cap before converging", RuntimeWarning)
            return cur, n
        prev, prev_vals = cur, vals


def _check_horizon(psi0: WavePacket, T: float, horizon: Optional[float]):
    h = psi0.horizon() if horizon is None else horizon
    if T > h * (1 + 1e-12):
        raise HorizonError(f"T = {T:.6g} exceeds the causality horizon {h:.6g}")
    return h


def cesaro_moment(
    es: EigenSystem,
    psi0: WavePacket,
    p: float,
    T: float,
    n_samples: Optional[int] = None,
    *,
    rtol: float = 1e-3,
    max_samples: int = 1 << 14,
    horizon: Optional[float] = None,
    series=None,
) -> float:
    """``(1/T) int_0^T moment(e^{-ith} psi0, p) dt`` by the composite trapezoid rule.

    With ``n_samples=None`` the sample count doubles until the mean changes
    by less than ``rtol`` (0.1% by default).  ``series`` lets repeated calls
    share one precomputed moment evaluator.
    """
    _check_horizon(psi0, T, horizon)
    fn = series if series is not None else _series(es, psi0, _weights(es.grid, p))
    return _cesaro(fn, T, n_samples, rtol, max_samples)[0]


def cesaro_window(
    es: EigenSystem,
    psi0: WavePacket,
    interval: tuple,
    T: float,
    n_samples: Optional[int] = None,
    *,
    rtol: float = 1e-3,
    max_samples: int = 1 << 14,
) -> float:
    """``<||1_I e^{-ith} psi0||^2>_T`` (nodes with ``lo <= x_j < hi``)."""
    mask = np.repeat(es.grid.node_mask(*interval).astype(float), 2)
    fn = _series(es, psi0, mask)
    return _cesaro(fn, T, n_samples, rtol, max_samples)[0]


def heisenberg_time(es: EigenSystem, interval: Optional[tuple] = None) -> float:
    """``2 pi / mean gap`` of the eigenvalues in ``interval`` (all stored if None)."""
    gap = es.mean_gap(*interval) if interval is not None else es.mean_gap()
    return 2.0 * math.pi / gap


def free_cesaro_closed_form(psi0: WavePacket, T: float) -> float:
    """``||x psi0||^2 + T Re<x psi0, sigma_1 psi0> + (T^2/3) ||psi0||^2``.

    Exact Cesaro mean of the second moment for ``sigma_1 (-i d/dx)`` on the
    line, from ``x(t) = x + sigma_1 t``.
    """
    x = psi0.grid.x
    a = psi0.amplitudes
    xa = np.repeat(x, 2) * a
    s1a = a.reshape(-1, 2)[:, ::-1].reshape(-1)
    dx = psi0.grid.dx
    m2 = dx * float(np.sum(np.abs(xa) ** 2))
    cross = dx * float(np.vdot(xa, s1a).real)
    return m2 + T * cross + T**2 / 3.0 * psi0.norm2


# ---------------------------------------------------------------- fits


@dataclass
class BallisticReport:
    p: float
    T_values: np.ndarray
    cesaro_values: np.ndarray
    fitted_exponent: float
    fitted_constant: float
    fit_residual: float
    horizon: float
    heisenberg_time: float
    meta: dict = field(default_factory=dict)

    def within(self, rel: float = 0.1) -> bool:
        return abs(self.fitted_exponent - self.p) <= rel * self.p

    def to_csv(self, path, meta=None, scenario=None):
        from .io import write_csv

        m = dict(self.meta)
        m.update(
            p=self.p,
            fitted_exponent=self.fitted_exponent,
            fitted_constant=self.fitted_constant,
            horizon=self.horizon,
            heisenberg_time=self.heisenberg_time,
            note="finite matrices have point spectrum; the a.c. proxy is a window-filtered packet "
            "and fits are confined below the Heisenberg time",
        )
        m.update(meta or {})
        fit = self.fitted_constant * self.T_values**self.fitted_exponent
        rows = zip(self.T_values, self.cesaro_values, fit)
        return write_csv(path, ["T", "cesaro", "fitted"], rows, meta=m, scenario=scenario)


def ballistic_fit(
    es: EigenSystem,
    psi0: WavePacket,
    p: float,
    T_grid: Sequence[float],
    *,
    horizon: Optional[float] = None,
    n_samples: Optional[int] = None,
    energy_window: Optional[tuple] = None,
) -> BallisticReport:
    """Log-log fit of the Cesaro moment against ``T``."""
    T = np.asarray(sorted(T_grid), dtype=float)
    if T.size < 2 or np.unique(T).size < 2:
        raise ValueError("a ballistic fit needs at least two distinct times")
    if T[-1] / T[0] < 10.0 * (1 - 1e-9):
        warnings.warn("T grid spans less than a decade", RuntimeWarning)
    h = _check_horizon(psi0, T[-1], horizon)
    th = heisenberg_time(es, energy_window)
    if T[-1] > th:
        warnings.warn("T grid exceeds the Heisenberg time", RuntimeWarning)
    fn = _series(es, psi0, _weights(es.grid, p))
    vals = np.array([cesaro_moment(es, psi0, p, t, n_samples, horizon=h, series=fn) for t in T])
    expo, const, resid = power_law_fit(T, vals)
    meta = dict(psi0.grid.describe())
    return BallisticReport(p, T, vals, expo, const, resid, h, th, meta)


@dataclass
class CausalityReport:
    p: float
    times: np.ndarray
    moments: np.ndarray
    bounds: np.ndarray
    slack: float
    support_radius: float

    @property
    def ratios(self) -> np.ndarray:
        return self.moments / self.bounds

    @property
    def per_time(self) -> np.ndarray:
        return self.moments <= self.bounds * (1.0 + self.slack)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.per_time))


def causality_check(
    es: EigenSystem,
    psi0: WavePacket,
    p: float,
    times: Sequence[float],
    *,
    slack: float = 0.05,
    horizon: Optional[float] = None,
    support_tol: float = SUPPORT_TOL,
) -> CausalityReport:
    """``moment(e^{-ith} psi0, p) <= (x0 + t)^p ||psi0||^2 (1 + slack)`` at each ``t``.

    ``x0`` is the radius outside which ``psi0`` carries less than
    ``support_tol`` of its mass.
    """
    times = np.asarray(times, dtype=float)
    _check_horizon(psi0, float(times.max()), horizon)
    x0 = psi0.support_radius(support_tol)
    mom = moment_series(es, psi0, p, times)
    bounds = (x0 + times) ** p * psi0.norm2
    return CausalityReport(p, times, mom, bounds, slack, x0)


# ---------------------------------------------------------------- windows


@dataclass
class LastInequalityReport:
    interval: tuple
    T_values: np.ndarray
    products: np.ndarray
    hs_value: Optional[float]
    lipschitz_ok: bool
    heisenberg_time: float
    messages: list = field(default_factory=list)

    @property
    def max_over_median(self) -> float:
        med = float(np.median(self.products))
        return float(np.max(self.products) / med) if med > 0 else math.inf

    @property
    def bounded(self) -> bool:
        return self.max_over_median <= 1.5

    @property
    def passed(self) -> bool:
        return self.lipschitz_ok and self.bounded

    def c_phi_estimate(self, alpha: float) -> float:
        """Smallest ``c`` with ``T <||1_I e^{-ith} psi||^2>_T <= c alpha ||1_I (h-i)^-1||_HS^2``."""
        if not self.hs_value:
            return math.nan
        return float(np.max(self.products) / (alpha * self.hs_value**2))


def last_inequality_check(
    es: EigenSystem,
    psi: WavePacket,
    interval: tuple,
    T_grid: Sequence[float],
    *,
    certificate=None,
    hs_value: Optional[float] = None,
    horizon: Optional[float] = None,
) -> LastInequalityReport:
    """``T <||1_I e^{-ith} psi||^2>_T`` across a T window, for Lipschitz-certified states.

    The certificate comes from :func:`diracdyn.spectral.lipschitz_split`
    (taken from ``psi.meta`` when not given); a failed certificate is
    reported as a violated precondition.
    """
    from .spectral import lipschitz_split, spectral_measure

    msgs = []
    if certificate is None:
        certificate = psi.meta.get("certificate")
    if certificate is None:
        _, _, certificate = lipschitz_split(spectral_measure(es, psi))
    ok = bool(certificate.passed)
    if not ok:
        msgs.append("Lipschitz precondition violated: " + "; ".join(certificate.messages))
    T = np.asarray(sorted(T_grid), dtype=float)
    th = heisenberg_time(es)
    if T[-1] > th:
        msgs.append(f"T grid exceeds the recurrence scale {th:.6g}")
    if horizon is not None and T[-1] > horizon:
        raise HorizonError(f"T = {T[-1]:.6g} exceeds the causality horizon {horizon:.6g}")
    prods = np.array([t * cesaro_window(es, psi, interval, t) for t in T])
    return LastInequalityReport(tuple(interval), T, prods, hs_value, ok, th, msgs)


def rage_window(
    es: EigenSystem, psi0: WavePacket, R: float, T: float, n_samples: Optional[int] = None
) -> float:
    """``<||1_(0,R) e^{-ith} psi0||^2>_T`` on the half-line."""
    if es.grid.geometry != "half-line":
        raise ValueError("the RAGE window is a half-line quantity")
    if R <= 0:
        return 0.0
    return cesaro_window(es, psi0, (0.0, R), T, n_samples)


def proof_radius(norm2: float, T: float, c_hat: float) -> float:
    """``R(T) = ||psi||^2 T / (8 C^)``."""
    return norm2 * T / (8.0 * c_hat)


def proof_lower_bound(norm2: float, T: float, p: float, c_hat: float) -> float:
    """``||psi||^{2p+2} T^p / (8^{p+1} C^p)``, the bound reached with ``R(T)``."""
    return norm2 ** (p + 1) * T**p / (8.0 ** (p + 1) * c_hat**p)
