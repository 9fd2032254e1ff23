"""Binned spectral measures, the Lipschitz/remainder split, and a.c. proxy states.

A finite matrix has pure point spectrum, so absolute continuity is only
meaningful at a resolution of a few eigenvalue gaps.  Densities are
therefore taken over bins (default width four mean gaps) and the Lipschitz
certificate is stated at that resolution, together with a check that no
single eigenvalue carries more mass than a Lipschitz measure of the same
constant could put on one gap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lattice import EigenSystem
from .packets import WavePacket, gaussian_packet
from .potentials import raised_cosine_ramp

__all__ = [
    "SpectralMeasure",
    "LipschitzCertificate",
    "spectral_measure",
    "eigen_weights",
    "lipschitz_split",
    "ac_proxy_state",
    "SpectralError",
    "split_state",
]


class SpectralError(ValueError):
    """Spectral bookkeeping failed (uncovered mass, too few eigenvalues, no split)."""


@dataclass
class SpectralMeasure:
    """Histogram of ``mu_psi`` plus the underlying per-eigenvalue weights."""

    bin_edges: np.ndarray
    masses: np.ndarray
    eigenvalues: np.ndarray
    weights: np.ndarray
    mean_gap: float

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def density(self) -> np.ndarray:
        return self.masses / self.widths

    def restricted(self, lo: float, hi: float) -> "SpectralMeasure":
        """The measure of ``1_[lo,hi](h) psi``: weights outside the interval dropped."""
        keep = (self.eigenvalues >= lo) & (self.eigenvalues <= hi)
        w = np.where(keep, self.weights, 0.0)
        masses = _histogram(self.eigenvalues, w, self.bin_edges)
        return SpectralMeasure(self.bin_edges, masses, self.eigenvalues, w, self.mean_gap)

    def to_csv(self, path, meta=None, scenario=None):
        from .io import write_csv

        rows = zip(self.bin_edges[:-1], self.bin_edges[1:], self.masses, self.density)
        m = {"total": self.total, "mean_gap": self.mean_gap}
        m.update(meta or {})
        return write_csv(path, ["lo", "hi", "mass", "density"], rows, meta=m, scenario=scenario)


def _histogram(ev, w, edges):
    idx = np.searchsorted(edges, ev, side="right") - 1
    idx = np.where(ev == edges[-1], edges.size - 2, idx)
    inside = (idx >= 0) & (idx < edges.size - 1)
    return np.bincount(idx[inside], weights=w[inside], minlength=edges.size - 1)


def eigen_weights(es: EigenSystem, psi: WavePacket) -> tuple:
    """``dx |<v, psi>|^2`` per stored eigenvector, and the mass not captured."""
    c = es.coefficients(psi.amplitudes)
    w = psi.grid.dx * np.abs(c) ** 2
    return w, psi.norm2 - float(w.sum())


def spectral_measure(
    es: EigenSystem, psi: WavePacket, bins=None, *, tol: float = 1e-10
) -> SpectralMeasure:
    """Bin ``mu_psi(Omega) = <psi, 1_Omega(h) psi>``.

    ``bins`` is an array of edges, an integer count spanning the weighted
    eigenvalues, or ``None`` for bins of width four mean gaps.  Mass that the
    bins (or a windowed eigensystem) fail to cover raises
    :class:`SpectralError`.
    """
    w, missing = eigen_weights(es, psi)
    if missing > tol * max(psi.norm2, 1.0):
        raise SpectralError(
            f"mass {missing:.3g} of psi lies outside the computed eigenvectors; "
            "widen the eigen window"
        )
    ev = es.eigenvalues
    carried = w > tol * max(psi.norm2, 1.0) * 1e-6
    lo = float(ev[carried].min()) if np.any(carried) else float(ev.min())
    hi = float(ev[carried].max()) if np.any(carried) else float(ev.max())
    span = ev[(ev >= lo) & (ev <= hi)]
    gap = float((span[-1] - span[0]) / (span.size - 1)) if span.size > 1 else es.mean_gap()
    if not math.isfinite(gap) or gap <= 0:
        gap = 1.0
    if bins is None:
        width = 4.0 * gap
        nb = max(1, int(math.ceil((hi - lo) / width + 1e-9)))
        pad = 0.5 * (nb * width - (hi - lo))
        edges = lo - pad - 0.5 * width + width * np.arange(nb + 2)
    elif np.isscalar(bins):
        nb = int(bins)
        eps = 1e-9 * max(1.0, abs(hi - lo))
        edges = np.linspace(lo - eps, hi + eps, nb + 1)
    else:
        edges = np.asarray(bins, dtype=float)
        if np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must increase")
    masses = _histogram(ev, w, edges)
    left = float(w.sum() - masses.sum())
    if left > tol * max(psi.norm2, 1.0):
        raise SpectralError(f"bins leave mass {left:.3g} uncovered")
    return SpectralMeasure(edges, masses, ev.copy(), w, gap)


@dataclass
class LipschitzCertificate:
    alpha: float
    mu2_mass: float
    total: float
    quarter_ok: bool
    atom_ok: bool
    max_atom: float
    atom_limit: float
    bin_width: float
    messages: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.quarter_ok and self.atom_ok

    @property
    def psi1_fraction(self) -> float:
        return 1.0 - self.mu2_mass / self.total if self.total else 0.0


def lipschitz_split(mu: SpectralMeasure, alpha="auto") -> tuple:
    """Split ``mu = mu1 + mu2`` by the bin density level ``alpha``.

    ``mu1`` keeps the bins with density ``<= alpha`` and so satisfies
    ``mu1(I) <= alpha |I|`` for every union of bins; ``mu2`` is the rest.
    With ``alpha="auto"`` the smallest density level giving ``mu2 <
    total/4`` is used.  The certificate also requires every eigenvalue
    weight in the kept bins to stay below ``2 alpha`` mean gaps, which a
    point mass (an eigenvector, or a few of them) cannot meet.

    Returns ``(mu1, mu2, certificate)``.
    """
    dens = mu.density
    total = mu.total
    if alpha == "auto":
        levels = np.unique(np.concatenate([[0.0], dens]))
        alpha = None
        for a in levels:
            if mu.masses[dens > a].sum() < 0.25 * total:
                alpha = float(a)
                break
        if alpha is None:
            raise SpectralError("no density level achieves mu2 < total/4 at this bin resolution")
    alpha = float(alpha)
    keep = dens <= alpha
    m1 = np.where(keep, mu.masses, 0.0)
    m2 = mu.masses - m1
    bin_of = np.clip(np.searchsorted(mu.bin_edges, mu.eigenvalues, side="right") - 1, 0, m1.size - 1)
    in1 = keep[bin_of] & (mu.eigenvalues >= mu.bin_edges[0]) & (mu.eigenvalues <= mu.bin_edges[-1])
    w1 = np.where(in1, mu.weights, 0.0)
    w2 = mu.weights - w1
    mu1 = SpectralMeasure(mu.bin_edges, m1, mu.eigenvalues, w1, mu.mean_gap)
    mu2 = SpectralMeasure(mu.bin_edges, m2, mu.eigenvalues, w2, mu.mean_gap)
    max_atom = float(w1.max()) if w1.size else 0.0
    limit = 2.0 * alpha * mu.mean_gap
    msgs = []
    quarter = m2.sum() < 0.25 * total
    if not quarter:
        msgs.append(f"mu2 carries {m2.sum():.6g} >= total/4 = {0.25 * total:.6g}")
    atom_ok = max_atom < limit
    if not atom_ok:
        msgs.append(
            f"a single eigenvalue carries {max_atom:.6g} >= 2*alpha*gap = {limit:.6g}: "
            "point-like measure, not Lipschitz at gap resolution"
        )
    cert = LipschitzCertificate(
        alpha=alpha,
        mu2_mass=float(m2.sum()),
        total=total,
        quarter_ok=bool(quarter),
        atom_ok=bool(atom_ok),
        max_atom=max_atom,
        atom_limit=limit,
        bin_width=float(np.median(mu.widths)),
        messages=msgs,
    )
    return mu1, mu2, cert


def split_state(es: EigenSystem, psi: WavePacket, mu1: SpectralMeasure) -> tuple:
    """``psi_j = 1_{S_j}(h) psi`` for the supports of ``mu1`` and its complement."""
    c = es.coefficients(psi.amplitudes)
    on = mu1.weights > 0
    a1 = es.synthesize(np.where(on, c, 0.0))
    a2 = es.synthesize(np.where(on, 0.0, c))
    return WavePacket(a1, psi.grid), WavePacket(a2, psi.grid)


def ac_proxy_state(
    es: EigenSystem,
    interval: tuple,
    envelope=None,
    *,
    min_eigenvalues: int = 20,
    normalize: bool = True,
    taper: float = 0.0,
) -> WavePacket:
    """Project an envelope onto the eigenvectors with eigenvalue in ``interval``.

    ``envelope`` is a :class:`WavePacket`, a mapping of
    :func:`gaussian_packet` arguments, or ``None`` (unit Gaussian at the
    grid centre, spin up).  With ``taper > 0`` the coefficients are damped by
    a raised cosine over that fraction of the interval at each edge, i.e.
    the state is ``f(h) envelope`` with ``f`` smooth and supported in the
    interval.  A sharp cut leaves slowly decaying spatial tails whenever the
    envelope has spectral weight at the edges.  The result carries the
    auto-tuned Lipschitz certificate in ``meta["certificate"]``.
    """
    lo, hi = interval
    idx = es.select(lo, hi)
    if idx.size < min_eigenvalues:
        raise SpectralError(
            f"only {idx.size} eigenvalues in [{lo}, {hi}]; at least {min_eigenvalues} are needed"
        )
    if envelope is None:
        g = es.grid
        center = 0.0 if g.geometry == "line" else 0.5 * g.walls[1]
        envelope = gaussian_packet(g, center=center, width=1.0)
    elif isinstance(envelope, dict):
        envelope = gaussian_packet(es.grid, **envelope)
    if not 0.0 <= taper <= 0.5:
        raise ValueError("taper must lie in [0, 1/2]")
    sub = es.subset(idx)
    c = sub.coefficients(envelope.amplitudes)
    if taper > 0:
        ramp = taper * (hi - lo)
        ev = sub.eigenvalues
        c = c * raised_cosine_ramp((ev - lo) / ramp) * raised_cosine_ramp((hi - ev) / ramp)
    amps = sub.synthesize(c)
    wp = WavePacket(amps, es.grid, dict(envelope.meta, window=(lo, hi), taper=taper))
    if wp.norm == 0:
        raise SpectralError("envelope has no overlap with the spectral window")
    if normalize:
        wp = wp.normalized()
    mu = spectral_measure(es, wp)
    _, _, cert = lipschitz_split(mu)
    wp.meta["certificate"] = cert
    wp.meta["envelope_overlap"] = float(abs(envelope.inner(wp)))
    return wp
