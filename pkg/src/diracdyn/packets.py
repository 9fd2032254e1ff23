"""Spinor wave packets on a lattice grid."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import Grid

__all__ = ["WavePacket", "gaussian_packet", "spinor_from_name", "SUPPORT_TOL"]

# Relative tail mass outside the effective support.  Energy-filtered packets
# have slowly decaying tails over the whole box, so a vanishing tolerance
# would make every packet touch the walls at t = 0.
SUPPORT_TOL = 1e-6

_SPINORS = {
    "up": (1.0, 0.0),
    "down": (0.0, 1.0),
    "chiral+": (1 / math.sqrt(2), 1 / math.sqrt(2)),
    "chiral-": (1 / math.sqrt(2), -1 / math.sqrt(2)),
}


def spinor_from_name(s) -> np.ndarray:
    if isinstance(s, str):
        if s not in _SPINORS:
            raise ValueError(f"unknown spinor {s!r}; expected one of {sorted(_SPINORS)}")
        return np.array(_SPINORS[s], dtype=complex)
    v = np.asarray(s, dtype=complex)
    if v.shape != (2,):
        raise ValueError("spinor must have two components")
    return v / np.linalg.norm(v)


@dataclass
class WavePacket:
    """Interleaved spinor amplitudes with the ``L^2(dx)`` norm.

    ``norm`` is ``sqrt(dx sum |a|^2)``, the continuum norm of the sampled
    spinor field.
    """

    amplitudes: np.ndarray
    grid: Grid
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} amplitudes, got {self.amplitudes.shape}")
        self.norm = self._norm()

    def _norm(self) -> float:
        return math.sqrt(self.grid.dx * float(np.vdot(self.amplitudes, self.amplitudes).real))

    @property
    def norm2(self) -> float:
        return self.norm**2

    def check_norm(self, tol: float = 1e-12) -> bool:
        return abs(self._norm() - self.norm) <= tol * max(1.0, self.norm)

    @property
    def upper(self) -> np.ndarray:
        return self.amplitudes[0::2]

    @property
    def lower(self) -> np.ndarray:
        return self.amplitudes[1::2]

    def density(self) -> np.ndarray:
        """Probability density per node, ``|psi_1|^2 + |psi_2|^2``."""
        a = self.amplitudes
        return np.abs(a[0::2]) ** 2 + np.abs(a[1::2]) ** 2

    def normalized(self) -> "WavePacket":
        return WavePacket(self.amplitudes / self.norm, self.grid, dict(self.meta))

    def inner(self, other: "WavePacket") -> complex:
        return self.grid.dx * complex(np.vdot(self.amplitudes, other.amplitudes))

    def support_radius(self, tol: float = SUPPORT_TOL) -> float:
        """Smallest ``r`` with mass outside ``|x| <= r`` below ``tol * ||psi||^2``."""
        x = np.abs(self.grid.x)
        order = np.argsort(x)
        dens = self.density()[order] * self.grid.dx
        outside = dens.sum() - np.cumsum(dens)
        idx = np.nonzero(outside <= tol * self.norm2)[0]
        return float(x[order][idx[0]]) if idx.size else float(x.max())

    def support_interval(self, tol: float = SUPPORT_TOL) -> tuple:
        """Smallest node interval carrying all but ``tol`` of the mass (split evenly)."""
        dens = self.density() * self.grid.dx
        c = np.cumsum(dens) / dens.sum()
        lo = int(np.searchsorted(c, 0.5 * tol))
        hi = int(np.searchsorted(c, 1.0 - 0.5 * tol))
        x = self.grid.x
        return float(x[max(lo, 0)]), float(x[min(hi, x.size - 1)])

    def horizon(self, tol: float = SUPPORT_TOL, speed: float = 1.0) -> float:
        """Time before the effective support can reach a hard wall of the box.

        On the half-line the origin is a genuine boundary of the operator, so
        only the outer wall counts.
        """
        lo, hi = self.support_interval(tol)
        wl, wr = self.grid.walls
        if self.grid.geometry == "half-line":
            return float((wr - hi) / speed)
        return float(min(lo - wl, wr - hi) / speed)


def gaussian_packet(
    grid: Grid, center: float = 0.0, width: float = 1.0, spinor="up", momentum: float = 0.0
) -> WavePacket:
    """``spinor * exp(-(x - c)^2/(2 w^2) + i k x)`` sampled at the nodes, unit norm."""
    x = grid.x
    env = np.exp(-((x - center) ** 2) / (2.0 * width**2) + 1j * momentum * x)
    s = spinor_from_name(spinor)
    amps = np.empty(grid.size, dtype=complex)
    amps[0::2] = s[0] * env
    amps[1::2] = s[1] * env
    wp = WavePacket(amps, grid, {"center": center, "width": width, "momentum": momentum})
    return wp.normalized()
