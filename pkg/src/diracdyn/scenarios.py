"""Canonical packet set-ups shared by the CLI builtins and the acceptance suite.

Each builder assembles an operator, a windowed eigensystem and a certified,
energy-filtered packet, and records the horizon and Heisenberg time that
bound every admissible T grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dynamics import heisenberg_time
from .fibers2d import FiberFamily, fiber_rotation, fiber_translation, inverse_rotation, inverse_translation
from .lattice import DiracMatrix, EigenSystem, Grid, assemble_halfline, assemble_line, eigensystem
from .packets import WavePacket
from .potentials import PotentialSpec, linear_field_spec
from .spectral import ac_proxy_state

__all__ = [
    "PacketSetup",
    "packet_setup",
    "linear_field_line",
    "linear_field_halfline",
    "channel_spinor",
    "decade_below",
    "translation_family",
    "rotation_family",
    "FamilySetup",
    "TRANSLATION_LABELS",
    "ROTATION_LABELS",
    "FAMILY_WEIGHTS",
]

TRANSLATION_LABELS = (-0.5, -0.25, 0.0, 0.25, 0.5)
ROTATION_LABELS = (-1.5, -0.5, 0.5, 1.5, 2.5)
FAMILY_WEIGHTS = (0.1, 0.2, 0.4, 0.2, 0.1)


@dataclass
class PacketSetup:
    """Operator, eigensystem and certified packet for one fiber or channel."""

    H: DiracMatrix
    es: EigenSystem
    psi: WavePacket
    window: tuple
    horizon: float
    heisenberg_time: float
    label: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.H.grid

    @property
    def certificate(self):
        return self.psi.meta["certificate"]

    def t_limit(self) -> float:
        return min(self.horizon, self.heisenberg_time)


def decade_below(limit: float, count: int = 6) -> np.ndarray:
    """``count`` log-spaced times spanning the decade ``[limit/10, limit]``."""
    return np.geomspace(limit / 10.0, limit, count)


def packet_setup(
    H: DiracMatrix,
    window: tuple,
    envelope: dict,
    *,
    taper: float = 0.25,
    margin: float = 0.5,
    label: float = 0.0,
) -> PacketSetup:
    """Windowed eigensystem of ``H`` and the tapered projection of a Gaussian envelope."""
    lo, hi = window
    es = eigensystem(H, window=(lo - margin, hi + margin))
    psi = ac_proxy_state(es, (lo, hi), dict(envelope), taper=taper)
    return PacketSetup(
        H=H,
        es=es,
        psi=psi,
        window=(lo, hi),
        horizon=psi.horizon(),
        heisenberg_time=heisenberg_time(es, (lo, hi)),
        label=label,
        meta=dict(envelope=dict(envelope), taper=taper),
    )


def linear_field_line(
    xi: float = 0.0,
    *,
    n: int = 4096,
    extent: float = 42.0,
    window: tuple = (-6.0, 6.0),
    width: float = 0.7,
    taper: float = 0.25,
    spec: Optional[PotentialSpec] = None,
) -> PacketSetup:
    """Fiber ``h(xi)`` of ``V = x``, ``A = x/2`` on ``[-extent, extent]``, packet at the origin."""
    spec = spec or linear_field_spec("line")
    grid = Grid.line(n, 2.0 * extent / n)
    H = assemble_line(grid, spec.V, spec.A, xi=xi)
    env = dict(center=0.0, width=width, spinor="up")
    return packet_setup(H, window, env, taper=taper, label=xi)


def channel_spinor(k: float) -> str:
    """Spin-down for ``k > 0`` and spin-up for ``k < 0``.

    The two choices are exchanged by ``sigma_1 h_k sigma_1 = h_{-k}``.
    """
    return "down" if k > 0 else "up"


def linear_field_halfline(
    k: float = 0.5,
    *,
    n: int = 4096,
    extent: float = 64.0,
    window: tuple = (-10.0, 0.0),
    center: float = 1.0,
    width: float = 0.4,
    taper: float = 0.25,
    spinor: Optional[str] = None,
    spec: Optional[PotentialSpec] = None,
) -> PacketSetup:
    """Channel ``h_k`` of ``V = r``, ``A = r/2`` on ``(0, extent)``.

    The default window sits at negative energy.  At positive energy the
    region around ``r = E`` is classically forbidden for ``|k| > 1/2`` and
    traps narrow resonances between it and the centrifugal barrier; those
    carry point-like spectral weight and fail the Lipschitz certificate.
    """
    spec = spec or linear_field_spec("half-line")
    grid = Grid.halfline(n, extent / n)
    H = assemble_halfline(grid, spec.V, spec.A, k=k)
    env = dict(center=center, width=width, spinor=spinor or channel_spinor(k))
    return packet_setup(H, window, env, taper=taper, label=k)


@dataclass
class FamilySetup:
    """A two-dimensional state given by its fibers, with per-fiber set-ups."""

    family: FiberFamily
    setups: dict
    field2d: np.ndarray
    coordinates: tuple

    def t_limit(self) -> float:
        return min(s.t_limit() for s in self.setups.values())


def _scaled(psi: WavePacket, weight: float) -> WavePacket:
    return WavePacket(psi.amplitudes * math.sqrt(weight), psi.grid, dict(psi.meta))


def translation_family(
    labels: Sequence[float] = TRANSLATION_LABELS,
    weights: Sequence[float] = FAMILY_WEIGHTS,
    *,
    n2: int = 16,
    **line_kwargs,
) -> FamilySetup:
    """Landau-gauge 2D state whose ``x2`` Fourier fibers are the given packets.

    The ``x2`` period is ``2 pi / d xi`` so the labels sit on the dual grid;
    the 2D field is synthesized from the fibers and then decomposed again by
    :func:`fiber_translation`, so the returned family is the measured one.
    """
    labels = [float(l) for l in labels]
    steps = np.diff(sorted(labels))
    dxi = float(steps.min()) if steps.size else 1.0
    if not np.allclose(np.round(steps / dxi), steps / dxi):
        raise ValueError("translation labels must lie on a uniform dual grid")
    dx2 = 2.0 * math.pi / (n2 * dxi)
    x2 = (np.arange(n2) - n2 // 2) * dx2
    setups = {l: linear_field_line(l, **line_kwargs) for l in labels}
    grid = setups[labels[0]].grid
    seed = FiberFamily(
        "translation",
        np.array(labels),
        [_scaled(setups[l].psi, w) for l, w in zip(labels, weights)],
        np.array(weights, dtype=float),
        float(sum(weights)),
        grid,
        {"x2": x2, "dxi": dxi},
    )
    field2d = inverse_translation(seed)
    family = fiber_translation(field2d, grid, x2)
    return FamilySetup(family, setups, field2d, (grid.x, x2))


def rotation_family(
    labels: Sequence[float] = ROTATION_LABELS,
    weights: Sequence[float] = FAMILY_WEIGHTS,
    *,
    n_phi: int = 16,
    **halfline_kwargs,
) -> FamilySetup:
    """Rotationally symmetric 2D state whose angular channels are the given packets."""
    labels = [float(l) for l in labels]
    setups = {l: linear_field_halfline(l, **halfline_kwargs) for l in labels}
    grid = setups[labels[0]].grid
    seed = FiberFamily(
        "rotation",
        np.array(labels),
        [_scaled(setups[l].psi, w) for l, w in zip(labels, weights)],
        np.array(weights, dtype=float),
        float(sum(weights)),
        grid,
        {"n_phi": n_phi},
    )
    field2d = inverse_rotation(seed)
    family = fiber_rotation(field2d, grid, labels)
    return FamilySetup(family, setups, field2d, (grid.x, 2.0 * math.pi * np.arange(n_phi) / n_phi))
