"""Declarative electromagnetic potentials and the hypothesis checks.

A :class:`PotentialSpec` splits the electric potential ``V`` and the
magnetic potential ``A`` into a compactly supported part (``v1``, ``a1``)
and a smooth tail (``v2``, ``a2``) that vanishes identically near the
origin.  Every primitive carries its exact derivative, which is what makes
the boundedness of ``(A2/V2)'`` checkable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Bump",
    "Box",
    "RaisedCosine",
    "Tail",
    "PotentialSpec",
    "SampledFields",
    "HypothesisReport",
    "sample_potential",
    "check_hypothesis",
    "landau_gauge",
    "rotational_gauge",
    "raised_cosine_ramp",
    "boost_ratio",
    "linear_field_spec",
    "spec_from_dict",
    "parse_piece",
    "DomainError",
]

GEOMETRIES = ("line", "half-line")


class DomainError(ValueError):
    """Evaluation requested outside the declared geometry."""


# ---------------------------------------------------------------- ramps


def raised_cosine_ramp(s):
    """C^1 switch: 0 for s <= 0, 1 for s >= 1, (1 - cos(pi s))/2 between."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return 0.5 * (1.0 - np.cos(np.pi * s))


def _raised_cosine_ramp_deriv(s):
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    return np.where(inside, 0.5 * np.pi * np.sin(np.pi * np.clip(s, 0, 1)), 0.0)


# ---------------------------------------------------------------- compact pieces


@dataclass(frozen=True)
class Bump:
    """Smooth compactly supported bump ``amp * exp(1 - 1/(1 - u^2))``."""

    center: float
    width: float
    amplitude: float = 1.0

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("bump width must be positive")

    @property
    def radius(self) -> float:
        return abs(self.center) + self.width

    def __call__(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        inside = np.abs(u) < 1.0
        uu = np.where(inside, u, 0.0)
        return np.where(inside, self.amplitude * np.exp(1.0 - 1.0 / (1.0 - uu**2)), 0.0)

    def deriv(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        inside = np.abs(u) < 1.0
        uu = np.where(inside, u, 0.0)
        val = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - uu**2))
        return np.where(inside, val * (-2.0 * uu / (1.0 - uu**2) ** 2) / self.width, 0.0)


@dataclass(frozen=True)
class Box:
    """Indicator of ``[center - width, center + width]`` times ``amplitude``."""

    center: float
    width: float
    amplitude: float = 1.0

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("box width must be positive")

    @property
    def radius(self) -> float:
        return abs(self.center) + self.width

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x - self.center) <= self.width, self.amplitude, 0.0)

    def deriv(self, x):
        # distributional jumps at the edges are not part of the C^1 story
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class RaisedCosine:
    """``amp * (1 + cos(pi u)) / 2`` on ``|u| < 1``, ``u = (x - center)/width``."""

    center: float
    width: float
    amplitude: float = 1.0

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("raised-cosine width must be positive")

    @property
    def radius(self) -> float:
        return abs(self.center) + self.width

    def __call__(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        return np.where(np.abs(u) < 1.0, 0.5 * self.amplitude * (1.0 + np.cos(np.pi * u)), 0.0)

    def deriv(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        return np.where(
            np.abs(u) < 1.0, -0.5 * np.pi * self.amplitude * np.sin(np.pi * u) / self.width, 0.0
        )


COMPACT_KINDS = {"bump": Bump, "gaussian_bump": Bump, "box": Box, "raised_cosine": RaisedCosine}


# ---------------------------------------------------------------- tails

TAIL_KINDS = ("linear", "power", "constant", "logistic")


@dataclass(frozen=True)
class Tail:
    """Smooth tail profile switched on by a C^1 ramp.

    The profile ``f`` is one of

    * ``linear``:   ``coef * x``
    * ``power``:    ``coef * |x|**exponent``
    * ``constant``: ``coef``
    * ``logistic``: ``coef / (1 + exp(-(|x| - center)/scale))``

    and the tail is ``f(x) * ramp((|x| - r0)/transition)``, so it vanishes
    identically on ``|x| <= r0``.  ``side`` restricts a line tail to one
    half-axis.
    """

    kind: str
    coef: float = 1.0
    r0: float = 1.0
    transition: float = 0.5
    exponent: float = 1.0
    center: float = 0.0
    scale: float = 1.0
    side: str = "both"

    def __post_init__(self):
        if self.kind not in TAIL_KINDS:
            raise ValueError(f"unknown tail kind {self.kind!r}; expected one of {TAIL_KINDS}")
        if self.r0 <= 0:
            raise ValueError("tail cutoff r0 must be positive (tails vanish near the origin)")
        if self.transition <= 0:
            raise ValueError("tail transition width must be positive")
        if self.side not in ("both", "left", "right"):
            raise ValueError("side must be 'both', 'left' or 'right'")
        if self.kind == "logistic" and self.scale <= 0:
            raise ValueError("logistic scale must be positive")

    def _profile(self, x):
        ax = np.abs(x)
        if self.kind == "linear":
            return self.coef * x, np.full_like(x, self.coef)
        if self.kind == "power":
            f = self.coef * ax**self.exponent
            with np.errstate(divide="ignore", invalid="ignore"):
                df = np.where(ax > 0, self.coef * self.exponent * ax ** (self.exponent - 1), 0.0)
            return f, df * np.sign(x)
        if self.kind == "constant":
            return np.full_like(x, self.coef), np.zeros_like(x)
        z = np.exp(-(ax - self.center) / self.scale)
        f = self.coef / (1.0 + z)
        df = self.coef * z / (self.scale * (1.0 + z) ** 2)
        return f, df * np.sign(x)

    def _side_mask(self, x):
        if self.side == "right":
            return x > 0
        if self.side == "left":
            return x < 0
        return np.ones_like(x, dtype=bool)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        f, _ = self._profile(x)
        ramp = raised_cosine_ramp((np.abs(x) - self.r0) / self.transition)
        return np.where(self._side_mask(x), f * ramp, 0.0)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        f, df = self._profile(x)
        s = (np.abs(x) - self.r0) / self.transition
        ramp = raised_cosine_ramp(s)
        dramp = _raised_cosine_ramp_deriv(s) * np.sign(x) / self.transition
        return np.where(self._side_mask(x), df * ramp + f * dramp, 0.0)


# ---------------------------------------------------------------- spec


def _sum(pieces, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for p in pieces:
        out = out + p(x)
    return out


def _sum_deriv(pieces, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for p in pieces:
        out = out + p.deriv(x)
    return out


@dataclass(frozen=True)
class PotentialSpec:
    """Electric/magnetic potential data ``V = V1 + V2``, ``A = A1 + A2``."""

    geometry: str = "line"
    v1: tuple = ()
    a1: tuple = ()
    v2: tuple = ()
    a2: tuple = ()
    name: str = ""

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"geometry must be one of {GEOMETRIES}")
        for attr in ("v1", "a1", "v2", "a2"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))

    def _check_domain(self, x):
        x = np.asarray(x, dtype=float)
        if self.geometry == "half-line" and np.any(x < 0):
            raise DomainError("half-line potential evaluated at negative x")
        return x

    def V1(self, x):
        return _sum(self.v1, self._check_domain(x))

    def A1(self, x):
        return _sum(self.a1, self._check_domain(x))

    def V2(self, x):
        return _sum(self.v2, self._check_domain(x))

    def A2(self, x):
        return _sum(self.a2, self._check_domain(x))

    def V(self, x):
        return self.V1(x) + self.V2(x)

    def A(self, x):
        return self.A1(x) + self.A2(x)

    def dV2(self, x):
        return _sum_deriv(self.v2, self._check_domain(x))

    def dA2(self, x):
        return _sum_deriv(self.a2, self._check_domain(x))

    @property
    def compact_radius(self) -> float:
        """Radius containing the supports of all compact pieces."""
        return max([p.radius for p in self.v1 + self.a1], default=0.0)

    @property
    def tail_cutoff(self) -> float:
        return min([t.r0 for t in self.v2 + self.a2], default=math.inf)

    def audit_extent(self) -> float:
        """A default window for audits: well past every declared feature."""
        feats = [self.compact_radius]
        feats += [t.r0 + t.transition for t in self.v2 + self.a2]
        feats += [abs(t.center) + 10 * t.scale for t in self.v2 + self.a2 if t.kind == "logistic"]
        return 4.0 * max(max(feats), 1.0)


@dataclass
class SampledFields:
    x: np.ndarray
    V: np.ndarray
    A: np.ndarray
    V2: np.ndarray
    A2: np.ndarray

    def to_csv(self, path, meta=None):
        from .io import write_csv

        write_csv(
            path,
            ["x", "V", "A", "V2", "A2"],
            np.column_stack([self.x, self.V, self.A, self.V2, self.A2]),
            meta=meta,
        )


def sample_potential(spec: PotentialSpec, grid) -> SampledFields:
    """Sample the decomposition at the grid nodes."""
    if grid.geometry != spec.geometry:
        raise DomainError(
            f"grid geometry {grid.geometry!r} does not match potential geometry {spec.geometry!r}"
        )
    x = grid.x
    V1, V2 = spec.V1(x), spec.V2(x)
    A1, A2 = spec.A1(x), spec.A2(x)
    return SampledFields(x=x.copy(), V=V1 + V2, A=A1 + A2, V2=V2, A2=A2)


# ---------------------------------------------------------------- hypotheses


@dataclass
class HypothesisReport:
    hypothesis: str
    passed: bool
    ratio_sup: float
    deriv_sup: float
    support_ok: bool
    messages: list = field(default_factory=list)

    @property
    def theta_max(self) -> float:
        """Largest rapidity ``atanh(ratio_sup)`` (inf when the ratio reaches 1)."""
        return math.atanh(self.ratio_sup) if self.ratio_sup < 1 else math.inf


def _audit_grid(spec, extent, spacing):
    if spec.geometry == "line":
        m = int(math.ceil(extent / spacing))
        return np.arange(-m, m + 1) * spacing
    m = int(math.ceil(extent / spacing))
    return (np.arange(m) + 0.5) * spacing


def boost_ratio(spec: PotentialSpec, which: str, x):
    """Boost velocity field: ``A2/V2`` (H1, H2) or ``V2/A2`` (H1'), 0 off support.

    Returns ``(beta, dbeta, denom)`` sampled at ``x``.
    """
    x = np.asarray(x, dtype=float)
    if which == "H1'":
        num, den, dnum, dden = spec.V2(x), spec.A2(x), spec.dV2(x), spec.dA2(x)
    else:
        num, den, dnum, dden = spec.A2(x), spec.V2(x), spec.dA2(x), spec.dV2(x)
    on = den != 0.0
    safe = np.where(on, den, 1.0)
    beta = np.where(on, num / safe, 0.0)
    dbeta = np.where(on, (dnum * safe - num * dden) / safe**2, 0.0)
    return beta, dbeta, den


def check_hypothesis(
    spec: PotentialSpec,
    which: str = "H1",
    *,
    extent: float | None = None,
    spacing: float | None = None,
    grid=None,
    audit_factor: int = 10,
) -> HypothesisReport:
    """Audit the decomposition against (H1), (H2) or (H1').

    The sup-norm of the velocity ratio and of its derivative are taken on a
    dense audit grid: ``audit_factor`` times finer than ``grid`` when one is
    given, otherwise ``spacing`` (default 1e-3) over ``extent``.  A jump of
    the ratio between neighbouring audit points that its derivative cannot
    explain is reported as an unbounded derivative.
    """
    if which not in ("H1", "H2", "H1'"):
        raise ValueError("which must be 'H1', 'H2' or \"H1'\"")
    msgs: list[str] = []
    want_geom = "half-line" if which == "H2" else "line"
    if spec.geometry != want_geom:
        msgs.append(f"{which} is a {want_geom} hypothesis but the potential lives on the {spec.geometry}")

    if grid is not None:
        spacing = grid.dx / audit_factor
        extent = extent or grid.extent
    spacing = spacing or 1e-3
    extent = extent or spec.audit_extent()
    x = _audit_grid(spec, extent, spacing)

    main, other = ("A2", "V2") if which == "H1'" else ("V2", "A2")
    main_vals = getattr(spec, main)(x)
    other_vals = getattr(spec, other)(x)

    support_ok = True
    cut = min([t.r0 for t in getattr(spec, main.lower())], default=math.inf)
    near0 = np.abs(x) <= min(cut, extent)
    if not getattr(spec, main.lower()):
        support_ok = False
        msgs.append(f"condition i): {main} is identically zero, so it cannot carry supp({other})")
    elif np.any(main_vals[near0] != 0.0):
        support_ok = False
        msgs.append(f"condition i): {main} is not supported away from 0")
    stray = (other_vals != 0.0) & (main_vals == 0.0)
    if np.any(stray):
        support_ok = False
        xs = x[stray]
        msgs.append(
            f"condition i): supp({other}) is not contained in supp({main}) "
            f"(e.g. x = {xs[np.argmax(np.abs(other_vals[stray]))]:.6g})"
        )
    for piece in spec.v1 + spec.a1:
        pts = x[np.abs(x) > piece.radius]
        if pts.size and np.any(piece(pts) != 0.0):
            support_ok = False
            msgs.append(f"compact piece {piece} leaks outside its declared radius")

    beta, dbeta, den = boost_ratio(spec, which, x)
    on = den != 0.0
    ratio_sup = float(np.max(np.abs(beta[on]))) if np.any(on) else 0.0
    deriv_sup = float(np.max(np.abs(dbeta[on]))) if np.any(on) else 0.0
    if not np.isfinite(deriv_sup):
        deriv_sup = math.inf

    # jump detector: |beta(x_{i+1}) - beta(x_i)| must be explained by the derivative bound
    jumps = np.abs(np.diff(beta))
    allowed = 2.0 * deriv_sup * spacing + 1e-9
    if np.any(jumps > allowed):
        i = int(np.argmax(jumps - allowed))
        deriv_sup = math.inf
        msgs.append(
            f"condition iii): the ratio {'V2/A2' if which == chr(72) + '1' + chr(39) else 'A2/V2'} "
            f"jumps by {jumps[i]:.3g} near x = {x[i]:.6g}; its derivative is unbounded"
        )

    if ratio_sup >= 1.0:
        msgs.append(f"condition ii): sup|ratio| = {ratio_sup:.6g} is not < 1")
    if not math.isfinite(deriv_sup):
        if not any("iii)" in m for m in msgs):
            msgs.append("condition iii): derivative of the ratio is not finite on the audit grid")

    passed = support_ok and ratio_sup < 1.0 and math.isfinite(deriv_sup) and not any(
        "hypothesis but" in m for m in msgs
    )
    return HypothesisReport(
        hypothesis=which,
        passed=passed,
        ratio_sup=ratio_sup,
        deriv_sup=deriv_sup,
        support_ok=support_ok,
        messages=msgs,
    )


# ---------------------------------------------------------------- gauges

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def _integrate_intervals(f: Callable, a, b):
    """Gauss-Legendre integral of ``f`` over each ``[a_i, b_i]``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = np.asarray(f(pts), dtype=float)
    return (vals * _GL_W[None, :]).sum(axis=1) * half


def _running_integral(f, x):
    """``int_0^{x_i} f`` for sorted or unsorted nodes ``x``."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x)
    xs = x[order]
    out = np.zeros_like(xs)
    pos = xs >= 0
    if np.any(pos):
        p = xs[pos]
        left = np.concatenate([[0.0], p[:-1]])
        out[pos] = np.cumsum(_integrate_intervals(f, left, p))
    if np.any(~pos):
        n = xs[~pos][::-1]
        right = np.concatenate([[0.0], n[:-1]])
        out[~pos] = np.cumsum(_integrate_intervals(f, right, n))[::-1]
    res = np.empty_like(out)
    res[order] = out
    return res


def _as_callable(B, grid):
    if callable(B):
        return B
    B = np.asarray(B, dtype=float)
    if B.ndim == 0:
        return lambda s, b=float(B): np.full_like(np.asarray(s, dtype=float), b)
    xs = grid.x
    if B.shape != xs.shape:
        raise ValueError("sampled field must match the grid nodes")
    return lambda s: np.interp(s, xs, B)


def landau_gauge(B, grid) -> np.ndarray:
    """Landau-gauge potential ``A(x) = int_0^x B`` at the grid nodes.

    ``B`` may be a callable, a constant, or samples at the nodes (these are
    linearly interpolated).  Callables are integrated with 12-point
    Gauss-Legendre on each node interval, exact for polynomials of degree < 24.
    """
    return _running_integral(_as_callable(B, grid), grid.x)


def rotational_gauge(B, grid) -> np.ndarray:
    """Rotational-gauge radial potential ``A(r) = r^-1 int_0^r B(s) s ds``."""
    f = _as_callable(B, grid)
    r = np.asarray(grid.x, dtype=float)
    if np.any(r <= 0):
        raise DomainError("rotational gauge needs strictly positive radii")
    # s*B(s) must stay integrable at 0; a blow-up like 1/s signals B ~ 1/s^2 or worse
    probe = np.array([1e-4, 1e-6, 1e-8])
    with np.errstate(all="ignore"):
        sb = np.abs(probe * np.asarray(f(probe), dtype=float))
    if not np.all(np.isfinite(sb)) or (sb[2] > 10 * sb[0] and sb[2] > 1e3):
        raise DomainError("B(s)*s is not integrable at s = 0")
    integrand = lambda s: np.asarray(f(s), dtype=float) * s
    return _running_integral(integrand, r) / r


def parse_piece(d: dict):
    """Build a compact piece or tail from a plain mapping (config input)."""
    d = dict(d)
    kind = d.pop("kind")
    if kind in COMPACT_KINDS:
        return COMPACT_KINDS[kind](**d)
    return Tail(kind=kind, **d)


def spec_from_dict(d: dict) -> PotentialSpec:
    return PotentialSpec(
        geometry=d.get("geometry", "line"),
        v1=[parse_piece(p) for p in d.get("v1", [])],
        a1=[parse_piece(p) for p in d.get("a1", [])],
        v2=[parse_piece(p) for p in d.get("v2", [])],
        a2=[parse_piece(p) for p in d.get("a2", [])],
        name=d.get("name", ""),
    )


def linear_field_spec(geometry: str = "line", slope_v: float = 1.0, slope_a: float = 0.5):
    """``V = slope_v x`` and ``A = slope_a x`` tails (the H1/H2 workhorse).

    The magnetic tail switches on inside the fully developed electric tail so
    that ``A2/V2`` rises continuously from 0 to ``slope_a/slope_v``.
    """
    v2 = Tail("linear", coef=slope_v, r0=1.0, transition=1.0)
    a2 = Tail("linear", coef=slope_a, r0=2.0, transition=1.0) if slope_a else None
    return PotentialSpec(geometry=geometry, v2=[v2], a2=[a2] if a2 else [], name="linear-field")


def pieces_as_sequence(p) -> Sequence:
    return p if isinstance(p, (list, tuple)) else [p]
