"""Acceptance suite shared by ``dirac accept`` and ``tests/test_acceptance.py``.

Every criterion is a function returning a :class:`CriterionResult`.  The
checks are stated exactly as targeted; a criterion that the numerics do not
meet is reported as failed, never relaxed.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

from .dynamics import (
    ballistic_fit,
    causality_check,
    evolve,
    free_cesaro_closed_form,
    cesaro_moment,
    last_inequality_check,
)
from .fibers2d import WeightCutError, aggregate_lower_bound
from .lattice import Grid, assemble_halfline, assemble_line, eigensystem, spectral_projector
from .packets import WavePacket
from .potentials import PotentialSpec, Tail, check_hypothesis, linear_field_spec
from .resolvent_hs import (
    anchored_windows,
    centered_windows,
    hs_scan,
    hs_window,
    kernel_check,
)
from .scenarios import (
    decade_below,
    linear_field_halfline,
    linear_field_line,
    rotation_family,
    translation_family,
)
from .spectral import ac_proxy_state, lipschitz_split, spectral_measure, split_state
from .transforms import (
    assemble_boosted,
    assemble_original,
    boost_fields,
    gauge_covariance_residual,
    verify_resolvent_identity,
)

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_suite", "format_line", "RUNTIME_BUDGET"]

RUNTIME_BUDGET = 15 * 60.0

# exact integral of the distance-decay term alone over I = (1, 2)
HALFLINE_HS2_TARGET = 1.0 - (math.exp(-2.0) - math.exp(-4.0)) / 4.0


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    values: dict = field(default_factory=dict)
    seconds: float = 0.0


def format_line(r: CriterionResult) -> str:
    status = "PASS" if r.passed else "FAIL"
    return f"{status} [{r.number:2d}] {r.title}: {r.summary} ({r.seconds:.1f} s)"


def _orders(errors: Iterable[float]) -> np.ndarray:
    e = np.asarray(list(errors), dtype=float)
    return np.log2(e[:-1] / e[1:])


# ---------------------------------------------------------------- 1


def criterion_1() -> CriterionResult:
    spacings = (0.01, 0.005, 0.0025)
    errs = [kernel_check(dx).max_abs_error for dx in spacings]
    at_target = errs[1]
    ratios = [errs[i + 1] / errs[i] for i in range(len(errs) - 1)]
    ok = at_target <= 0.02 and all(r <= 0.5 for r in ratios)
    return CriterionResult(
        1,
        "free half-line kernel",
        ok,
        f"max error {at_target:.3g} at dx=0.005 (limit 0.02); error ratios under halving "
        + ", ".join(f"{r:.3f}" for r in ratios)
        + " (limit 0.5)",
        {"errors": errs, "spacings": spacings, "ratios": ratios},
    )


# ---------------------------------------------------------------- 2


def criterion_2() -> CriterionResult:
    n = 4096
    half = assemble_halfline(Grid.halfline(n, 32.0 / n), k=0.0, alpha=0.0)
    hs2 = hs_window(half, (1.0, 2.0)) ** 2
    rel_half = hs2 / HALFLINE_HS2_TARGET - 1.0
    half_ok = abs(rel_half) <= 0.03

    line = assemble_line(Grid.line(n, 64.0 / n))
    lengths = (0.5, 1.0, 2.0, 4.0, 8.0)
    vals = np.array([hs_window(line, w) for w in centered_windows(lengths)])
    rel_line = vals / np.sqrt(lengths) - 1.0
    line_ok = bool(np.all(np.abs(rel_line) <= 0.03))
    # the 1/sqrt(2) prefactor claimed for the free line is not supported by the kernel oracle
    prefactor = float(np.mean(vals / np.sqrt(lengths)))
    return CriterionResult(
        2,
        "HS closed forms",
        half_ok and line_ok,
        f"half-line hs(1,2)^2 = {hs2:.6f} vs target {HALFLINE_HS2_TARGET:.6f} ({100 * rel_half:+.2f}%, "
        f"limit 3%); free line hs/sqrt|I| deviations "
        + ", ".join(f"{100 * r:+.2f}%" for r in rel_line)
        + f"; measured prefactor {prefactor:.4f}, 1/sqrt(2) prefactor unconfirmed",
        {
            "halfline_hs2": hs2,
            "halfline_rel": rel_half,
            "halfline_ok": half_ok,
            "line_values": vals.tolist(),
            "line_rel": rel_line.tolist(),
            "line_ok": line_ok,
            "prefactor": prefactor,
        },
    )


# ---------------------------------------------------------------- 3


def criterion_3() -> CriterionResult:
    n, L = 4096, 32.0
    lengths = (0.5, 1.0, 2.0, 4.0, 8.0)
    spec_l = linear_field_spec("line")
    spec_h = linear_field_spec("half-line")
    h1_line = check_hypothesis(spec_l, "H1").passed
    h2_half = check_hypothesis(spec_h, "H2").passed
    line = hs_scan(assemble_line(Grid.line(n, L / n), spec_l.V, spec_l.A), centered_windows(lengths))
    half = hs_scan(
        assemble_halfline(Grid.halfline(n, L / n), spec_h.V, spec_h.A, k=0.5), anchored_windows(lengths)
    )
    scans = {"line": line, "half-line": half}
    ok = h1_line and h2_half
    parts = []
    for name, s in scans.items():
        good = abs(s.fit_exponent - 0.5) <= 0.05 and s.constant_spread <= 1.3
        ok = ok and good
        parts.append(f"{name} exponent {s.fit_exponent:.4f}, constant max/min {s.constant_spread:.3f}")
    return CriterionResult(
        3,
        "HS scaling",
        ok,
        "; ".join(parts) + f"; H1 passed (line) {h1_line}, H2 passed (half-line) {h2_half}",
        {k: (s.fit_exponent, s.constant_spread) for k, s in scans.items()},
    )


# ---------------------------------------------------------------- 4


def gauge_test_potential(x):
    return 1.5 * (1.0 - 2.0 * x**2) * np.exp(-(x**2))


def criterion_4() -> CriterionResult:
    spacings = (0.1, 0.05, 0.025, 0.0125)
    res = [gauge_covariance_residual(gauge_test_potential, Grid.covering("line", 8.0, dx)) for dx in spacings]
    orders = _orders(res)
    ok = bool(np.all(orders >= 1.8))
    return CriterionResult(
        4,
        "gauge covariance",
        ok,
        "residuals " + ", ".join(f"{r:.3g}" for r in res) + "; orders " + ", ".join(f"{o:.3f}" for o in orders)
        + " (limit 1.8)",
        {"residuals": res, "orders": orders.tolist()},
    )


# ---------------------------------------------------------------- 5


def criterion_5() -> CriterionResult:
    spec = linear_field_spec("line")
    spacings = (0.1, 0.05, 0.025, 0.0125)
    r1, slack = [], []
    for dx in spacings:
        g = Grid.covering("line", 16.0, dx)
        bd = boost_fields(spec, g)
        rep = verify_resolvent_identity(assemble_original(spec, g), assemble_boosted(spec, g, bd), bd)
        r1.append(rep.r1)
        slack.append(rep.bound_slack)
    orders = _orders(r1)
    flat = PotentialSpec("line", v2=[Tail("linear", 1.0, r0=1.0, transition=1.0)])
    g = Grid.covering("line", 16.0, 0.05)
    bd = boost_fields(flat, g)
    r_zero = verify_resolvent_identity(assemble_original(flat, g), assemble_boosted(flat, g, bd), bd).r1
    ok = bool(np.all(orders >= 0.9)) and all(s >= 0 for s in slack) and r_zero <= 1e-10
    return CriterionResult(
        5,
        "boost resolvent identity",
        ok,
        "r1 " + ", ".join(f"{r:.3g}" for r in r1) + "; orders " + ", ".join(f"{o:.3f}" for o in orders)
        + f" (limit 0.9); norm bound slack min {min(slack):.3g}; theta=0 r1 {r_zero:.2g}",
        {"r1": r1, "orders": orders.tolist(), "slack": slack, "r1_theta_zero": r_zero},
    )


# ---------------------------------------------------------------- 6


def free_packet_setup():
    g = Grid.line(4000, 0.02)
    es = eigensystem(assemble_line(g), window=(-12.5, 12.5))
    psi = ac_proxy_state(es, (-12.0, 12.0), dict(center=2.0, width=1.5, spinor="chiral+"))
    return es, psi


def criterion_6() -> CriterionResult:
    es, psi = free_packet_setup()
    h = psi.horizon()
    Ts = np.linspace(h / 10.0, h / 2.0, 5)
    rel = []
    for T in Ts:
        val = cesaro_moment(es, psi, 2, T, horizon=h)
        ref = free_cesaro_closed_form(psi, T)
        rel.append(abs(val / ref - 1.0))
    worst = max(rel)
    return CriterionResult(
        6,
        "free ballistic closed form",
        worst <= 0.02,
        f"max relative deviation {worst:.3g} over T in [{Ts[0]:.2f}, {Ts[-1]:.2f}] (half horizon {h / 2:.2f}; limit 2%)",
        {"T": Ts.tolist(), "rel": rel, "horizon": h},
    )


# ---------------------------------------------------------------- 7


def _ballistic_block(setup, name):
    T = decade_below(setup.t_limit())
    out, ok = [], bool(setup.certificate.passed)
    for p in (1, 2):
        fit = ballistic_fit(setup.es, setup.psi, p, T, horizon=setup.horizon)
        caus = causality_check(
            setup.es, setup.psi, p, np.linspace(0.0, setup.horizon, 41), horizon=setup.horizon
        )
        ok = ok and fit.within(0.1) and caus.passed
        out.append(f"{name} p={p} exponent {fit.fitted_exponent:.3f}, causality max ratio {caus.ratios.max():.3f}")
    out.append(f"{name} T in [{T[0]:.2f}, {T[-1]:.2f}], Heisenberg time {setup.heisenberg_time:.1f}")
    return ok, out


def criterion_7() -> CriterionResult:
    ok1, s1 = _ballistic_block(linear_field_line(), "line")
    ok2, s2 = _ballistic_block(linear_field_halfline(), "half-line k=1/2")
    return CriterionResult(7, "ballistic exponents", ok1 and ok2, "; ".join(s1 + s2), {})


# ---------------------------------------------------------------- 8


def criterion_8() -> CriterionResult:
    parts, ok = [], True
    for name, setup, window in (
        ("line", linear_field_line(), (-2.0, 2.0)),
        ("half-line", linear_field_halfline(), (1.0, 5.0)),
    ):
        T = np.geomspace(setup.t_limit() / 10.0, setup.t_limit(), 8)
        rep = last_inequality_check(setup.es, setup.psi, window, T, horizon=setup.horizon)
        ok = ok and rep.passed
        parts.append(f"{name} I={window} max/median {rep.max_over_median:.4f}")
    # an eigenvector carries a point measure and must be rejected
    setup = linear_field_line()
    mid = len(setup.es) // 2
    vec = WavePacket(setup.es.synthesize(np.eye(len(setup.es))[:, mid]), setup.grid).normalized()
    T = np.geomspace(setup.t_limit() / 10.0, setup.t_limit(), 8)
    eig = last_inequality_check(setup.es, vec, (-2.0, 2.0), T)
    rejected = not eig.lipschitz_ok
    ok = ok and rejected
    parts.append(f"eigenvector rejected={rejected}")
    return CriterionResult(8, "last inequality window", ok, "; ".join(parts) + " (limit 1.5)", {})


# ---------------------------------------------------------------- 9


def split_identities(es, psi) -> dict:
    mu = spectral_measure(es, psi)
    mu1, mu2, cert = lipschitz_split(mu)
    psi1, psi2 = split_state(es, psi, mu1)
    total = psi.norm2
    m1 = spectral_measure(es, psi1, bins=mu.bin_edges) if psi1.norm2 > 0 else None
    return {
        "mu2": float(mu2.total),
        "quarter": mu2.total < total / 4.0,
        "psi1_fraction": psi1.norm2 / total,
        "partition_defect": float(np.max(np.abs(mu1.masses + mu2.masses - mu.masses))),
        "cross": abs(psi1.inner(psi2)),
        "pythagoras": abs(psi1.norm2 + psi2.norm2 - total),
        "psi1_measure_defect": float(np.max(np.abs(m1.masses - mu1.masses))) if m1 else 0.0,
    }


def criterion_9() -> CriterionResult:
    parts, ok = [], True
    for name, setup in (("line", linear_field_line()), ("half-line", linear_field_halfline())):
        d = split_identities(setup.es, setup.psi)
        good = (
            d["quarter"]
            and d["psi1_fraction"] >= 0.75
            and d["partition_defect"] == 0.0
            and d["cross"] <= 1e-10
            and d["pythagoras"] <= 1e-10
            and d["psi1_measure_defect"] <= 1e-10
        )
        ok = ok and good
        parts.append(
            f"{name} mu2 {d['mu2']:.4f} (< 0.25), |psi1|^2 {d['psi1_fraction']:.4f}, "
            f"partition defect {d['partition_defect']:.1g}, <psi1,psi2> {d['cross']:.1g}"
        )
    return CriterionResult(9, "spectral split", ok, "; ".join(parts), {})


# ---------------------------------------------------------------- 10


def _family_block(fam, name):
    family = fam.family
    limit = fam.t_limit()
    T = decade_below(limit)
    ok = family.weight_defect <= 1e-6 * family.total
    parts = [f"{name} weight defect {family.weight_defect:.2g}"]
    for p in (1, 2):
        reports = {
            l: ballistic_fit(s.es, family.state(l), p, T, horizon=limit) for l, s in fam.setups.items()
        }
        agg = aggregate_lower_bound(family, reports, p)
        ok = ok and agg.within(0.1)
        parts.append(f"p={p} aggregated exponent {agg.fitted_exponent:.3f}")
    weight = dict(zip(family.labels.tolist(), family.weights.tolist()))
    light = [min(reports, key=lambda l: weight[l])]
    try:
        aggregate_lower_bound(family, {light[0]: reports[light[0]]}, 2, labels=light)
        cut = False
    except WeightCutError:
        cut = True
    ok = ok and cut
    parts.append(f"half-weight cut enforced={cut}")
    return ok, parts


def criterion_10() -> CriterionResult:
    ok1, s1 = _family_block(translation_family(), "translation")
    ok2, s2 = _family_block(rotation_family(), "rotation")
    return CriterionResult(10, "2D aggregation", ok1 and ok2, "; ".join(s1 + s2), {})


# ---------------------------------------------------------------- 11


def invariant_suite() -> Dict[str, bool]:
    """Hermiticity, unitarity, projector idempotence, Parseval and HS window identities."""
    checks: Dict[str, bool] = {}
    spec_l = linear_field_spec("line")
    spec_h = linear_field_spec("half-line")
    mats = [
        assemble_line(Grid.line(200, 0.1), spec_l.V, spec_l.A, xi=0.3, m=0.5),
        assemble_line(Grid.line(200, 0.1, periodic=True), lambda x: np.cos(x)),
        assemble_halfline(Grid.halfline(200, 0.1), spec_h.V, spec_h.A, k=1.5, m=0.2),
        assemble_halfline(Grid.halfline(200, 0.1), k=0.0, alpha=0.3),
    ]
    checks["hermiticity"] = all(H.hermiticity_defect() == 0.0 for H in mats)

    H = mats[0]
    es = eigensystem(H)
    psi = WavePacket(np.exp(-((np.repeat(H.grid.x, 2) - 1.0) ** 2)) + 0j, H.grid).normalized()
    checks["unitarity"] = all(abs(evolve(es, psi, t).norm - psi.norm) <= 1e-10 for t in (0.5, 3.0, 40.0))

    P = spectral_projector(es, (-2.0, 2.0))
    checks["projector idempotence"] = (
        np.abs(P @ P - P).max() <= 1e-10 and np.abs(P - P.conj().T).max() <= 1e-10
    )

    mu = spectral_measure(es, psi)
    fam = translation_family(n=512, extent=12.0, window=(-4.0, 4.0), width=1.0)
    field_norm2 = fam.family.total
    checks["Parseval"] = (
        abs(mu.total - psi.norm2) <= 1e-10 and abs(fam.family.weights.sum() - field_norm2) <= 1e-8 * field_norm2
    )

    free = assemble_line(Grid.line(800, 0.05))
    a = hs_window(free, (-2.0, 0.0))
    b = hs_window(free, (0.0, 3.0))
    ab = hs_window(free, (-2.0, 3.0))
    inner = hs_window(free, (-1.0, 0.0))
    checks["HS additivity"] = abs(ab**2 - a**2 - b**2) <= 1e-10 * ab**2
    checks["HS monotonicity"] = inner <= a <= ab
    return checks


def criterion_11(elapsed: Optional[float] = None) -> CriterionResult:
    checks = invariant_suite()
    ok = all(checks.values())
    summary = ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items())
    if elapsed is not None:
        ok = ok and elapsed <= RUNTIME_BUDGET
        summary += f"; suite runtime {elapsed:.0f} s (limit {RUNTIME_BUDGET:.0f} s)"
    return CriterionResult(11, "invariant suite", ok, summary, checks)


CRITERIA: Dict[int, Callable[[], CriterionResult]] = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
}


def run_criterion(number: int, **kwargs) -> CriterionResult:
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        try:
            res = CRITERIA[number](**kwargs)
        except Exception as exc:  # a crash is a failed criterion, reported with its cause
            res = CriterionResult(number, f"criterion {number}", False, f"error: {type(exc).__name__}: {exc}")
    res.seconds = time.perf_counter() - t0
    return res


def run_suite(numbers: Optional[Iterable[int]] = None, echo: Optional[Callable[[str], None]] = None) -> List[CriterionResult]:
    """Run the selected criteria in order; criterion 11 also checks the total runtime."""
    numbers = sorted(set(numbers)) if numbers is not None else sorted(CRITERIA)
    t0 = time.perf_counter()
    results = []
    for k in numbers:
        if k == 11:
            r = run_criterion(11, elapsed=None)
            total = time.perf_counter() - t0
            if numbers == sorted(CRITERIA):
                r = _with_runtime(r, total)
        else:
            r = run_criterion(k)
        results.append(r)
        if echo:
            echo(format_line(r))
    return results


def _with_runtime(r: CriterionResult, total: float) -> CriterionResult:
    ok = r.passed and total <= RUNTIME_BUDGET
    return CriterionResult(
        r.number,
        r.title,
        ok,
        r.summary + f"; suite runtime {total:.0f} s (limit {RUNTIME_BUDGET:.0f} s)",
        dict(r.values, runtime=total),
        r.seconds,
    )
