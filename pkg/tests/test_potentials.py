import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diracdyn.lattice import Grid
from diracdyn.potentials import (
    Box,
    Bump,
    DomainError,
    PotentialSpec,
    RaisedCosine,
    Tail,
    check_hypothesis,
    landau_gauge,
    linear_field_spec,
    raised_cosine_ramp,
    rotational_gauge,
    sample_potential,
    spec_from_dict,
)


def test_linear_tail_value():
    spec = PotentialSpec("line", v2=[Tail("linear", 1.0, r0=1.0, transition=0.5)])
    assert spec.V(np.array([2.0]))[0] == pytest.approx(2.0, abs=1e-14)


def test_tail_vanishes_inside_cutoff():
    t = Tail("linear", 1.0, r0=1.0, transition=0.5)
    x = np.linspace(-0.99, 0.99, 101)
    assert np.all(t(x) == 0.0)


def test_box_outside_support():
    spec = PotentialSpec("line", v1=[Box(0.5, 1.0, 3.0)])
    assert spec.V(np.array([10.0]))[0] == 0.0
    assert spec.V(np.array([0.5]))[0] == 3.0


def test_constant_ratio_sampled():
    v = Tail("linear", 1.0, r0=1.0, transition=0.5)
    a = Tail("linear", 0.5, r0=1.0, transition=0.5)
    spec = PotentialSpec("line", v2=[v], a2=[a])
    f = sample_potential(spec, Grid.line(400, 0.1))
    nz = f.V2 != 0
    assert np.allclose(f.A2[nz] / f.V2[nz], 0.5, rtol=0, atol=1e-14)


def test_sample_is_sum_of_parts():
    spec = PotentialSpec("line", v1=[Bump(0.0, 1.0, 2.0)], v2=[Tail("linear", 1.0, r0=2.0)],
                         a1=[RaisedCosine(1.0, 0.5)], a2=[Tail("linear", 0.3, r0=2.0)])
    g = Grid.line(300, 0.05)
    f = sample_potential(spec, g)
    assert np.allclose(f.V, spec.V1(g.x) + spec.V2(g.x))
    assert np.allclose(f.A, spec.A1(g.x) + spec.A2(g.x))


def test_sample_geometry_mismatch():
    with pytest.raises(DomainError):
        sample_potential(linear_field_spec("half-line"), Grid.line(10, 0.1))


def test_halfline_negative_x_rejected():
    with pytest.raises(DomainError):
        linear_field_spec("half-line").V(np.array([-1.0]))


def test_linear_field_passes_h1():
    rep = check_hypothesis(linear_field_spec("line"), "H1")
    assert rep.passed
    assert rep.ratio_sup == pytest.approx(0.5, abs=1e-12)
    assert rep.theta_max == pytest.approx(math.atanh(0.5), abs=1e-12)
    assert rep.theta_max == pytest.approx(0.549306, abs=1e-6)


def test_ratio_two_fails_condition_ii():
    spec = PotentialSpec(
        "line", v2=[Tail("linear", 1.0, r0=1.0, transition=0.5)], a2=[Tail("linear", 2.0, r0=1.0, transition=0.5)]
    )
    rep = check_hypothesis(spec, "H1")
    assert not rep.passed
    assert rep.ratio_sup == pytest.approx(2.0)
    assert any("ii" in m for m in rep.messages)


def test_magnetic_tail_without_electric_fails_support():
    spec = PotentialSpec(
        "line", v2=[Tail("linear", 1.0, r0=5.0, transition=0.5)], a2=[Tail("linear", 0.1, r0=1.0, transition=0.5)]
    )
    rep = check_hypothesis(spec, "H1")
    assert not rep.support_ok
    assert not rep.passed


def test_h1_and_h1prime_exclusive():
    for ratio in (0.3, 0.5, 2.0, 3.0):
        spec = PotentialSpec(
            "line",
            v2=[Tail("linear", 1.0, r0=1.0, transition=0.5)],
            a2=[Tail("linear", ratio, r0=1.0, transition=0.5)],
        )
        assert not (check_hypothesis(spec, "H1").passed and check_hypothesis(spec, "H1'").passed)


def test_h2_linear_field_halfline():
    rep = check_hypothesis(linear_field_spec("half-line"), "H2")
    assert rep.passed


def test_ramp_is_c1():
    s = np.linspace(-0.5, 1.5, 2001)
    r = raised_cosine_ramp(s)
    assert r[0] == 0.0 and r[-1] == 1.0
    d = np.gradient(r, s)
    assert np.max(np.abs(np.diff(d))) < 0.01


def test_landau_gauge_constant_field():
    g = Grid.line(101, 0.1)
    assert np.allclose(landau_gauge(1.0, g), g.x, atol=1e-12)


def test_landau_gauge_sine():
    g = Grid.line(201, 0.05)
    assert np.allclose(landau_gauge(np.sin, g), 1.0 - np.cos(g.x), atol=1e-12)


def test_landau_gauge_zero():
    g = Grid.line(50, 0.1)
    assert np.all(landau_gauge(0.0, g) == 0.0)


def test_rotational_gauge_cases():
    g = Grid.halfline(200, 0.05)
    assert np.allclose(rotational_gauge(2.0, g), g.x, atol=1e-12)
    assert np.all(rotational_gauge(0.0, g) == 0.0)
    assert np.allclose(rotational_gauge(lambda s: 1.0 / s, g), 1.0, atol=1e-12)


def test_rotational_gauge_singular_field():
    with pytest.raises(DomainError):
        rotational_gauge(lambda s: 1.0 / s**3, Grid.halfline(50, 0.1))


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_gauges_linear_in_field(a, b):
    lg = Grid.line(60, 0.1)
    hg = Grid.halfline(60, 0.1)
    f1 = lambda s: np.cos(s)
    f2 = lambda s: np.exp(-s**2)
    comb = lambda s: a * f1(s) + b * f2(s)
    assert np.allclose(landau_gauge(comb, lg), a * landau_gauge(f1, lg) + b * landau_gauge(f2, lg), atol=1e-11)
    assert np.allclose(
        rotational_gauge(comb, hg), a * rotational_gauge(f1, hg) + b * rotational_gauge(f2, hg), atol=1e-11
    )


def test_spec_from_dict_roundtrip():
    spec = spec_from_dict(
        {"geometry": "line", "v1": [{"kind": "bump", "center": 0.0, "width": 1.0}],
         "v2": [{"kind": "linear", "coef": 1.0, "r0": 1.0}]}
    )
    assert len(spec.v1) == 1 and len(spec.v2) == 1
    with pytest.raises(TypeError):
        spec_from_dict({"v1": [{"kind": "box", "center": 0.0, "widht": 1.0}]})
