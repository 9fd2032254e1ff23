import math

import numpy as np
import pytest

from diracdyn.lattice import Grid, assemble_halfline, assemble_line
from diracdyn.potentials import PotentialSpec, Tail, linear_field_spec
from diracdyn.transforms import (
    BoostRefusal,
    assemble_boosted,
    assemble_original,
    boost_fields,
    gauge_covariance_residual,
    gauge_unitary,
    lorentz_free_defect,
    verify_resolvent_identity,
)


def _blocks(U, n):
    d = U.toarray() if hasattr(U, "toarray") else U
    return np.array([d[2 * j:2 * j + 2, 2 * j:2 * j + 2] for j in range(n)])


def test_gauge_unitary_zero_field():
    g = Grid.line(20, 0.1)
    U = gauge_unitary(None, g)
    assert np.abs(U.toarray() - np.eye(g.size)).max() == 0.0


def test_gauge_unitary_constant_field():
    g = Grid.line(30, 0.2)
    b = _blocks(gauge_unitary(1.0, g), g.n)
    s1 = np.array([[0, 1], [1, 0]])
    expect = np.cos(g.x)[:, None, None] * np.eye(2) + 1j * np.sin(g.x)[:, None, None] * s1
    assert np.abs(b - expect).max() <= 1e-14


@pytest.mark.parametrize("method", ["blocks", "symmetric"])
def test_gauge_unitary_is_unitary(method):
    g = Grid.line(80, 0.1)
    U = gauge_unitary(lambda x: 1 + np.tanh(x), g, method=method)
    U = U.toarray() if hasattr(U, "toarray") else U
    assert np.abs(U.conj().T @ U - np.eye(g.size)).max() <= 1e-12


def test_gauge_covariance_second_order():
    # phase 2 x^2 exp(-x^2) vanishes at both walls, where the lattice unitary must act trivially
    V = lambda x: 4.0 * x * (1.0 - x**2) * np.exp(-(x**2))
    res = [gauge_covariance_residual(V, Grid.covering("line", 8.0, dx)) for dx in (0.1, 0.05, 0.025)]
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all(orders >= 1.8)


def test_gauge_covariance_sees_walls():
    # a phase left over at the hard walls mixes the components there
    V = lambda x: 2.0 * np.exp(-(x**2))
    res = [gauge_covariance_residual(V, Grid.covering("line", 6.0, dx)) for dx in (0.1, 0.05)]
    assert res[1] > 0.5 * res[0] > 0.05


def _const_ratio_spec(ratio=0.5):
    return PotentialSpec(
        "line",
        v2=[Tail("linear", 1.0, r0=1.0, transition=0.5)],
        a2=[Tail("linear", ratio, r0=1.0, transition=0.5)] if ratio else [],
    )


def test_no_magnetic_tail_gives_identity_boost():
    spec = _const_ratio_spec(0.0)
    g = Grid.line(100, 0.1)
    bd = boost_fields(spec, g)
    assert np.all(bd.theta == 0) and np.all(bd.gamma == 1)
    assert np.abs(bd.M - np.eye(2)).max() == 0.0
    a = assemble_boosted(spec, g, bd).dense()
    b = assemble_original(spec, g).dense()
    assert np.abs(a - b).max() == 0.0


def test_constant_ratio_fields():
    spec = linear_field_spec("line")
    g = Grid.line(400, 0.1)
    bd = boost_fields(spec, g)
    tail = np.abs(g.x) > 3.5
    assert np.allclose(bd.gamma[tail], 1 / math.sqrt(0.75), atol=1e-12)
    assert bd.gamma[tail][0] == pytest.approx(1.154701, abs=1e-6)
    assert np.abs(bd.theta_prime[tail]).max() <= 1e-12
    d = bd.invariant_defects()
    assert max(d.values()) <= 1e-12


def test_boosted_potential_on_tail():
    # A1 = V1 = 0 and beta = 1/2 on the whole tail: the boosted potential is V sqrt(3/4)
    spec = PotentialSpec(
        "line", v2=[Tail("linear", 1.0, r0=1.0, transition=0.5)], a2=[Tail("linear", 0.5, r0=1.0, transition=0.5)]
    )
    g = Grid.line(200, 0.1)
    # beta jumps at the tail onset, which the audit rightly refuses; this checks the algebra only
    bd = boost_fields(spec, g, audit=False)
    Ht = assemble_boosted(spec, g, bd)
    H0 = assemble_line(g)
    diff = Ht.dense() - H0.dense()
    pos = Ht.component_positions()
    far = np.abs(pos) > 2.5
    onsite = np.real(np.diag(diff))[far]
    assert np.allclose(onsite, spec.V(pos[far]) * math.sqrt(0.75), atol=1e-12)


def test_h1prime_magnetic_term():
    spec = PotentialSpec(
        "line", v2=[Tail("linear", 0.5, r0=1.0, transition=0.5)], a2=[Tail("linear", 1.0, r0=1.0, transition=0.5)]
    )
    g = Grid.line(200, 0.1)
    bd = boost_fields(spec, g, "H1'", audit=False)
    tail = np.abs(g.x) > 2.5
    assert np.allclose(1 / bd.gamma[tail], math.sqrt(0.75), atol=1e-12)
    Hh = assemble_boosted(spec, g, bd)
    scaled = PotentialSpec("line", a2=[Tail("linear", math.sqrt(0.75), r0=1.0, transition=0.5)])
    ref = assemble_line(g, None, scaled.A)
    pos = Hh.component_positions()
    far = np.abs(pos) > 2.5
    rows = np.nonzero(far)[0]
    assert np.abs(Hh.dense()[rows][:, rows] - ref.dense()[rows][:, rows]).max() <= 1e-10


def test_boost_refused_above_one():
    with pytest.raises(BoostRefusal):
        boost_fields(_const_ratio_spec(2.0), Grid.line(50, 0.1))


def test_resolvent_identity_theta_zero():
    spec = _const_ratio_spec(0.0)
    g = Grid.covering("line", 8.0, 0.1)
    bd = boost_fields(spec, g)
    rep = verify_resolvent_identity(assemble_original(spec, g), assemble_boosted(spec, g, bd), bd)
    assert rep.r1 <= 1e-10


def test_resolvent_identity_refines_and_bound_holds():
    spec = linear_field_spec("line")
    r1 = []
    for dx in (0.1, 0.05, 0.025):
        g = Grid.covering("line", 12.0, dx)
        bd = boost_fields(spec, g)
        rep = verify_resolvent_identity(assemble_original(spec, g), assemble_boosted(spec, g, bd), bd)
        assert rep.bound_holds
        assert rep.bound_factor == pytest.approx(math.exp(math.atanh(0.5)), rel=1e-9)
        r1.append(rep.r1)
    assert r1[0] > r1[1] > r1[2]


def test_halfline_boost_identity():
    spec = linear_field_spec("half-line")
    g = Grid.covering("half-line", 12.0, 0.05)
    bd = boost_fields(spec, g, "H2")
    rep = verify_resolvent_identity(
        assemble_original(spec, g, k=0.5), assemble_boosted(spec, g, bd, k=0.5), bd
    )
    assert rep.bound_holds and rep.r1 < 0.2


def test_lorentz_free_defect_first_order():
    beta = lambda x: 0.4 * np.tanh(x)
    dbeta = lambda x: 0.4 / np.cosh(x) ** 2
    out = []
    for dx in (0.1, 0.05, 0.025):
        g = Grid.covering("line", 10.0, dx)
        x = np.repeat(g.x, 2)
        phi = np.exp(-(x**2)) * (1 + 0.5j * np.tile([1.0, -1.0], g.n))
        out.append(lorentz_free_defect(g, beta, dbeta, phi))
    assert out[2] < out[1] < out[0]
    assert out[0] / out[2] > 3.0
