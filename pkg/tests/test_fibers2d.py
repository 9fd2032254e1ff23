import math
from types import SimpleNamespace

import numpy as np
import pytest

from diracdyn.dynamics import moment
from diracdyn.fibers2d import (
    WeightCutError,
    aggregate_lower_bound,
    apply_cartesian_dirac,
    dual_grid,
    fiber_rotation,
    fiber_translation,
    inverse_rotation,
    inverse_translation,
    select_labels,
)
from diracdyn.lattice import Grid


def _line_field(n1=60, n2=16, dx2=0.4):
    g = Grid.line(n1, 0.1)
    x2 = (np.arange(n2) - n2 // 2) * dx2
    f = np.stack([np.exp(-g.x**2), 0.5j * g.x * np.exp(-g.x**2)], axis=1)
    gx2 = np.exp(-((x2 - 0.3) ** 2)) * np.exp(0.7j * x2)
    return g, x2, f, gx2


def test_separable_field_gives_product_fibers():
    g, x2, f, gx2 = _line_field()
    fam = fiber_translation(f[:, None, :] * gx2[None, :, None], g, x2)
    dx2 = x2[1] - x2[0]
    dxi = 2 * math.pi / (x2.size * dx2)
    for xi, st in zip(fam.labels, fam.states):
        ghat = dx2 / math.sqrt(2 * math.pi) * np.sum(gx2 * np.exp(-1j * xi * x2))
        assert np.allclose(st.amplitudes, math.sqrt(dxi) * ghat * f.reshape(-1), atol=1e-12)
    assert np.allclose(np.sort(fam.labels), np.sort(dual_grid(x2.size, dx2)))


def test_translation_parseval_and_roundtrip():
    g, x2, _, _ = _line_field()
    rng = np.random.default_rng(3)
    psi = rng.normal(size=(g.n, x2.size, 2)) + 1j * rng.normal(size=(g.n, x2.size, 2))
    fam = fiber_translation(psi, g, x2)
    assert fam.weight_defect <= 1e-10 * fam.total
    assert np.abs(inverse_translation(fam) - psi).max() <= 1e-10


def test_translation_filter_commutes_with_fibering():
    g, x2, _, _ = _line_field()
    rng = np.random.default_rng(5)
    psi = rng.normal(size=(g.n, x2.size, 2)) + 1j * rng.normal(size=(g.n, x2.size, 2))
    xi = dual_grid(x2.size, x2[1] - x2[0])
    keep = np.abs(xi) < 4.0
    # filter in x2 momentum first
    hat = np.fft.fft(psi, axis=1) * keep[None, :, None]
    filtered = fiber_translation(np.fft.ifft(hat, axis=1), g, x2)
    full = fiber_translation(psi, g, x2)
    for lab, a, b in zip(full.labels, full.states, filtered.states):
        expect = a.amplitudes if abs(lab) < 4.0 else 0.0 * a.amplitudes
        assert np.abs(b.amplitudes - expect).max() <= 1e-8


def test_translation_moment_is_fiber_sum():
    g, x2, f, gx2 = _line_field()
    psi = f[:, None, :] * gx2[None, :, None]
    fam = fiber_translation(psi, g, x2)
    direct = g.dx * (x2[1] - x2[0]) * np.sum(np.abs(g.x)[:, None, None] ** 2 * np.abs(psi) ** 2)
    assert sum(moment(s, 2) for s in fam.states) == pytest.approx(direct, rel=1e-10)


def test_bad_translation_input():
    g, x2, f, _ = _line_field()
    with pytest.raises(ValueError):
        fiber_translation(np.zeros((g.n + 1, x2.size, 2)), g, x2)
    with pytest.raises(ValueError):
        fiber_translation(np.zeros((g.n, 3, 2)), g, np.array([0.0, 1.0, 3.0]))


def test_single_harmonic_one_channel():
    g = Grid.halfline(50, 0.1)
    r, phi = g.x, 2 * math.pi * np.arange(8) / 8
    k = 1.5
    psi = np.zeros((g.n, 8, 2), complex)
    psi[:, :, 0] = np.exp(-r)[:, None] * np.exp(1j * (k - 0.5) * phi)[None, :]
    psi[:, :, 1] = (r * np.exp(-r))[:, None] * np.exp(1j * (k + 0.5) * phi)[None, :]
    fam = fiber_rotation(psi, g, [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5])
    assert list(fam.nonzero()) == [1.5]
    assert fam.weight_defect <= 1e-10 * fam.total


def test_rotation_invariant_spinor_gives_half_channels():
    g = Grid.halfline(40, 0.1)
    psi = np.zeros((g.n, 6, 2), complex)
    psi[:, :, 0] = np.exp(-g.x)[:, None]
    assert list(fiber_rotation(psi, g, [-1.5, -0.5, 0.5, 1.5]).nonzero()) == [0.5]
    psi[:, :, 1] = np.exp(-2 * g.x)[:, None]
    fam = fiber_rotation(psi, g, [-1.5, -0.5, 0.5, 1.5])
    assert set(fam.nonzero()) == {-0.5, 0.5}


def test_rotation_roundtrip_and_weights():
    g = Grid.halfline(40, 0.1)
    n_phi = 8
    rng = np.random.default_rng(7)
    psi = rng.normal(size=(g.n, n_phi, 2)) + 1j * rng.normal(size=(g.n, n_phi, 2))
    ks = np.arange(n_phi) - n_phi // 2 + 0.5
    fam = fiber_rotation(psi, g, ks)
    assert fam.weight_defect <= 1e-6 * fam.total
    assert np.abs(inverse_rotation(fam) - psi).max() <= 1e-10


def test_rotation_channel_checks():
    g = Grid.halfline(10, 0.1)
    psi = np.zeros((g.n, 4, 2))
    with pytest.raises(ValueError):
        fiber_rotation(psi, g, [0.0])
    with pytest.raises(ValueError):
        fiber_rotation(psi, g, [0.5, 4.5])
    with pytest.raises(ValueError):
        fiber_rotation(np.zeros((10, 4, 2)), Grid.line(10, 0.1), [0.5])


def test_channel_basis_reduces_dirac_operator():
    # sigma.(p - A) + V on a channel equals the radial operator on (u, v)
    k = 1.5
    u = lambda r: r * np.exp(-(r**2))
    du = lambda r: (1 - 2 * r**2) * np.exp(-(r**2))
    v = lambda r: r**2 * np.exp(-(r**2))
    dv = lambda r: (2 * r - 2 * r**3) * np.exp(-(r**2))
    V = lambda r: 0.3 * r
    A = lambda r: 0.5 * r

    def psi(x, y):
        r, phi = np.hypot(x, y), np.arctan2(y, x)
        s = 1 / np.sqrt(2 * np.pi * r)
        return np.stack([s * u(r) * np.exp(1j * (k - 0.5) * phi), s * v(r) * np.exp(1j * (k + 0.5) * phi)], -1)

    r = np.linspace(0.4, 2.5, 9)
    phi = np.linspace(0.1, 6.0, 9)
    x, y = r * np.cos(phi), r * np.sin(phi)
    got = apply_cartesian_dirac(psi, V, A, x, y, h=1e-5)
    w = k / r - A(r)
    hu = -1j * dv(r) - 1j * w * v(r) + V(r) * u(r)
    hv = -1j * du(r) + 1j * w * u(r) + V(r) * v(r)
    s = 1 / np.sqrt(2 * np.pi * r)
    expect = np.stack([s * hu * np.exp(1j * (k - 0.5) * phi), s * hv * np.exp(1j * (k + 0.5) * phi)], -1)
    assert np.abs(got - expect).max() <= 1e-6


def _report(T, c, p=2.0):
    return SimpleNamespace(p=p, T_values=T, cesaro_values=c * T**p, fitted_exponent=p, fitted_constant=c)


def _family(weights):
    g = Grid.halfline(10, 0.1)
    psi = np.zeros((g.n, 8, 2), complex)
    fam = fiber_rotation(psi, g, [0.5, 1.5, 2.5][: len(weights)])
    fam.weights = np.array(weights, float)
    fam.total = float(sum(weights))
    return fam


def test_aggregate_single_and_double():
    T = np.geomspace(1, 50, 6)
    fam = _family([0.6, 0.4])
    one = aggregate_lower_bound(fam, {0.5: _report(T, 0.3)}, 2.0)
    assert one.fitted_exponent == pytest.approx(2.0, abs=1e-12)
    assert one.fitted_constant == pytest.approx(0.3, rel=1e-12) and one.constant_sum == pytest.approx(0.3)
    two = aggregate_lower_bound(fam, {0.5: _report(T, 0.3), 1.5: _report(T, 0.3)}, 2.0)
    assert two.fitted_constant == pytest.approx(0.6, rel=1e-12)
    assert two.weight_fraction == pytest.approx(1.0)


def test_aggregate_weight_cut():
    T = np.geomspace(1, 50, 6)
    fam = _family([0.3, 0.7])
    with pytest.raises(WeightCutError):
        aggregate_lower_bound(fam, {0.5: _report(T, 1.0)}, 2.0)
    with pytest.raises(ValueError):
        aggregate_lower_bound(fam, {1.5: _report(T, 1.0, p=1.0)}, 2.0)
    assert list(select_labels(fam, 0.5)) == [1.5]
