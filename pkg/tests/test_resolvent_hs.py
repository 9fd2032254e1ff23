import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diracdyn.lattice import Grid, assemble_halfline, assemble_line, eigensystem
from diracdyn.potentials import linear_field_spec
from diracdyn.resolvent_hs import (
    WindowError,
    anchored_windows,
    centered_windows,
    free_halfline_kernel,
    free_line_kernel,
    halfline_hs_closed_form,
    hs_scan,
    hs_window,
    kernel_check,
    power_law_fit,
    resolvent,
)


@pytest.fixture(scope="module")
def free_line():
    return assemble_line(Grid.line(2048, 64.0 / 2048))


@pytest.fixture(scope="module")
def free_half():
    return assemble_halfline(Grid.halfline(2048, 32.0 / 2048), k=0.0, alpha=0.0)


def test_resolvent_of_zero():
    X = resolvent(np.zeros((4, 4)), 1j)
    assert np.allclose(X, 1j * np.eye(4))


def test_resolvent_bounds_and_eigenpairs():
    spec = linear_field_spec("line")
    H = assemble_line(Grid.line(150, 0.1), spec.V, spec.A, xi=0.4)
    for z in (1j, 0.3 + 0.5j):
        X = resolvent(H, z)
        assert np.linalg.norm(X, 2) <= 1 / abs(z.imag) + 1e-10
    es = eigensystem(H)
    v = es.vectors[:, ::37]
    lam = es.eigenvalues[::37]
    X = resolvent(H, 1j)
    assert np.abs(X @ v - v / (lam - 1j)[None, :]).max() <= 1e-10


def test_resolvent_real_z_refused():
    with pytest.raises(ValueError):
        resolvent(np.eye(2), 0.5)


def test_halfline_kernel_values():
    e = math.exp(-1.0)
    assert np.allclose(free_halfline_kernel(1.0, 0.0), 1j * e * np.array([[0, 1], [0, 1]]))
    assert np.allclose(free_halfline_kernel(0.0, 1.0), 1j * e * np.array([[0, 0], [-1, 1]]))
    assert abs(free_halfline_kernel(1.0, 0.0)[0, 1]) == pytest.approx(0.367879, abs=1e-6)


def test_halfline_kernel_diagonal_refused():
    with pytest.raises(ValueError):
        free_halfline_kernel(0.7, 0.7)


@settings(max_examples=50, deadline=None)
@given(x1=st.floats(0.0, 6.0), x2=st.floats(0.0, 6.0))
def test_halfline_kernel_frobenius(x1, x2):
    # distance decay plus the term reflected at the wall
    if x1 == x2:
        return
    f2 = float(np.sum(np.abs(free_halfline_kernel(x1, x2)) ** 2))
    assert f2 == pytest.approx(math.exp(-2 * abs(x1 - x2)) + math.exp(-2 * (x1 + x2)), rel=1e-12, abs=1e-300)


def test_halfline_kernel_boundary_condition():
    # the first component of every column vanishes at x = 0
    for x2 in (0.3, 1.0, 4.0):
        assert np.allclose(free_halfline_kernel(0.0, x2)[0], 0.0)


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-4, 4), y=st.floats(-4, 4))
def test_line_kernel_frobenius(x, y):
    if x == y:
        return
    f2 = float(np.sum(np.abs(free_line_kernel(x, y)) ** 2))
    assert f2 == pytest.approx(math.exp(-2 * abs(x - y)), rel=1e-12, abs=1e-300)


def test_free_line_unit_window_converges():
    # window edges on cell boundaries; otherwise node counting adds an O(dx) error of either sign
    errs = []
    for n in (1024, 2048, 4096):
        H = assemble_line(Grid.line(n, 64.0 / n))
        errs.append(abs(hs_window(H, (-0.5, 0.5)) - 1.0))
    assert errs[2] < errs[1] < errs[0]
    assert errs[2] < 1e-3


def test_free_halfline_window_matches_kernel_integral():
    errs = []
    for n in (1024, 2048, 4096):
        H = assemble_halfline(Grid.halfline(n, 32.0 / n), k=0.0, alpha=0.0)
        errs.append(abs(hs_window(H, (1.0, 2.0)) ** 2 - halfline_hs_closed_form(1.0, 2.0)))
    assert errs[2] < errs[1] < errs[0]
    assert errs[2] < 1e-3


def test_halfline_sqrt_bound_up_to_discretization(free_half):
    # equality holds in the continuum, so the lattice value may exceed it by O(dx)
    dx = free_half.grid.dx
    for lo, hi in anchored_windows((0.5, 1.0, 2.0, 4.0)):
        assert hs_window(free_half, (lo, hi)) <= math.sqrt(hi - lo) * (1 + dx)


def test_power_law_fit_exact():
    L = np.array([0.5, 1, 2, 4, 8])
    e, c, r = power_law_fit(L, np.sqrt(L))
    assert e == pytest.approx(0.5, abs=1e-12) and c == pytest.approx(1.0, abs=1e-12) and r < 1e-12


def test_free_line_scan(free_line):
    scan = hs_scan(free_line, centered_windows((0.5, 1, 2, 4, 8)))
    assert scan.fit_exponent == pytest.approx(0.5, abs=0.02)
    assert np.all(scan.hs_values >= 0)


def test_scan_needs_two_lengths(free_line):
    with pytest.raises(ValueError):
        hs_scan(free_line, [(-1, 0), (0, 1)])


def test_window_errors(free_line, free_half):
    with pytest.raises(WindowError):
        hs_window(free_line, (-40.0, 0.0))
    with pytest.raises(WindowError):
        hs_window(free_half, (0.0, 1.0))
    with pytest.raises(WindowError):
        hs_window(free_line, (1.0, 1.0))


@settings(max_examples=10, deadline=None)
@given(cut=st.floats(-1.5, 2.5))
def test_hs_additivity(cut):
    H = assemble_line(Grid.line(400, 0.05))
    cut = round(cut / 0.05) * 0.05
    a = hs_window(H, (-2.0, cut)) if cut > -2.0 else 0.0
    b = hs_window(H, (cut, 3.0))
    ab = hs_window(H, (-2.0, 3.0))
    assert ab**2 == pytest.approx(a**2 + b**2, rel=1e-10)


def test_hs_monotone():
    spec = linear_field_spec("line")
    H = assemble_line(Grid.line(400, 0.05), spec.V, spec.A)
    vals = [hs_window(H, (-0.25 * L, 0.25 * L)) for L in (1, 2, 4, 8)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_kernel_check_first_order():
    errs = [kernel_check(dx, extent=16.0).max_abs_error for dx in (0.02, 0.01)]
    assert errs[1] <= 0.55 * errs[0]
    assert errs[1] <= 0.02
