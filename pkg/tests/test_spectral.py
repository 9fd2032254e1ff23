import numpy as np
import pytest

from diracdyn.lattice import Grid, assemble_line, eigensystem, spectral_projector
from diracdyn.packets import WavePacket, gaussian_packet
from diracdyn.spectral import (
    SpectralError,
    ac_proxy_state,
    lipschitz_split,
    spectral_measure,
    split_state,
)


@pytest.fixture(scope="module")
def free():
    g = Grid.line(600, 0.1)
    return g, eigensystem(assemble_line(g))


def _eigvec(es, g, i):
    c = np.zeros(len(es))
    c[i] = 1.0
    return WavePacket(es.synthesize(c), g).normalized()


def test_eigenvector_single_bin(free):
    g, es = free
    mu = spectral_measure(es, _eigvec(es, g, 300), bins=np.linspace(-25, 25, 101))
    assert np.count_nonzero(mu.masses > 1e-12) == 1
    assert mu.total == pytest.approx(1.0, abs=1e-10)


def test_two_eigenvectors_two_bins(free):
    g, es = free
    c = np.zeros(len(es))
    c[[250, 350]] = 1.0
    psi = WavePacket(es.synthesize(c), g)
    mu = spectral_measure(es, psi, bins=np.linspace(-25, 25, 101))
    heavy = mu.masses[mu.masses > 1e-12]
    assert heavy.size == 2
    assert np.allclose(heavy, psi.norm2 / 2, rtol=1e-10)


def test_parseval(free):
    g, es = free
    psi = gaussian_packet(g, 1.0, 0.7, "chiral+", momentum=1.0)
    for bins in (None, 50, np.linspace(-30, 30, 61)):
        assert spectral_measure(es, psi, bins=bins).total == pytest.approx(psi.norm2, abs=1e-10)


def test_uncovered_mass_refused(free):
    g, es = free
    psi = gaussian_packet(g, 0.0, 0.5)
    with pytest.raises(SpectralError):
        spectral_measure(es, psi, bins=np.linspace(-1, 1, 5))
    part = eigensystem(assemble_line(g), window=(-1.0, 1.0))
    with pytest.raises(SpectralError):
        spectral_measure(part, psi)


def test_split_level_above_density(free):
    g, es = free
    mu = spectral_measure(es, gaussian_packet(g, 0.0, 1.0))
    mu1, mu2, cert = lipschitz_split(mu, alpha=mu.density.max() * 1.01)
    assert mu2.total == 0.0
    assert np.array_equal(mu1.masses + mu2.masses, mu.masses)


def test_split_partition_and_quarter(free):
    g, es = free
    psi = ac_proxy_state(es, (-4.0, 4.0), dict(center=0.0, width=1.5))
    mu = spectral_measure(es, psi)
    mu1, mu2, cert = lipschitz_split(mu)
    assert np.array_equal(mu1.masses + mu2.masses, mu.masses)
    assert mu2.total < mu.total / 4
    # mu1(I) <= alpha |I| on every bin
    assert np.all(mu1.masses <= cert.alpha * mu.widths * (1 + 1e-12))
    psi1, psi2 = split_state(es, psi, mu1)
    assert psi1.norm2 >= 0.75 * psi.norm2
    assert abs(psi1.inner(psi2)) < 1e-12


def test_eigenvector_fails_certificate(free):
    g, es = free
    _, _, cert = lipschitz_split(spectral_measure(es, _eigvec(es, g, 280)))
    assert not cert.passed


def test_proxy_full_spectrum_is_identity(free):
    g, es = free
    env = gaussian_packet(g, 0.5, 1.0, "up")
    psi = ac_proxy_state(es, (-1e3, 1e3), env)
    assert np.allclose(psi.amplitudes, env.amplitudes, atol=1e-10)


def test_proxy_supported_in_window(free):
    g, es = free
    psi = ac_proxy_state(es, (-2.0, 3.0), dict(center=0.0, width=2.0), taper=0.2)
    c = es.coefficients(psi.amplitudes)
    outside = (es.eigenvalues < -2.0) | (es.eigenvalues > 3.0)
    assert np.max(np.abs(c[outside])) < 1e-12
    assert psi.meta["taper"] == 0.2


def test_proxy_free_certificate(free):
    g, es = free
    psi = ac_proxy_state(es, (-1.0, 1.0), dict(center=0.0, width=3.0))
    cert = psi.meta["certificate"]
    assert cert.passed and cert.mu2_mass < 0.25 * cert.total


def test_proxy_resolution_guard(free):
    g, es = free
    with pytest.raises(SpectralError):
        ac_proxy_state(es, (0.0, 0.2), dict(center=0.0, width=1.0))
    with pytest.raises(ValueError):
        ac_proxy_state(es, (-4.0, 4.0), None, taper=0.7)


def test_projected_measure_is_restriction(free):
    g, es = free
    psi = gaussian_packet(g, 0.3, 0.8, "chiral-")
    edges = np.linspace(-30, 30, 121)
    P = spectral_projector(es, (-2.0, 2.5))
    ppsi = WavePacket(P @ psi.amplitudes, g)
    a = spectral_measure(es, ppsi, bins=edges).masses
    b = spectral_measure(es, psi, bins=edges).restricted(-2.0, 2.5).masses
    assert np.abs(a - b).max() < 1e-10
