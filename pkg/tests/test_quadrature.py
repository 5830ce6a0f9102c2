import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma

from camregge.errors import InputError, QuadratureNotConverged
from camregge.quadrature import QuadratureConfig, fourier_integrals, tail_remainder


def _exact(a, phi):
    s = a - 1j * np.asarray(phi)
    return gamma(1.5) / s ** 1.5, 1.0 / s ** 2


def test_exponential_closed_form():
    a = 0.7
    phi = np.linspace(-4 * np.pi, 5 * np.pi, 301)
    r = fourier_integrals(lambda lam: np.exp(-a * lam), phi, 60.0)
    f, g = _exact(a, phi)
    assert np.max(np.abs(r.f - f)) < 1e-11
    assert np.max(np.abs(r.g - g)) < 1e-11


def test_error_estimate_bounds_true_error():
    a = 0.4
    phi = np.linspace(0, 3 * np.pi, 61)
    r = fourier_integrals(lambda lam: np.exp(-a * lam), phi, 30.0,
                          QuadratureConfig(rtol=1e-8))
    f, g = _exact(a, phi)
    assert np.all(np.abs(r.f - f) <= r.err_f + 1e-14)
    assert np.all(np.abs(r.g - g) <= r.err_g + 1e-14)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(-15.0, 15.0), st.floats(10.0, 50.0))
def test_closed_form_property(a, phi, cut):
    r = fourier_integrals(lambda lam: np.exp(-a * lam), [phi], cut)
    f, g = _exact(a, [phi])
    scale = max(abs(f[0]), abs(g[0]), 1e-3)
    assert abs(r.f[0] - f[0]) < 1e-8 * scale
    assert abs(r.g[0] - g[0]) < 1e-8 * scale


def test_remainder_of_pure_exponential():
    # g-weight times exp(-a lam) integrates in closed form beyond c
    a, c = 1.1, 12.0
    phi = np.array([0.0, 1.0, np.pi])
    _, Rg = tail_remainder(lambda lam: np.exp(-a * lam), c, phi)
    s = a - 1j * phi
    exact = np.exp(-s * c) * (c / s + 1 / s ** 2)
    # the local exponential model drops the 1/(s c) correction
    assert np.all(np.abs(Rg - exact) <= 1.5 * np.abs(exact) / (np.abs(s) * c))


def test_remainder_tol_raises_cut():
    cfg = QuadratureConfig(remainder_tol=1e-14)
    r = fourier_integrals(lambda lam: np.exp(-0.5 * lam), [1.0], 10.0, cfg)
    assert r.lam_cut > 10.0
    assert np.max(np.abs(r.remainder_g)) <= 1e-14


def test_not_converged_reports_phi():
    cfg = QuadratureConfig(rtol=1e-14, atol=0.0, max_depth=0, max_panel_width=20.0)
    with pytest.raises(QuadratureNotConverged) as info:
        fourier_integrals(lambda lam: np.exp(-0.1 * lam) * np.cos(3 * lam), [0.5, 2.0], 40.0,
                          cfg, energy=70.0)
    assert info.value.energy == 70.0
    assert info.value.phi in (0.5, 2.0)


@pytest.mark.parametrize("kw", [dict(atol=-1.0), dict(atol=0.0, rtol=0.0), dict(n_low=16)])
def test_bad_config(kw):
    with pytest.raises(InputError):
        QuadratureConfig(**kw)


def test_bad_cut():
    with pytest.raises(InputError):
        fourier_integrals(lambda lam: np.exp(-lam), [0.0], 0.0)
