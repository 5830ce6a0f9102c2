import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import eval_legendre

from camregge import synth
from camregge.amplitudes import (AngularGrid, UnfoldedAmplitude, amplitude_direct,
                                 build_cam_approximants, dcs_direct, default_phi_grid, fold,
                                 fold_endpoint, fold_phase, fold_surface, legendre_table, unfold,
                                 winding_angle, winding_angles)
from camregge.errors import EndpointTheta, InputError, PhiOutOfGrid, TruncationTooCoarse
from camregge.pade import PoleSearchConfig, Significance, find_poles_zeros
from camregge.smatrix_io import PartialWaveTable, TransitionLabel

LABEL = TransitionLabel(0, 0, 0, 3, 0, 0)


def test_grid_from_degrees_hits_endpoints():
    g = AngularGrid.from_degrees(0, 180, 1)
    assert g.theta.size == 181
    assert g.theta[-1] == np.pi and g.theta[0] == 0.0
    assert g.includes_endpoints == (True, True)
    assert AngularGrid.from_degrees(10, 170, 5).includes_endpoints == (False, False)


@pytest.mark.parametrize("theta", [[1.0, 0.5], [-0.1, 1.0], [0.0, 3.5]])
def test_grid_rejects_bad_theta(theta):
    with pytest.raises(InputError):
        AngularGrid(np.array(theta))


@settings(max_examples=50)
@given(st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=20), st.integers(0, 60))
def test_legendre_matches_scipy_and_is_bounded(x, jmax):
    P = legendre_table(x, jmax)
    ref = np.array([eval_legendre(J, np.array(x)) for J in range(jmax + 1)])
    assert np.allclose(P, ref, atol=1e-12)
    assert np.all(np.abs(P) <= 1 + 1e-12)


def test_single_partial_wave_dcs():
    S = np.zeros((2, 11), complex)
    S[:, 0] = 1.0
    t = PartialWaveTable(LABEL, np.array([70.0, 71.0]), np.ones(2), S)
    surf = dcs_direct(t, AngularGrid.from_degrees(0, 180, 1))
    assert surf.sigma.shape == (2, 181)
    assert np.allclose(surf.sigma, 0.25, rtol=0, atol=1e-15)


def test_direct_amplitude_against_explicit_sum():
    rng = np.random.default_rng(5)
    S = rng.uniform(0, 1, (3, 16)) * np.exp(1j * rng.uniform(0, 6, (3, 16)))
    k = np.array([1.5, 2.0, 2.5])
    t = PartialWaveTable(LABEL, np.array([60.0, 61.0, 62.0]), k, S)
    th = np.linspace(0, np.pi, 19)
    ref = np.zeros((3, th.size), complex)
    for J in range(16):
        ref += (J + 0.5) * S[:, J:J + 1] * eval_legendre(J, -np.cos(th))[None, :]
    ref /= 1j * k[:, None]
    assert np.allclose(amplitude_direct(t, th), ref, rtol=1e-13, atol=1e-13)


@given(st.floats(1e-3, np.pi - 1e-3), st.integers(-6, 6))
def test_winding_angle_identities(theta, m):
    phi = winding_angle(theta, m)
    assert winding_angle(theta, m + 2) == pytest.approx(phi + 2 * np.pi)
    expected = (np.pi - theta) if m % 2 == 0 else (np.pi + theta)
    assert phi == pytest.approx(expected + (m - (m % 2)) * np.pi)
    # phi_0 and phi_-1 bracket zero only through the m <= 0 branch
    assert (phi > 0) == (m >= 0)


def test_winding_angles_sides_and_endpoints():
    out = winding_angles(0.3, range(-1, 3))
    assert [s for _, _, s in out] == ["farside", "nearside", "farside", "nearside"]
    for theta in (0.0, np.pi):
        with pytest.raises(EndpointTheta):
            winding_angles(theta, [0])


def test_fold_phase_cycle():
    assert fold_phase(4) == pytest.approx(fold_phase(0))
    assert fold_phase(1) == pytest.approx(-1j * fold_phase(0))


def test_default_phi_grid_contains_endpoint_multiples():
    phi = default_phi_grid(2)
    assert phi[0] == pytest.approx(-4 * np.pi) and phi[-1] == pytest.approx(5 * np.pi)
    for n in range(-4, 6):
        assert np.min(np.abs(phi - n * np.pi)) < 1e-12


def _unfolded(phi, n=2):
    f = np.vstack([np.exp(1j * phi)] * n)
    return UnfoldedAmplitude(phi, np.arange(n, dtype=float), f, 2 * f, 0 * phi[None], 0 * phi[None])


def test_sample_exact_and_spline():
    phi = np.linspace(0, 2 * np.pi, 721)
    u = _unfolded(phi)
    assert np.array_equal(u.sample("f", phi[[3, 100]]), u.f[:, [3, 100]])
    x = np.array([0.1234, 3.3])
    assert np.allclose(u.sample("g", x), 2 * np.exp(1j * x), atol=1e-9)
    with pytest.raises(PhiOutOfGrid):
        u.sample("f", [2 * np.pi + 0.1])


@pytest.fixture(scope="module")
def one_pole():
    model = synth.one_pole_model(energies=(62.09, 101.67))
    table, ledger = synth.generate(model)
    apx = build_cam_approximants(table)
    u = unfold(table, apx, default_phi_grid(3, step_deg=1.0))
    poles = [[p for p in find_poles_zeros(a, config=PoleSearchConfig(jmax=40))[0]
              if p.significance != Significance.SPURIOUS] for a in apx]
    return table, u, poles


def test_endpoints_match_direct(one_pole):
    table, u, _ = one_pole
    for which, th in (("forward", 0.0), ("backward", np.pi)):
        exact = np.abs(amplitude_direct(table, [th])[:, 0]) ** 2
        got = np.abs(fold_endpoint(u, which, table.k, 3)) ** 2
        assert np.max(np.abs(got - exact) / exact) < 1e-6
    with pytest.raises(InputError):
        fold_endpoint(u, "sideways", table.k)


def test_interior_fold_is_semiclassical(one_pole):
    table, u, poles = one_pole
    th = np.deg2rad([60.0, 90.0, 120.0])
    got = fold(u, th, 2, table.k, poles=poles).sigma
    ref = np.abs(amplitude_direct(table, th)) ** 2
    peak = (np.abs(amplitude_direct(table, np.deg2rad(np.arange(181)))) ** 2).max(axis=1)
    assert np.max(np.abs(got - ref) / peak[:, None]) < 1e-2


def test_fold_rejects_endpoints_and_coarse_truncation(one_pole):
    table, u, poles = one_pole
    with pytest.raises(EndpointTheta):
        fold(u, [0.0, 1.0], 2, table.k)
    with pytest.raises(TruncationTooCoarse):
        fold(u, np.deg2rad([30.0, 90.0]), 0, table.k, poles=poles)


def test_fold_surface_routes_endpoints(one_pole):
    table, u, _ = one_pole
    grid = AngularGrid.from_degrees(0, 180, 30)
    amp = fold_surface(u, grid, table.k, table.jmax, 2, fold_tol=np.inf)
    assert np.allclose(amp[:, 0], fold_endpoint(u, "forward", table.k, 2))
    assert np.allclose(amp[:, -1], fold_endpoint(u, "backward", table.k, 2))


def test_unfold_validates_phi(one_pole):
    table, _, _ = one_pole
    with pytest.raises(InputError):
        unfold(table, None, np.array([1.0, 0.5]))
