import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from camregge import synth
from camregge.errors import BetaNearZero, InputError, NonPositiveImaginaryPart, TooFewPoints
from camregge.pade import PoleDatum, Significance
from camregge.trajectories import (HBAR_J_S, HBAR_MEV_S, CEPole, CESource, LinearFit,
                                   ReggeTrajectory, angular_life_deg, ce_poles_direct,
                                   chain_trajectories, compare_ce_sets, fit_linear,
                                   im_E_from_lifetime, invert_to_ce, lifetime, nearest_J,
                                   normalize_ce_convention, observables)

E = np.linspace(62.09, 101.67, 11)


def _poles(lams, energies=E):
    return [[PoleDatum(complex(l), 0.01, float(e), Significance.SIGNIFICANT) for l in row]
            for e, row in zip(energies, lams)]


def test_single_linear_trajectory():
    lam = 10 + 0.9j + 0.08 * E
    trs = chain_trajectories(_poles([[l] for l in lam]))
    assert len(trs) == 1 and trs[0].label == "T1"
    assert trs[0].lam.size == E.size and not trs[0].short


def test_crossing_trajectories_stay_separate():
    # real parts cross near the middle; steps stay inside the match radius
    a = 5 + 0.5j + 0.1 * (E - E[0])
    b = 7 + 2.0j + 0.0 * E
    trs = chain_trajectories(_poles([[x, y] for x, y in zip(a, b)]), match_radius=0.5)
    assert len(trs) == 2
    assert np.allclose(trs[0].lam, a) and np.allclose(trs[1].lam, b)


def test_chaining_edge_cases():
    assert chain_trajectories([]) == []
    spurious = [[PoleDatum(3 + 1j, 0.1, 70.0, Significance.SPURIOUS)]]
    assert chain_trajectories(spurious) == []
    trs = chain_trajectories(_poles([[3 + 1j], [9 + 1j]], E[:2]), match_radius=1.0)
    assert len(trs) == 2 and all(t.short for t in trs)


def test_exact_linear_fit():
    tr = ReggeTrajectory("T1", [(e, 10 + 0.9j + 0.08 * e, 0j) for e in E])
    fit = fit_linear(tr)
    assert fit.rms < 1e-10
    assert abs(fit.alpha - (10 + 0.9j)) < 1e-10 and abs(fit.beta - 0.08) < 1e-10


def test_quadratic_residual_norm():
    c = 1e-3
    lam = 10 + 0.9j + 0.08 * E + c * (E - 80) ** 2
    tr = ReggeTrajectory("T1", [(e, l, 0j) for e, l in zip(E, lam)])
    fit = fit_linear(tr)
    A = np.column_stack([np.ones_like(E), E])
    q = c * (E - 80) ** 2
    resid = q - A @ np.linalg.lstsq(A, q, rcond=None)[0]
    assert fit.rms == pytest.approx(np.sqrt(np.mean(resid ** 2)), rel=1e-9)


def test_fit_window_and_too_few_points():
    tr = ReggeTrajectory("T1", [(e, 10 + 0.08 * e + 1j, 0j) for e in E])
    fit = fit_linear(tr, (70.0, 90.0))
    assert fit.n_points == int(np.sum((E >= 70) & (E <= 90)))
    with pytest.raises(TooFewPoints):
        fit_linear(ReggeTrajectory("T2", tr.points[:2]))


def test_inversion_example():
    (ce,) = invert_to_ce((10 + 0.9j, 0.08), [12])
    assert ce.E_pole == pytest.approx(25 - 11.25j)
    assert ce.source == CESource.INVERTED
    with pytest.raises(BetaNearZero):
        invert_to_ce((10 + 0.9j, 0.0), [12])


@given(st.floats(-20, 20), st.floats(0.1, 2.0), st.floats(0.01, 0.5), st.floats(62, 102))
def test_invert_fit_identity(re_a, im_a, beta, E0):
    tr = ReggeTrajectory("T", [(e, complex(re_a, im_a) + beta * e, 0j) for e in E])
    fit = fit_linear(tr)
    lam0 = fit(E0)
    a, b = fit.inverse()
    assert abs(a + b * lam0 - E0) < 1e-10 * max(1.0, abs(E0))


def test_direct_ce_poles_match_closed_form():
    model = synth.PRESETS["rational-one-pole"]()
    table, _ = synth.generate(model)
    got = ce_poles_direct(table, 14)
    exact = [z for _, z in synth.exact_ce_poles(model, 14)]
    near = [min(got, key=lambda c: abs(c.E_pole - z)) for z in exact if 0 < z.real < 200]
    assert near and all(c.source == CESource.DIRECT for c in near)
    for c, z in zip(near, [z for z in exact if 0 < z.real < 200]):
        assert abs(c.E_pole - z) < 1e-8


def test_sign_convention():
    ps = [CEPole(13, 68 - 11j, CESource.DIRECT), CEPole(14, 80 - 12j, CESource.DIRECT)]
    out, flipped = normalize_ce_convention(ps)
    assert flipped and all(p.E_pole.imag > 0 for p in out)
    out2, flipped2 = normalize_ce_convention(out)
    assert not flipped2 and out2 == out
    assert normalize_ce_convention([]) == ([], False)


def test_lifetime_and_angular_life():
    assert angular_life_deg(0.95) == pytest.approx(30.1557, abs=1e-4)
    assert lifetime(1.6455) == pytest.approx(HBAR_MEV_S / 3.291)
    assert lifetime(im_E_from_lifetime(2e-16)) == pytest.approx(2e-16, rel=1e-12)
    for bad in (0.0, -1.0):
        with pytest.raises(NonPositiveImaginaryPart):
            lifetime(bad)
        with pytest.raises(NonPositiveImaginaryPart):
            angular_life_deg(bad)


@given(st.floats(0.05, 3.0), st.floats(1.0, 30.0), st.floats(1.0, 30.0))
def test_angular_life_depends_on_im_only(im, re1, re2):
    o1 = observables(lam=complex(re1, im))
    o2 = observables(lam=complex(re2, im))
    assert o1.angular_life_deg == o2.angular_life_deg


@pytest.mark.parametrize("re, J", [(12.49, 12), (12.5, 12), (13.0, 13), (0.7, 0)])
def test_nearest_J_rule(re, J):
    assert nearest_J(complex(re, 0.9)) == J


def test_observables_B_and_omega():
    o = observables(CEPole(13, 68.34 + 11.25j, CESource.INVERTED), 13.49 + 0.95j, I_moment=1e-46)
    assert o.rotational_constant == pytest.approx(68.34 / (13 * 14))
    assert o.angular_velocity == pytest.approx(HBAR_J_S * 13.49 / 1e-46)
    assert o.J_used == 13
    assert observables(CEPole(0, 50 + 1j, CESource.DIRECT)).rotational_constant is None
    with pytest.raises(InputError):
        observables()
    with pytest.raises(InputError):
        observables(lam=5 + 1j, I_moment=-1.0)


def test_compare_sets():
    a = [CEPole(J, complex(60 + 10 * J, 5), CESource.INVERTED) for J in range(12, 18)]
    b = [CEPole(p.J, p.E_pole + 13.0, CESource.DIRECT) for p in a]
    c = compare_ce_sets(a, b, offset=13.0)
    assert all(abs(p.d_re) < 1e-12 and abs(p.d_im) < 1e-12 for p in c.pairs)
    assert compare_ce_sets(a, b).best_offset == pytest.approx(13.0)
    with pytest.warns(UserWarning):
        empty = compare_ce_sets(a, [CEPole(40, 1 + 1j, CESource.DIRECT)])
    assert empty.pairs == []


def test_linear_fit_is_callable():
    fit = LinearFit(1 + 1j, 0.5, 0.0, (0.0, 1.0), 3)
    assert fit(2.0) == pytest.approx(2 + 1j)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert fit.inverse() == (pytest.approx(-2 - 2j), pytest.approx(2.0))
