import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from camregge import synth
from camregge.errors import DegenerateSamples, InputError, MultipleRoot
from camregge.pade import (Axis, PoleDatum, PoleSearchConfig, SearchBox, Significance,
                           SignificanceConfig, build_approximant, classify_significance,
                           find_poles_zeros, residue_at, residue_check)
from camregge.smatrix_io import slice_at_energy

LAM = np.arange(0, 11) + 0.5


def _samples(f, x=LAM):
    return [(float(t), complex(f(t))) for t in x]


def test_simple_pole_reproduced_off_axis():
    f = lambda z: 1.0 / (z - (3 + 1j))
    a = build_approximant(_samples(f), Axis.CAM, 70.0)
    assert abs(a(5 + 2j) - f(5 + 2j)) < 1e-10


def test_constant_samples():
    a = build_approximant(_samples(lambda z: 1.0), Axis.CAM, 70.0)
    for z in (0.3, 4 + 2j, -3 - 1j):
        assert a(z) == pytest.approx(1.0, abs=1e-15)
    poles, zeros = find_poles_zeros(a)
    assert poles == [] and zeros == []


def test_interpolation_property():
    rng = np.random.default_rng(1)
    vals = rng.normal(size=21) + 1j * rng.normal(size=21)
    x = np.arange(21) + 0.5
    a = build_approximant(list(zip(x, vals)), Axis.CAM, 0.0)
    if not a.log.terminated_early:
        got = a(x)
        assert np.max(np.abs(got - vals) / np.abs(vals)) < 1e-12


def test_too_few_and_degenerate_samples():
    with pytest.raises(InputError):
        build_approximant([(0.5, 1.0), (1.5, 2.0), (2.5, 3.0)])
    with pytest.raises(DegenerateSamples):
        build_approximant([(0.5, 1.0), (1.5, 2.0), (1.5, 3.0), (2.5, 1.0)])


def test_residue_of_simple_pole():
    c, lam0 = 0.02 + 0.01j, 6.3 + 0.7j
    a = build_approximant(_samples(lambda z: c / (z - lam0)), Axis.CAM, 70.0)
    assert abs(residue_at(a, lam0) - c) < 1e-10
    d, r = residue_check(a, lam0)
    assert abs(d - r) < 1e-6 * abs(d)


def test_double_pole_raises():
    lam0 = 5.2 + 0.8j
    a = build_approximant(_samples(lambda z: 1.0 / (z - lam0) ** 2), Axis.CAM, 70.0)
    with pytest.raises(MultipleRoot):
        residue_at(a, lam0)


@pytest.mark.parametrize("im, res, expected", [
    (0.95, 3e-3, Significance.SIGNIFICANT),
    (0.2, 1e-6, Significance.BACKGROUND),
    (8.0, 0.5, Significance.BACKGROUND),
])
def test_classify_significance(im, res, expected):
    p = PoleDatum(12.49 + 1j * im, res, 62.09, Significance.BACKGROUND)
    assert classify_significance(p) == expected


def test_energy_axis_ignores_cam_im_cap():
    p = PoleDatum(80 - 11j, 0.3, 13, Significance.BACKGROUND, Axis.ENERGY)
    assert classify_significance(p, SignificanceConfig()) == Significance.SIGNIFICANT


def test_froissart_doublet_flagged():
    lam0, p, z = 13 + 0.9j, 6.0 + 0.5j, 6.0 + 0.5j + 2e-4
    f = lambda t: (t - (lam0 - 1.8j)) / (t - lam0) * (t - z) / (t - p)
    a = build_approximant(_samples(f, np.arange(0, 21) + 0.5), Axis.CAM, 70.0)
    poles, zeros = find_poles_zeros(a)
    spurious = [q for q in poles if q.significance == Significance.SPURIOUS]
    assert len(spurious) == 1 and abs(spurious[0].position - p) < 1e-8
    assert all(abs(zz.position - z) > 1e-3 for zz in zeros)
    real = [q for q in poles if q.significance != Significance.SPURIOUS]
    assert len(real) == 1 and abs(real[0].position - lam0) < 1e-8


def _strip_error(model, ie=3):
    table, ledger = synth.generate(model)
    E = table.energies[ie]
    a = build_approximant(slice_at_energy(table, ie), Axis.CAM, E)
    X, Y = np.meshgrid(np.linspace(0, 40, 81), np.linspace(0, 3, 13))
    Z = (X + 1j * Y).ravel()
    return float(np.max(np.abs(a(Z) - model.S(Z, E)))), a, ledger


def test_one_pole_closed_form_on_strip():
    err, a, ledger = _strip_error(synth.PRESETS["rational-one-pole"]())
    assert err < 1e-9
    poles, _ = find_poles_zeros(a, config=PoleSearchConfig(jmax=40))
    good = [p for p in poles if p.significance != Significance.SPURIOUS]
    assert len(good) == 1
    assert abs(good[0].position - ledger.poles[0]["positions"][3]) < 1e-8
    r = ledger.poles[0]["residues"][3]
    assert abs(good[0].residue - r) < 1e-6 * abs(r)


def test_gaussian_background_strip_error():
    # a Gaussian profile is not rational; the continuation error grows with Im lambda
    err, a, ledger = _strip_error(synth.one_pole_model())
    assert err < 1e-7
    poles, _ = find_poles_zeros(a, config=PoleSearchConfig(jmax=40))
    good = [p for p in poles if p.significance != Significance.SPURIOUS]
    assert len(good) == 1
    assert abs(good[0].position - ledger.poles[0]["positions"][3]) < 1e-8


def test_search_box_respected():
    f = lambda t: 1 / (t - (3 + 0.5j)) + 1 / (t - (7 + 2.5j))
    a = build_approximant(_samples(f), Axis.CAM, 70.0)
    poles, _ = find_poles_zeros(a, SearchBox(0, 11, 0, 1.0))
    assert [round(p.position.real, 6) for p in poles] == [3.0]


@st.composite
def rational(draw):
    n_p = draw(st.integers(1, 4))
    n_z = draw(st.integers(0, n_p))
    def point(im_lo, im_hi):
        return complex(draw(st.floats(1.0, 19.0)), draw(st.floats(im_lo, im_hi)))
    poles = [point(0.3, 3.5) for _ in range(n_p)]
    zeros = [point(-3.0, 3.5) for _ in range(n_z)]
    return poles, zeros


@settings(max_examples=40, deadline=None)
@given(rational())
def test_rational_recovery(rz):
    poles, zeros = rz
    pts = poles + zeros
    gaps = [abs(a - b) for i, a in enumerate(pts) for b in pts[i + 1:]]
    assume(not gaps or min(gaps) > 0.3)
    f = lambda t: np.prod([t - z for z in zeros], axis=0) / np.prod([t - p for p in poles], axis=0)
    a = build_approximant(_samples(f, np.arange(0, 21) + 0.5), Axis.CAM, 70.0)
    found, fz = find_poles_zeros(a, SearchBox(0, 21, 0, 4), PoleSearchConfig(jmax=20))
    good = [p.position for p in found if p.significance != Significance.SPURIOUS]
    assert len(good) == len(poles)
    for p in poles:
        assert min(abs(g - p) for g in good) < 1e-8
    for z in zeros:
        if z.imag > 0.05:
            assert min(abs(q.position - z) for q in fz) < 1e-8


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_small_noise_stability(seed):
    rng = np.random.default_rng(seed)
    table, ledger = synth.generate(synth.PRESETS["rational-two-pole"]())
    row = slice_at_energy(table, 0)
    clean = find_poles_zeros(build_approximant(row, Axis.CAM, 62.09),
                             config=PoleSearchConfig(jmax=40))[0]
    noisy_row = [(x, s * (1 + 1e-10 * complex(*rng.uniform(-1, 1, 2)))) for x, s in row]
    noisy = find_poles_zeros(build_approximant(noisy_row, Axis.CAM, 62.09),
                             config=PoleSearchConfig(jmax=40))[0]
    ref = [p.position for p in clean if p.significance != Significance.SPURIOUS]
    for p in noisy:
        if p.significance != Significance.SPURIOUS:
            assert min(abs(p.position - q) for q in ref) < 1e-6


def test_polynomials_match_evaluation():
    f = lambda t: (t - 2 - 1j) / ((t - 4 - 0.5j) * (t - 9 - 1.5j))
    a = build_approximant(_samples(f), Axis.CAM, 70.0)
    num, den = a.polynomials()
    z = 6.1 + 0.7j
    t = (z - a.center) / a.halfwidth
    assert abs(num(t) / den(t) - f(z)) < 1e-12
