import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from camregge import synth
from camregge.amplitudes import build_cam_approximants, default_phi_grid, fold, unfold
from camregge.errors import InputError, PhiOutOfGrid, SpuriousPole
from camregge.pade import Axis, PoleDatum, PoleSearchConfig, Significance, find_poles_zeros
from camregge.resonance import (DecompositionReport, TailAmplitude, decompose_backward,
                                decompose_forward, decompose_sideway, subtract_tails, tail)


def _pole(lam=13 + 0.9j, res=0.01 - 0.02j, sig=Significance.SIGNIFICANT, axis=Axis.CAM):
    return PoleDatum(lam, res, 62.09, sig, axis)


@given(st.floats(0.1, 3.0), st.floats(0.0, 20.0), st.floats(0.01, 5.0))
def test_tail_decay_law(im, phi, dphi):
    p = _pole(lam=12.0 + 1j * im)
    a, b = tail(p, "f", [phi, phi + dphi])
    assert abs(b) / abs(a) == pytest.approx(np.exp(-im * dphi), rel=1e-10)


def test_tail_weights():
    p = _pole()
    f, g = tail(p, "f", 2.0), tail(p, "g", 2.0)
    assert g / f == pytest.approx(np.sqrt(p.position))
    assert f == pytest.approx(2j * np.pi * np.sqrt(p.position) * p.residue
                              * np.exp(1j * p.position * 2.0))


def test_tail_rejections():
    with pytest.raises(SpuriousPole):
        TailAmplitude(_pole(sig=Significance.SPURIOUS))
    with pytest.raises(InputError):
        TailAmplitude(_pole(axis=Axis.ENERGY))
    with pytest.raises(InputError):
        TailAmplitude(_pole(), kind="h")
    with pytest.raises(InputError):
        tail(_pole(), "f", [-0.1])


@pytest.fixture(scope="module")
def one_pole():
    model = synth.one_pole_model(energies=(62.09, 81.88, 101.67))
    table, ledger = synth.generate(model)
    apx = build_cam_approximants(table)
    u = unfold(table, apx, default_phi_grid(2, step_deg=1.0))
    poles = [[p for p in find_poles_zeros(a, config=PoleSearchConfig(jmax=40))[0]
              if p.significance != Significance.SPURIOUS] for a in apx]
    return table, u, poles


def test_subtract_tails_leaves_small_residual(one_pole):
    table, u, poles = one_pole
    r = subtract_tails(u, poles)
    mask = u.phi >= np.pi
    scale = np.abs(u.f[:, mask]).max(axis=1)
    assert np.all(r.max_f / scale < 1e-4)
    # below pi nothing is subtracted
    assert np.array_equal(r.delta_f[:, ~mask], np.abs(u.f[:, ~mask]))


def test_subtract_tails_energy_count(one_pole):
    _, u, poles = one_pole
    with pytest.raises(InputError):
        subtract_tails(u, poles[:2])


def test_report_residual_sign():
    rep = DecompositionReport("x", np.array([1.0]), {"a": np.array([1.0 + 0j])},
                              {"a": ("a",)}, np.array([2.0 + 0j]))
    assert rep.residual["a"][0] == pytest.approx(3.0)
    assert rep.max_residual("a") == pytest.approx(3.0)


def test_forward_and_backward_decompositions(one_pole):
    table, u, poles = one_pole
    fw = decompose_forward(u, poles, table.k)
    assert list(fw.approximations) == ["1-pole"]
    assert fw.max_residual("1-pole") < 0.05 * fw.exact_abs2.max()
    bw = decompose_backward(u, poles, table.k)
    assert list(bw.approximations) == ["direct", "direct+1-pole"]
    assert bw.max_residual("direct+1-pole") < bw.max_residual("direct")
    empty = decompose_forward(u, None, table.k)
    assert list(empty.approximations) == ["0-pole"]
    assert np.allclose(empty.residual["0-pole"], empty.exact_abs2)


def test_sideway_decomposition(one_pole):
    table, u, poles = one_pole
    th = np.deg2rad(90.0)
    folded = fold(u, [th], 2, table.k, poles=poles)
    rep = decompose_sideway(folded, poles, th, table.k)
    assert set(rep.terms) == {"background", "pole1"}
    assert rep.max_residual("background+1-pole") < rep.max_residual("background")
    with pytest.raises(PhiOutOfGrid):
        decompose_sideway(folded, poles, th + 0.1, table.k)
