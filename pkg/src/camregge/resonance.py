"""Regge-pole tails of the unfolded amplitudes and resonance decompositions.

A pole ``lam_n`` with residue ``r_n`` contributes to the unfolded
amplitudes, for winding angles beyond the direct-scattering region, the
single exponential

    f~_n(phi) = 2 pi i sqrt(lam_n) r_n exp(i lam_n phi)
    g~_n(phi) = 2 pi i lam_n r_n exp(i lam_n phi)

The decompositions rebuild the forward, sideways and backward amplitudes
from these tails plus whatever the fold sum calls background, and compare
the coherent result with the exact amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .amplitudes import (FoldedAmplitude, UnfoldedAmplitude, fold_endpoint, fold_phase,
                         fold_prefactor, winding_angle)
from .errors import InputError, PhiOutOfGrid, SpuriousPole
from .pade import Axis, PoleDatum, Significance


@dataclass(frozen=True)
class TailAmplitude:
    pole: PoleDatum
    kind: str = "f"

    def __post_init__(self):
        if self.kind not in ("f", "g"):
            raise InputError(f"tail kind must be 'f' or 'g', got {self.kind!r}")
        if self.pole.significance == Significance.SPURIOUS:
            raise SpuriousPole(f"pole at {self.pole.position!r} is a Froissart doublet")
        if self.pole.axis != Axis.CAM:
            raise InputError("tails need a pole in the complex angular-momentum plane")

    @property
    def weight(self) -> complex:
        lam = complex(self.pole.position)
        return np.sqrt(lam) if self.kind == "f" else lam

    def __call__(self, phi):
        phi = np.asarray(phi, dtype=float)
        if np.any(phi < 0):
            raise InputError("tails are defined for phi >= 0")
        lam = complex(self.pole.position)
        return 2j * np.pi * self.weight * self.pole.residue * np.exp(1j * lam * phi)


def tail(pole: PoleDatum, kind: str, phi):
    return TailAmplitude(pole, kind)(phi)


def _per_energy(poles, n: int) -> list[list[PoleDatum]]:
    """Accept either one list per energy or a flat list (then used at every energy)."""
    if poles is None:
        return [[] for _ in range(n)]
    if len(poles) and isinstance(poles[0], PoleDatum):
        return [list(poles) for _ in range(n)]
    if len(poles) != n:
        raise InputError(f"expected pole lists for {n} energies, got {len(poles)}")
    return [list(p) for p in poles]


def _usable(ps: list[PoleDatum]) -> list[PoleDatum]:
    return sorted((p for p in ps if p.significance != Significance.SPURIOUS),
                  key=lambda p: p.position.imag)


@dataclass(frozen=True)
class TailResidual:
    phi: np.ndarray
    energies: np.ndarray
    delta_f: np.ndarray    # [energy, phi]
    delta_g: np.ndarray
    max_f: np.ndarray      # [energy], over phi >= phi_min
    rms_f: np.ndarray
    max_g: np.ndarray
    rms_g: np.ndarray


def subtract_tails(unfolded: UnfoldedAmplitude, poles, phi_min: float = np.pi) -> TailResidual:
    """``|f~| - |sum of tails| chi(phi - phi_min)``, and the same for ``g~``."""
    per = _per_energy(poles, unfolded.energies.size)
    phi = unfolded.phi
    mask = phi >= phi_min
    df = np.abs(unfolded.f).astype(float)
    dg = np.abs(unfolded.g).astype(float)
    for ie, ps in enumerate(per):
        tf = np.zeros(int(mask.sum()), complex)
        tg = np.zeros_like(tf)
        for p in _usable(ps):
            tf += tail(p, "f", phi[mask])
            tg += tail(p, "g", phi[mask])
        df[ie, mask] -= np.abs(tf)
        dg[ie, mask] -= np.abs(tg)

    def stats(d):
        sel = np.abs(d[:, mask])
        if sel.shape[1] == 0:
            z = np.zeros(d.shape[0])
            return z, z
        return sel.max(axis=1), np.sqrt(np.mean(sel ** 2, axis=1))

    mf, rf = stats(df)
    mg, rg = stats(dg)
    return TailResidual(phi, unfolded.energies, df, dg, mf, rf, mg, rg)


@dataclass
class DecompositionReport:
    """Per-energy terms, their coherent partial sums and the exact reference.

    ``approximations`` maps a name to the ordered term labels it sums;
    ``coherent[name] = |sum of those terms|^2`` and
    ``residual[name] = exact_abs2 - coherent[name]``.
    """

    tag: str
    energies: np.ndarray
    terms: dict[str, np.ndarray]
    approximations: dict[str, tuple[str, ...]]
    exact: np.ndarray
    coherent: dict[str, np.ndarray] = field(default_factory=dict)
    residual: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n = self.energies.size
        for name, labels in self.approximations.items():
            amp = np.zeros(n, complex)
            for lab in labels:
                amp = amp + self.terms[lab]
            self.coherent[name] = np.abs(amp) ** 2
            self.residual[name] = self.exact_abs2 - self.coherent[name]

    @property
    def exact_abs2(self) -> np.ndarray:
        return np.abs(self.exact) ** 2

    def max_residual(self, name: str) -> float:
        return float(np.max(np.abs(self.residual[name])))


def _labels_for(ps: list[PoleDatum], labels) -> list[str]:
    if labels is None:
        return [f"pole{i + 1}" for i in range(len(ps))]
    return list(labels)[:len(ps)]


def _pole_columns(per, labels, fn):
    """Build one term array per pole rank (ascending Im lambda) across energies."""
    n = len(per)
    ranks = max((len(_usable(ps)) for ps in per), default=0)
    names = _labels_for([None] * ranks, labels)
    cols = {name: np.zeros(n, complex) for name in names}
    for ie, ps in enumerate(per):
        for j, p in enumerate(_usable(ps)):
            cols[names[j]][ie] = fn(ie, p)
    return names, cols


def decompose_forward(unfolded: UnfoldedAmplitude, poles, k, *, labels=None, m_max: int = 2
                      ) -> DecompositionReport:
    """Forward amplitude as ``-k^-1 sum_n g~_n(pi)``, cumulative in the pole order."""
    k = np.asarray(k, dtype=float)
    per = _per_energy(poles, unfolded.energies.size)
    names, terms = _pole_columns(per, labels, lambda ie, p: -tail(p, "g", np.pi) / k[ie])
    approx = {f"{i + 1}-pole": tuple(names[:i + 1]) for i in range(len(names))}
    if not approx:
        approx = {"0-pole": ()}
    exact = fold_endpoint(unfolded, "forward", k, m_max)
    return DecompositionReport("forward", unfolded.energies, terms, approx, exact)


def decompose_backward(unfolded: UnfoldedAmplitude, poles, k, *, labels=None, m_max: int = 2
                       ) -> DecompositionReport:
    """Backward amplitude as ``(ik)^-1 [g~(0) - sum_n g~_n(2 pi)]``."""
    k = np.asarray(k, dtype=float)
    per = _per_energy(poles, unfolded.energies.size)
    direct = unfolded.sample("g", [0.0])[:, 0] / (1j * k)
    names, terms = _pole_columns(
        per, labels, lambda ie, p: -tail(p, "g", 2 * np.pi) / (1j * k[ie]))
    terms = {"direct": direct, **terms}
    approx = {"direct": ("direct",)}
    for i in range(len(names)):
        approx[f"direct+{i + 1}-pole"] = ("direct", *names[:i + 1])
    exact = fold_endpoint(unfolded, "backward", k, m_max)
    return DecompositionReport("backward", unfolded.energies, terms, approx, exact)


def decompose_sideway(folded: FoldedAmplitude, poles, theta: float, k, *, labels=None
                      ) -> DecompositionReport:
    """Amplitude at ``theta`` as the ``m <= 0`` fold terms plus pole tails at ``phi_1``."""
    k = np.asarray(k, dtype=float)
    hit = np.nonzero(np.abs(folded.theta - theta) <= 1e-12)[0]
    if hit.size == 0:
        raise PhiOutOfGrid(f"theta={np.rad2deg(theta):.6g} deg is not on the folded grid")
    it = int(hit[0])
    per = _per_energy(poles, folded.energies.size)
    background = np.zeros(folded.energies.size, complex)
    for m, t in folded.terms.items():
        if m <= 0:
            background = background + t[:, it]
    pref = fold_prefactor([theta], k)[:, 0]
    phi1 = winding_angle(theta, 1)
    names, terms = _pole_columns(
        per, labels, lambda ie, p: pref[ie] * tail(p, "f", phi1) * fold_phase(1))
    terms = {"background": background, **terms}
    approx = {"background": ("background",)}
    for i in range(len(names)):
        approx[f"background+{i + 1}-pole"] = ("background", *names[:i + 1])
    exact = folded.total[:, it]
    return DecompositionReport(f"theta={np.rad2deg(theta):.6g}", folded.energies, terms, approx,
                               exact)
