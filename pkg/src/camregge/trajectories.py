"""Regge trajectories, their complex-energy counterparts and observables.

Per-energy CAM poles are chained into trajectories ``lam(E)``, fitted by
``lam ~ alpha + beta E`` and inverted to ``E(J) ~ a + b J`` with
``a = -alpha/beta`` and ``b = 1/beta``.  The same poles can be found
directly by continuing ``S^J(E)`` in energy at fixed ``J``.

Sign of ``Im E``: continuing a pole that sits at ``Im lam > 0`` with
``Re beta > 0`` lands it at ``Im E < 0`` (the usual resonance position
``E_r - i Gamma/2``).  Observables need ``Im E > 0``, so
:func:`normalize_ce_convention` detects which half-plane a set of poles
uses and conjugates it when necessary.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import BetaNearZero, InputError, NonPositiveImaginaryPart, TooFewPoints
from .pade import (Axis, PoleDatum, PoleSearchConfig, SearchBox, Significance,
                   build_approximant, find_poles_zeros)
from .smatrix_io import PartialWaveTable, slice_at_J

logger = logging.getLogger(__name__)

HBAR_MEV_S = 6.582119569e-13      # meV s
HBAR_J_S = 1.054571817e-34        # J s


@dataclass(frozen=True)
class LinearFit:
    alpha: complex
    beta: complex
    rms: float
    window: tuple[float, float]
    n_points: int

    def __call__(self, E):
        return self.alpha + self.beta * np.asarray(E)

    def inverse(self) -> tuple[complex, complex]:
        """``(a, b)`` of ``E = a + b lam``."""
        if abs(self.beta) < 1e-12:
            raise BetaNearZero(f"|beta|={abs(self.beta):.3g} is too small to invert")
        return -self.alpha / self.beta, 1.0 / self.beta


@dataclass
class ReggeTrajectory:
    label: str
    points: list[tuple[float, complex, complex]] = field(default_factory=list)
    fit: LinearFit | None = None

    @property
    def short(self) -> bool:
        return len(self.points) < 2

    @property
    def energies(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def lam(self) -> np.ndarray:
        return np.array([p[1] for p in self.points], dtype=complex)

    @property
    def residues(self) -> np.ndarray:
        return np.array([p[2] for p in self.points], dtype=complex)

    @property
    def fit_window(self):
        return None if self.fit is None else self.fit.window

    @property
    def fit_rms(self):
        return None if self.fit is None else self.fit.rms


def _group_by_energy(per_energy_poles):
    """Normalise input to ``[(E, [PoleDatum, ...]), ...]`` in ascending E."""
    out = []
    for item in per_energy_poles:
        if isinstance(item, tuple) and len(item) == 2 and not isinstance(item[0], PoleDatum):
            E, ps = item
        else:
            ps = list(item)
            if not ps:
                continue
            E = ps[0].anchor
        out.append((float(E), [p for p in ps if p.significance != Significance.SPURIOUS]))
    out.sort(key=lambda t: t[0])
    return out


def chain_trajectories(per_energy_poles, match_radius: float = 1.0) -> list[ReggeTrajectory]:
    """Greedy nearest-neighbour chaining of poles across adjacent energies.

    Candidate links are taken in order of increasing ``|d lam|`` (ties by the
    smaller ``Re lam`` of the new pole).  Trajectories are labelled ``T1, T2,
    ...`` by ascending mean ``Im lam``.
    """
    grouped = _group_by_energy(per_energy_poles)
    finished: list[ReggeTrajectory] = []
    active: list[ReggeTrajectory] = []
    for E, ps in grouped:
        links = []
        for it, tr in enumerate(active):
            last = tr.points[-1][1]
            for ip, p in enumerate(ps):
                d = abs(p.position - last)
                if d <= match_radius:
                    links.append((d, p.position.real, it, ip))
        links.sort()
        used_t, used_p = set(), set()
        for d, _, it, ip in links:
            if it in used_t or ip in used_p:
                continue
            used_t.add(it)
            used_p.add(ip)
            active[it].points.append((E, complex(ps[ip].position), complex(ps[ip].residue)))
        nxt = [tr for it, tr in enumerate(active) if it in used_t]
        finished.extend(tr for it, tr in enumerate(active) if it not in used_t)
        for ip, p in enumerate(ps):
            if ip not in used_p:
                nxt.append(ReggeTrajectory("", [(E, complex(p.position), complex(p.residue))]))
        active = nxt
    finished.extend(active)
    finished.sort(key=lambda t: (float(np.mean(t.lam.imag)), float(t.lam[0].real)))
    for i, tr in enumerate(finished):
        tr.label = f"T{i + 1}"
    return finished


def fit_linear(traj: ReggeTrajectory, window: tuple[float, float] | None = None) -> LinearFit:
    """Complex least-squares line ``lam = alpha + beta E`` over ``window`` (inclusive)."""
    E, lam = traj.energies, traj.lam
    if window is None:
        window = (float(E.min()), float(E.max())) if E.size else (np.nan, np.nan)
    sel = (E >= window[0]) & (E <= window[1])
    if sel.sum() < 3:
        raise TooFewPoints(f"trajectory {traj.label!r} has {int(sel.sum())} points in the window; "
                           "need at least 3")
    A = np.column_stack([np.ones(sel.sum()), E[sel]])
    coef, *_ = np.linalg.lstsq(A, lam[sel], rcond=None)
    resid = lam[sel] - A @ coef
    rms = float(np.sqrt(np.mean(np.abs(resid) ** 2)))
    return LinearFit(complex(coef[0]), complex(coef[1]), rms, (float(window[0]), float(window[1])),
                     int(sel.sum()))


class CESource(str, Enum):
    INVERTED = "inverted_from_CAM"
    DIRECT = "direct_pade_in_E"


@dataclass(frozen=True)
class CEPole:
    J: float
    E_pole: complex
    source: CESource
    residue: complex | None = None
    label: str = ""


def invert_to_ce(fit, J_values, *, lam_shift: float = 0.0, label: str = "") -> list[CEPole]:
    """``E(J) = a + b (J + lam_shift)``, ``a = -alpha/beta``, ``b = 1/beta``.

    ``fit`` is a :class:`LinearFit` or an ``(alpha, beta)`` pair.  Use
    ``lam_shift = 0.5`` when the fit was made in ``lam = J + 1/2``.
    """
    if isinstance(fit, LinearFit):
        alpha, beta = fit.alpha, fit.beta
    else:
        alpha, beta = complex(fit[0]), complex(fit[1])
    if abs(beta) < 1e-12:
        raise BetaNearZero(f"|beta|={abs(beta):.3g} is too small to invert")
    a, b = -alpha / beta, 1.0 / beta
    return [CEPole(J, complex(a + b * (J + lam_shift)), CESource.INVERTED, label=label)
            for J in J_values]


def ce_poles_direct(table: PartialWaveTable, J: int, search_box: SearchBox | None = None,
                    config: PoleSearchConfig = PoleSearchConfig(), *,
                    include_background: bool = True) -> list[CEPole]:
    """Poles of ``S^J(E)`` continued in complex energy (spurious doublets dropped)."""
    samples = slice_at_J(table, J)
    approx = build_approximant(samples, Axis.ENERGY, J)
    poles, _ = find_poles_zeros(approx, search_box, config)
    out = []
    for p in poles:
        if p.significance == Significance.SPURIOUS:
            continue
        if not include_background and p.significance != Significance.SIGNIFICANT:
            continue
        out.append(CEPole(J, p.position, CESource.DIRECT, p.residue))
    return out


def normalize_ce_convention(poles: list[CEPole]) -> tuple[list[CEPole], bool]:
    """Return poles with ``Im E > 0`` and whether they were conjugated.

    The half-plane is chosen by the sign of the summed imaginary parts.
    """
    if not poles:
        return [], False
    flip = sum(p.E_pole.imag for p in poles) < 0
    if not flip:
        return list(poles), False
    return [replace(p, E_pole=p.E_pole.conjugate()) for p in poles], True


@dataclass(frozen=True)
class ResonanceObservables:
    lifetime_s: float | None = None
    angular_life_deg: float | None = None
    rotational_constant: float | None = None
    angular_velocity: float | None = None
    J_used: int | None = None


def lifetime(im_E: float) -> float:
    """``hbar / (2 Im E)`` in seconds for ``Im E`` in meV."""
    if not im_E > 0:
        raise NonPositiveImaginaryPart(f"Im E must be positive, got {im_E!r}")
    return HBAR_MEV_S / (2.0 * im_E)


def im_E_from_lifetime(tau_s: float) -> float:
    """Inverse of :func:`lifetime`: ``Im E`` in meV for a lifetime in seconds."""
    if not tau_s > 0:
        raise InputError(f"lifetime must be positive, got {tau_s!r}")
    return HBAR_MEV_S / (2.0 * tau_s)


def angular_life_deg(im_lam: float) -> float:
    """``1 / (2 Im lam)`` radians, in degrees."""
    if not im_lam > 0:
        raise NonPositiveImaginaryPart(f"Im lambda must be positive, got {im_lam!r}")
    return float(np.rad2deg(1.0 / (2.0 * im_lam)))


def nearest_J(lam: complex) -> int:
    """Integer ``J`` with ``J + 1/2`` nearest ``Re lam`` (halves round up)."""
    return int(np.floor(lam.real))


def observables(ce: CEPole | None = None, lam: complex | None = None,
                I_moment: float | None = None) -> ResonanceObservables:
    """Lifetime and rotational constant from a CE pole; angular life and angular
    velocity from the matching CAM pole ``lam``.

    ``I_moment`` is the moment of inertia in kg m^2; the angular velocity is
    ``hbar Re(lam) / I`` in rad/s.  ``B`` uses ``J(J+1)`` with ``J`` taken from
    the CE pole, or else from ``lam`` via :func:`nearest_J`; it is omitted for
    ``J = 0``.
    """
    if ce is None and lam is None:
        raise InputError("need a CE pole, a CAM pole, or both")
    tau = B = ang = omega = None
    J = None
    if ce is not None:
        tau = lifetime(ce.E_pole.imag)
        J = int(round(ce.J))
    if lam is not None:
        lam = complex(lam)
        ang = angular_life_deg(lam.imag)
        if J is None:
            J = nearest_J(lam)
        if I_moment is not None:
            if not I_moment > 0:
                raise InputError("moment of inertia must be positive")
            omega = HBAR_J_S * lam.real / I_moment
    if ce is not None and J is not None and J > 0:
        B = ce.E_pole.real / (J * (J + 1))
    return ResonanceObservables(tau, ang, B, omega, J)


@dataclass(frozen=True)
class CEPair:
    J: float
    a: complex
    b_shifted: complex
    d_re: float
    d_im: float


@dataclass(frozen=True)
class CEComparison:
    pairs: list[CEPair]
    offset: float
    best_offset: float
    rms_at_offset: float
    rms_at_best: float


def compare_ce_sets(set_a: list[CEPole], set_b: list[CEPole], offset: float = 0.0,
                    J_tol: float = 0.5) -> CEComparison:
    """Pair poles by nearest ``J`` and compare after lowering ``set_b`` by ``offset``.

    ``best_offset`` minimises the RMS of ``Re E_b - offset - Re E_a`` over the pairs,
    which is the mean of ``Re E_b - Re E_a``.
    """
    raw = []
    for pa in sorted(set_a, key=lambda p: (p.J, p.E_pole.real)):
        if not set_b:
            break
        dist = [abs(pb.J - pa.J) for pb in set_b]
        j = int(np.argmin(dist))
        if dist[j] <= J_tol:
            raw.append((pa, set_b[j]))
    if not raw:
        warnings.warn("no common J between the two CE pole sets", stacklevel=2)
        return CEComparison([], offset, float("nan"), float("nan"), float("nan"))
    pairs = []
    for pa, pb in raw:
        shifted = pb.E_pole - offset
        pairs.append(CEPair(pa.J, pa.E_pole, shifted, shifted.real - pa.E_pole.real,
                            shifted.imag - pa.E_pole.imag))
    diffs = np.array([pb.E_pole.real - pa.E_pole.real for pa, pb in raw])
    best = float(np.mean(diffs))
    rms = float(np.sqrt(np.mean((diffs - offset) ** 2)))
    rms_best = float(np.sqrt(np.mean((diffs - best) ** 2)))
    return CEComparison(pairs, float(offset), best, rms, rms_best)
