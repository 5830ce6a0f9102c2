"""Direct partial-wave amplitudes, unfolded amplitudes and their fold-back.

Conventions: ``lam = J + 1/2``, angles in radians, ``theta`` the
scattering angle in ``[0, pi]``.  The partial-wave amplitude is

    f(theta) = (ik)^-1 sum_J lam S^J P_J(cos(pi - theta))

and ``sigma = |f|^2``.  Unfolded amplitudes ``f~`` and ``g~`` are the
``sqrt(lam)``- and ``lam``-weighted Fourier integrals of the continued
``S(lam)`` (see :mod:`camregge.quadrature`).  Folding sums ``f~`` over the
winding angles

    phi_m(theta) = (-1)^(m+1) theta + pi (m + 1/2 + (-1)^m / 2)

with phase ``exp(-i pi/4 - i m pi/2)``.  The interior fold rests on the
large-``lam`` form of ``P_J`` and so carries an error of relative order
``1/(lam sin(theta))``; the two endpoint sums over ``g~`` are exact.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import EndpointTheta, InputError, PhiOutOfGrid, TruncationTooCoarse
from .pade import Axis, PoleDatum, RationalApproximant, Significance, build_approximant
from .quadrature import QuadratureConfig, fourier_integrals
from .smatrix_io import PartialWaveTable, slice_at_energy

logger = logging.getLogger(__name__)

_PHI_MATCH = 1e-9


# --- angular grids -----------------------------------------------------------

@dataclass(frozen=True)
class AngularGrid:
    theta: np.ndarray

    def __post_init__(self):
        th = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if th.size == 0:
            raise InputError("empty theta grid")
        if np.any(np.diff(th) <= 0):
            raise InputError("theta grid must be strictly ascending")
        if th[0] < -1e-12 or th[-1] > np.pi + 1e-12:
            raise InputError("theta must lie in [0, pi]")
        th = np.clip(th, 0.0, np.pi)
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)

    @classmethod
    def from_degrees(cls, start: float, stop: float, step: float) -> "AngularGrid":
        """Inclusive grid ``start..stop`` in degrees; 180 maps to pi exactly."""
        if step <= 0:
            raise InputError("theta step must be positive")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        deg = start + step * np.arange(n)
        th = np.deg2rad(deg)
        th[np.isclose(deg, 180.0, rtol=0, atol=1e-9)] = np.pi
        th[np.isclose(deg, 0.0, rtol=0, atol=1e-9)] = 0.0
        return cls(th)

    @property
    def includes_endpoints(self) -> tuple[bool, bool]:
        return bool(self.theta[0] == 0.0), bool(self.theta[-1] == np.pi)


# --- direct sum --------------------------------------------------------------

def legendre_table(x, jmax: int) -> np.ndarray:
    """``P_J(x)`` for ``J = 0..jmax`` by upward recurrence; shape ``(jmax+1, len(x))``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    P = np.empty((jmax + 1, x.size))
    P[0] = 1.0
    if jmax >= 1:
        P[1] = x
    for J in range(1, jmax):
        P[J + 1] = ((2 * J + 1) * x * P[J] - J * P[J - 1]) / (J + 1)
    return P


@dataclass(frozen=True)
class DCSSurface:
    theta: np.ndarray
    energies: np.ndarray
    amplitude: np.ndarray   # [energy, theta]

    @property
    def sigma(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2


def amplitude_direct(table: PartialWaveTable, theta) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    P = legendre_table(np.cos(np.pi - theta), table.jmax)
    lam = table.lam
    f = (table.S * lam[None, :]) @ P
    return f / (1j * table.k[:, None])


def dcs_direct(table: PartialWaveTable, grid: AngularGrid) -> DCSSurface:
    return DCSSurface(grid.theta, table.energies, amplitude_direct(table, grid.theta))


# --- unfolded amplitudes -----------------------------------------------------

def default_phi_grid(m_max: int = 2, step_deg: float = 0.5, phi_max_deg: float | None = None
                     ) -> np.ndarray:
    """Uniform grid covering every winding angle needed for ``|m| <= m_max``.

    Interior folds need ``[-m_max pi, (m_max+1) pi]``; the endpoint sums need
    ``[-2 m_max pi, (2 m_max+1) pi]``, which is what is returned.
    """
    lo = -2 * m_max * 180.0
    hi = (2 * m_max + 1) * 180.0
    if phi_max_deg is not None:
        hi = max(hi, phi_max_deg)
    n = int(round((hi - lo) / step_deg))
    deg = lo + step_deg * np.arange(n + 1)
    return np.deg2rad(deg)


@dataclass(frozen=True)
class UnfoldedAmplitude:
    phi: np.ndarray
    energies: np.ndarray
    f: np.ndarray       # [energy, phi]
    g: np.ndarray
    err_f: np.ndarray
    err_g: np.ndarray
    lam_cut: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def sample(self, kind: str, phi) -> np.ndarray:
        """Values of ``f`` or ``g`` at arbitrary ``phi``, shape ``[energy, len(phi)]``.

        Grid points are returned exactly; off-grid points use a cubic spline.
        """
        data = {"f": self.f, "g": self.g}[kind]
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        lo, hi = self.phi[0], self.phi[-1]
        out_of = (phi < lo - _PHI_MATCH) | (phi > hi + _PHI_MATCH)
        if np.any(out_of):
            bad = float(phi[out_of][0])
            raise PhiOutOfGrid(
                f"phi={np.rad2deg(bad):.6g} deg outside the unfolded grid "
                f"[{np.rad2deg(lo):.6g}, {np.rad2deg(hi):.6g}] deg; extend the phi grid")
        idx = np.clip(np.searchsorted(self.phi, phi), 0, self.phi.size - 1)
        idx_lo = np.clip(idx - 1, 0, self.phi.size - 1)
        pick = np.where(np.abs(self.phi[idx_lo] - phi) < np.abs(self.phi[idx] - phi), idx_lo, idx)
        exact = np.abs(self.phi[pick] - phi) <= _PHI_MATCH
        out = np.empty((self.energies.size, phi.size), dtype=complex)
        out[:, exact] = data[:, pick[exact]]
        if not np.all(exact):
            spline = CubicSpline(self.phi, data, axis=1)
            out[:, ~exact] = spline(phi[~exact])
        return out


def build_cam_approximants(table: PartialWaveTable, *, interp_tol: float = 1e-13
                           ) -> list[RationalApproximant]:
    return [build_approximant(slice_at_energy(table, i), Axis.CAM, float(table.energies[i]),
                              interp_tol=interp_tol)
            for i in range(table.n_energies)]


def _map_energies(fn, n: int, threads: int):
    if threads <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


def unfold(table: PartialWaveTable, approximants: list | None, phi,
           quadrature: QuadratureConfig = QuadratureConfig(), *, threads: int = 1
           ) -> UnfoldedAmplitude:
    """``f~`` and ``g~`` on ``phi`` for every energy of ``table``.

    ``approximants`` is one callable per energy (a :class:`RationalApproximant`
    or any vectorised ``S(lam)``); ``None`` builds CAM approximants from the
    table.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 1 or phi.size == 0 or np.any(np.diff(phi) <= 0):
        raise InputError("phi grid must be a non-empty ascending 1-D array")
    if approximants is None:
        approximants = build_cam_approximants(table)
    if len(approximants) != table.n_energies:
        raise InputError("need one approximant per energy")
    lam_cut = quadrature.lam_cut if quadrature.lam_cut is not None else table.jmax + 0.5

    def one(i):
        S = approximants[i]
        if isinstance(S, RationalApproximant) and S.log.n_terms == 1 and S.cf_coeffs[0] == 0:
            z = np.zeros(phi.size, complex)
            return z, z, np.zeros(phi.size), np.zeros(phi.size), lam_cut
        r = fourier_integrals(S, phi, lam_cut, quadrature, energy=float(table.energies[i]))
        return r.f, r.g, r.err_f, r.err_g, r.lam_cut

    res = _map_energies(one, table.n_energies, threads)
    return UnfoldedAmplitude(
        phi, table.energies,
        np.array([r[0] for r in res]), np.array([r[1] for r in res]),
        np.array([r[2] for r in res]), np.array([r[3] for r in res]),
        np.array([r[4] for r in res], dtype=float))


# --- folding -----------------------------------------------------------------

def winding_angle(theta: float, m: int) -> float:
    sign = -1.0 if m % 2 == 0 else 1.0
    return sign * theta + np.pi * (m + 0.5 + 0.5 * (1 if m % 2 == 0 else -1))


def winding_angles(theta: float, m_range) -> list[tuple[int, float, str]]:
    """``(m, phi_m, side)`` for each ``m``; side is nearside for even m."""
    if not 0.0 < theta < np.pi:
        raise EndpointTheta(f"theta={theta!r} is an endpoint; use fold_endpoint")
    return [(int(m), winding_angle(theta, int(m)), "nearside" if m % 2 == 0 else "farside")
            for m in m_range]


def fold_prefactor(theta, k) -> np.ndarray:
    """``(ik)^-1 (2 pi sin theta)^-1/2`` as ``[energy, theta]``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    k = np.atleast_1d(np.asarray(k, dtype=float))
    return 1.0 / (1j * k[:, None] * np.sqrt(2 * np.pi * np.sin(theta))[None, :])


def fold_phase(m: int) -> complex:
    return complex(np.exp(-1j * np.pi / 4 - 1j * m * np.pi / 2))


@dataclass(frozen=True)
class FoldedAmplitude:
    theta: np.ndarray
    energies: np.ndarray
    total: np.ndarray                 # [energy, theta]
    terms: dict[int, np.ndarray]      # m -> [energy, theta]
    remainder_bound: np.ndarray       # [energy]

    @property
    def sigma(self) -> np.ndarray:
        return np.abs(self.total) ** 2


def _pole_tail_bound(poles: list[PoleDatum], phi_start: float) -> float:
    """Bound on ``sum_{j>=0} |f~_tail(phi_start + j pi)|`` from the pole set."""
    total = 0.0
    for p in poles:
        if p.significance == Significance.SPURIOUS or p.position.imag <= 0:
            continue
        amp = 2 * np.pi * abs(np.sqrt(p.position) * p.residue)
        q = np.exp(-p.position.imag * np.pi)
        total += amp * np.exp(-p.position.imag * phi_start) / (1.0 - q)
    return total


def fold(unfolded: UnfoldedAmplitude, theta, m_max: int = 2, k=None, *,
         poles: list[list[PoleDatum]] | None = None, fold_tol: float = 1e-3) -> FoldedAmplitude:
    """Fold ``f~`` back onto interior angles with ``|m| <= m_max``.

    The neglected terms are bounded per energy: for ``m > m_max`` by the
    geometric tail of the supplied poles (or by the last retained term when
    no poles are given), for ``m < -m_max`` by the last retained negative
    term.  :class:`TruncationTooCoarse` is raised when the bound exceeds
    ``fold_tol`` times the largest folded amplitude at that energy.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any((theta <= 0) | (theta >= np.pi)):
        raise EndpointTheta("fold needs interior angles; route endpoints to fold_endpoint")
    if k is None:
        raise InputError("fold needs the per-energy wavevector k")
    k = np.asarray(k, dtype=float)
    if m_max < 0:
        raise InputError("m_max must be non-negative")
    pref = fold_prefactor(theta, k)
    terms: dict[int, np.ndarray] = {}
    total = np.zeros((unfolded.energies.size, theta.size), complex)
    for m in range(-m_max, m_max + 1):
        phis = np.array([winding_angle(t, m) for t in theta])
        t = pref * unfolded.sample("f", phis) * fold_phase(m)
        terms[m] = t
        total = total + t

    bound = np.zeros(unfolded.energies.size)
    scale = np.max(np.abs(total), axis=1)
    for ie in range(unfolded.energies.size):
        neg = float(np.max(np.abs(terms[-m_max][ie]))) if m_max > 0 else 0.0
        if poles is not None and poles[ie]:
            # smallest phi_{m_max+1} over the grid sets the slowest decay
            phi_next = min(winding_angle(t, m_max + 1) for t in theta)
            pos = _pole_tail_bound(poles[ie], phi_next) * float(np.max(np.abs(pref[ie])))
        else:
            pos = float(np.max(np.abs(terms[m_max][ie])))
        bound[ie] = pos + neg
        if bound[ie] > fold_tol * scale[ie]:
            raise TruncationTooCoarse(
                f"m-sum truncated at |m|<={m_max} leaves a remainder bound "
                f"{bound[ie]:.3g} > {fold_tol:g} x max|f| at E={unfolded.energies[ie]!r} meV; "
                "raise m_max (and the phi range)")
    return FoldedAmplitude(theta, unfolded.energies, total, terms, bound)


def fold_endpoint(unfolded: UnfoldedAmplitude, which: str, k, m_max: int = 2) -> np.ndarray:
    """Exact forward (``theta = 0``) or backward (``theta = pi``) amplitude per energy."""
    k = np.asarray(k, dtype=float)
    ms = np.arange(-m_max, m_max + 1)
    if which == "forward":
        vals = unfolded.sample("g", (2 * ms + 1) * np.pi)
        return -(vals * (-1.0) ** ms).sum(axis=1) / k
    if which == "backward":
        vals = unfolded.sample("g", 2 * ms * np.pi)
        return (vals * (-1.0) ** ms).sum(axis=1) / (1j * k)
    raise InputError(f"which must be 'forward' or 'backward', got {which!r}")


def fold_surface(unfolded: UnfoldedAmplitude, grid: AngularGrid, k, jmax: int, m_max: int = 2,
                 **fold_kw) -> np.ndarray:
    """Folded amplitude on a full grid ``[energy, theta]``.

    Angles within ``pi / (2 jmax)`` of either endpoint take the endpoint value.
    """
    th = grid.theta
    edge = np.pi / (2 * jmax)
    fwd = th <= edge
    bwd = th >= np.pi - edge
    mid = ~(fwd | bwd)
    out = np.empty((unfolded.energies.size, th.size), complex)
    if np.any(mid):
        out[:, mid] = fold(unfolded, th[mid], m_max, k, **fold_kw).total
    if np.any(fwd):
        out[:, fwd] = fold_endpoint(unfolded, "forward", k, m_max)[:, None]
    if np.any(bwd):
        out[:, bwd] = fold_endpoint(unfolded, "backward", k, m_max)[:, None]
    return out
