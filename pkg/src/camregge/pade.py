"""Rational (Pade) continuation of S along real J or real E.

The interpolant is a Thiele-type continued fraction in the
Vidberg-Serene form

    C(z) = a0 / (1 + a1 (z - z0) / (1 + a2 (z - z1) / (1 + ...)))

built by inverse differences.  Nodes are taken greedily: the next node is
always the sample the current fraction reproduces worst, and construction
stops as soon as every unused sample is reproduced to ``interp_tol``.  On
exactly rational data this terminates at the minimal length, which is what
makes pole recovery on synthetic tables exact to rounding.

Poles and zeros are roots of the denominator and numerator polynomials
obtained from the fraction's three-term recurrence; roots come from the
companion matrix (in a shifted and scaled variable) and are polished by
Newton steps on the recurrence itself.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.polynomial import Polynomial

from .errors import DegenerateSamples, IllConditioned, InputError, MultipleRoot

logger = logging.getLogger(__name__)


class Axis(str, Enum):
    CAM = "J_at_fixed_E"
    ENERGY = "E_at_fixed_J"


class Significance(str, Enum):
    SIGNIFICANT = "significant"
    BACKGROUND = "background"
    SPURIOUS = "spurious"


@dataclass(frozen=True)
class ConstructionLog:
    n_terms: int
    terminated_early: bool
    max_residual: float
    condition: float
    skipped: tuple[tuple[float, str], ...] = ()


@dataclass(frozen=True)
class RationalApproximant:
    """Continued-fraction interpolant of S along one real axis.

    ``nodes``/``values`` are all samples offered; ``cf_nodes`` are the
    abscissae actually used, in the order the fraction consumes them, with
    ``cf_coeffs`` of the same length.
    """

    nodes: np.ndarray
    values: np.ndarray
    cf_nodes: np.ndarray
    cf_coeffs: np.ndarray
    axis: Axis
    anchor: float
    log: ConstructionLog

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        a, zn = self.cf_coeffs, self.cf_nodes
        t = np.ones_like(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            for p in range(a.size - 1, 0, -1):
                t = 1.0 + a[p] * (z - zn[p - 1]) / t
            out = a[0] / t
        return out if out.ndim else complex(out)

    @property
    def center(self) -> float:
        return 0.5 * (float(self.nodes.min()) + float(self.nodes.max()))

    @property
    def halfwidth(self) -> float:
        return max(0.5 * (float(self.nodes.max()) - float(self.nodes.min())), 1e-300)

    def ratio_terms(self, z: complex, order: int = 1):
        """Numerator and denominator at ``z`` with derivatives up to ``order``.

        Returns ``(A, B)`` where each is a list ``[P(z), P'(z), ...]``.  The
        pair is jointly rescaled during the recurrence, so only ratios are
        meaningful.
        """
        a, zn = self.cf_coeffs, self.cf_nodes
        z = complex(z)
        # columns: value and derivatives
        A_prev = np.zeros(order + 1, dtype=complex)
        A_cur = np.zeros(order + 1, dtype=complex)
        A_cur[0] = a[0]
        B_prev = np.zeros(order + 1, dtype=complex)
        B_prev[0] = 1.0
        B_cur = np.zeros(order + 1, dtype=complex)
        B_cur[0] = 1.0
        for p in range(1, a.size):
            lin = a[p] * (z - zn[p - 1])
            A_new = A_cur + lin * A_prev
            B_new = B_cur + lin * B_prev
            # product rule: d^n[(z - z_p) a P] = (z - z_p) a P^(n) + n a P^(n-1)
            A_new[1:] += a[p] * np.arange(1, order + 1) * A_prev[:-1]
            B_new[1:] += a[p] * np.arange(1, order + 1) * B_prev[:-1]
            A_prev, A_cur, B_prev, B_cur = A_cur, A_new, B_cur, B_new
            s = max(abs(B_cur[0]), abs(B_prev[0]), abs(A_cur[0]), 1e-300)
            if s > 1e100 or s < 1e-100:
                A_prev, A_cur, B_prev, B_cur = A_prev / s, A_cur / s, B_prev / s, B_cur / s
        return list(A_cur), list(B_cur)

    def polynomials(self) -> tuple[Polynomial, Polynomial]:
        """Numerator and denominator in the scaled variable ``t = (z - center) / halfwidth``."""
        c, h = self.center, self.halfwidth
        a = self.cf_coeffs
        tn = (self.cf_nodes - c) / h
        A_prev, A_cur = Polynomial([0j]), Polynomial([complex(a[0])])
        B_prev, B_cur = Polynomial([1 + 0j]), Polynomial([1 + 0j])
        for p in range(1, a.size):
            lin = Polynomial([-tn[p - 1] * a[p] * h, a[p] * h])
            A_prev, A_cur = A_cur, A_cur + lin * A_prev
            B_prev, B_cur = B_cur, B_cur + lin * B_prev
        return A_cur, B_cur


def _cf_eval(zn, a, z):
    t = np.ones_like(z, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        for p in range(len(a) - 1, 0, -1):
            t = 1.0 + a[p] * (z - zn[p - 1]) / t
        return a[0] / t


def build_approximant(samples, axis: Axis | str = Axis.CAM, anchor: float = float("nan"),
                      *, interp_tol: float = 1e-13) -> RationalApproximant:
    """Continued-fraction interpolant through ``samples = [(x, S), ...]``.

    Nodes whose inverse difference cannot be formed are skipped and noted
    in ``log.skipped`` rather than aborting the construction.
    """
    axis = Axis(axis)
    if len(samples) < 4:
        raise InputError(f"need at least 4 samples, got {len(samples)}")
    x = np.array([float(s[0]) for s in samples])
    f = np.array([complex(s[1]) for s in samples])
    order = np.argsort(x, kind="stable")
    if np.any(np.diff(x[order]) == 0):
        dup = x[order][np.nonzero(np.diff(x[order]) == 0)[0][0]]
        raise DegenerateSamples(f"repeated abscissa {dup!r}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(f))):
        raise InputError("samples must be finite")

    scale = float(np.max(np.abs(f)))
    skipped: list[tuple[float, str]] = []
    if scale == 0.0:
        log = ConstructionLog(1, True, 0.0, 1.0)
        return RationalApproximant(x, f, x[:1].copy(), np.zeros(1, complex), axis, anchor, log)

    remaining = list(range(x.size))
    g = f.copy()
    k = int(np.argmax(np.abs(f)))
    used: list[int] = []
    coeffs: list[complex] = []
    terminated = False
    max_res = 0.0
    while True:
        used.append(k)
        coeffs.append(g[k])
        remaining.remove(k)
        if not remaining:
            break
        zn, a = x[used], np.array(coeffs)
        rem = np.array(remaining)
        resid = np.abs(_cf_eval(zn, a, x[rem].astype(complex)) - f[rem])
        resid[~np.isfinite(resid)] = np.inf
        max_res = float(resid.max())
        if max_res <= interp_tol * scale:
            terminated = True
            break
        # inverse differences for the next level
        gk, xk = g[k], x[k]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            g_next = (gk - g[rem]) / ((x[rem] - xk) * g[rem])
        ok = np.isfinite(g_next)
        for i in rem[~ok]:
            skipped.append((float(x[i]), "inverse-difference denominator vanished"))
            logger.info("node %r skipped: inverse-difference denominator vanished", x[i])
            remaining.remove(int(i))
        if not remaining:
            break
        g = g.copy()
        g[rem[ok]] = g_next[ok]
        keep = ok
        k = int(rem[keep][np.argmax(resid[keep])])

    a = np.array(coeffs)
    mags = np.abs(a[1:])
    mags = mags[mags > 0]
    cond = float(mags.max() / mags.min()) if mags.size else 1.0
    if not terminated:
        zn = x[used]
        all_res = np.abs(_cf_eval(zn, a, x.astype(complex)) - f)
        max_res = float(np.max(all_res[np.isfinite(all_res)], initial=0.0))
    log = ConstructionLog(a.size, terminated, max_res / scale, cond, tuple(skipped))
    logger.debug("approximant: %d terms, early=%s, condition %.3g", a.size, terminated, cond)
    return RationalApproximant(x, f, x[used], a, axis, anchor, log)


# --- pole and zero extraction ------------------------------------------------

@dataclass(frozen=True)
class SearchBox:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_max > self.re_min and self.im_max > self.im_min):
            raise InputError(f"search box must have positive area: {self}")

    def contains(self, z: complex) -> bool:
        return (self.re_min <= z.real <= self.re_max) and (self.im_min <= z.imag <= self.im_max)

    @classmethod
    def cam_default(cls, jmax: int, im_cap: float = 4.0) -> "SearchBox":
        return cls(0.0, jmax + 1.0, 0.0, im_cap)

    @classmethod
    def energy_default(cls, energies) -> "SearchBox":
        lo, hi = float(np.min(energies)), float(np.max(energies))
        span = hi - lo
        return cls(lo - span, hi + span, -span, span)


@dataclass(frozen=True)
class SignificanceConfig:
    im_max: float = 3.0
    res_min: float = 1e-4
    im_max_energy: float = float("inf")


@dataclass(frozen=True)
class PoleSearchConfig:
    doublet_radius: float = 1e-3
    dedupe: float = 1e-8
    r_contour: float = 1e-3
    residue_check_tol: float = 1e-6
    multiple_tol: float = 1e-6
    newton_steps: int = 3
    im_cap: float = 4.0
    jmax: int | None = None
    significance: SignificanceConfig = field(default_factory=SignificanceConfig)


@dataclass(frozen=True)
class PoleDatum:
    position: complex
    residue: complex
    anchor: float
    significance: Significance
    axis: Axis = Axis.CAM
    ill_conditioned: bool = False
    zero_distance: float = float("inf")


@dataclass(frozen=True)
class ZeroDatum:
    position: complex
    anchor: float


def _polish(approx: RationalApproximant, z: complex, which: int, steps: int) -> complex:
    """Newton steps on the numerator (which=0) or denominator (which=1)."""
    for _ in range(steps):
        A, B = approx.ratio_terms(z, order=1)
        P = (A, B)[which]
        if P[1] == 0 or not np.isfinite(P[1]):
            break
        dz = P[0] / P[1]
        if not np.isfinite(dz) or abs(dz) > 0.1 * approx.halfwidth:
            break
        z = z - dz
        if abs(dz) <= 1e-15 * max(abs(z), 1.0):
            break
    return complex(z)


def _roots(poly: Polynomial, c: float, h: float) -> np.ndarray:
    poly = poly.trim(tol=0)
    if poly.degree() < 1:
        return np.zeros(0, dtype=complex)
    return c + h * poly.roots().astype(complex)


def residue_check(approx: RationalApproximant, pole: complex, r_contour: float = 1e-3,
                  n_points: int = 64) -> tuple[complex, complex]:
    """Residue from ``A/B'`` and from the circular contour average."""
    A, B = approx.ratio_terms(pole, order=1)
    by_derivative = A[0] / B[1]
    w = np.exp(2j * np.pi * np.arange(n_points) / n_points)
    pts = pole + r_contour * w
    by_contour = complex(np.mean(approx(pts) * r_contour * w))
    return complex(by_derivative), by_contour


def residue_at(approx: RationalApproximant, pole: complex, *, multiple_tol: float = 1e-6) -> complex:
    """``numerator(pole) / denominator'(pole)`` for a simple root of the denominator.

    Raises :class:`MultipleRoot` when ``|B'/B''|`` (half the distance to a
    neighbouring root) is below ``multiple_tol`` times the node half-width.
    """
    A, B = approx.ratio_terms(pole, order=2)
    if B[1] == 0 or abs(B[1]) <= multiple_tol * approx.halfwidth * abs(B[2]):
        raise MultipleRoot(f"denominator derivative vanishes at {pole!r}")
    return complex(A[0] / B[1])


def classify_significance(pole: PoleDatum, thresholds: SignificanceConfig = SignificanceConfig()
                          ) -> Significance:
    if pole.axis == Axis.ENERGY:
        im_ok = abs(pole.position.imag) <= thresholds.im_max_energy
    else:
        im_ok = pole.position.imag <= thresholds.im_max
    if im_ok and abs(pole.residue) >= thresholds.res_min:
        return Significance.SIGNIFICANT
    return Significance.BACKGROUND


def find_poles_zeros(approx: RationalApproximant, search_box: SearchBox | None = None,
                     config: PoleSearchConfig = PoleSearchConfig()
                     ) -> tuple[list[PoleDatum], list[ZeroDatum]]:
    """Poles (with residues and significance) and zeros inside ``search_box``.

    A pole with a numerator root closer than ``config.doublet_radius`` is a
    Froissart doublet: it is kept but tagged spurious, and the paired zero
    is dropped from the zero list.
    """
    if search_box is None:
        if approx.axis == Axis.CAM:
            jmax = config.jmax if config.jmax is not None else int(round(approx.nodes.max() - 0.5))
            search_box = SearchBox.cam_default(jmax, config.im_cap)
        else:
            search_box = SearchBox.energy_default(approx.nodes)
    num, den = approx.polynomials()
    if not np.any(den.coef != 0):
        raise IllConditioned("denominator polynomial vanishes identically")
    c, h = approx.center, approx.halfwidth

    pole_roots = [_polish(approx, z, 1, config.newton_steps) for z in _roots(den, c, h)]
    zero_roots = np.array([_polish(approx, z, 0, config.newton_steps) for z in _roots(num, c, h)],
                          dtype=complex)

    trust = None
    if approx.axis == Axis.CAM:
        jmax = config.jmax if config.jmax is not None else int(round(approx.nodes.max() - 0.5))
        trust = (-1.0, jmax + 2.0, config.im_cap)

    candidates: list[complex] = []
    for z in sorted(pole_roots, key=lambda z: (z.real, z.imag)):
        if not np.isfinite(z) or not search_box.contains(z):
            continue
        if trust is not None and not (trust[0] <= z.real <= trust[1] and z.imag <= trust[2]):
            continue
        if any(abs(z - q) <= config.dedupe for q in candidates):
            continue
        candidates.append(z)

    poles: list[PoleDatum] = []
    paired_zeros: set[int] = set()
    for z in candidates:
        if zero_roots.size:
            d = np.abs(zero_roots - z)
            iz = int(np.argmin(d))
            dist = float(d[iz])
        else:
            iz, dist = -1, float("inf")
        if dist <= config.doublet_radius:
            paired_zeros.add(iz)
            A, B = approx.ratio_terms(z, order=1)
            res = complex(A[0] / B[1]) if B[1] != 0 else complex("nan")
            poles.append(PoleDatum(z, res, approx.anchor, Significance.SPURIOUS, approx.axis,
                                   False, dist))
            continue
        res = residue_at(approx, z, multiple_tol=config.multiple_tol)
        _, res_c = residue_check(approx, z, config.r_contour)
        bad = abs(res - res_c) > config.residue_check_tol * abs(res)
        if bad:
            logger.info("pole %r: derivative and contour residues disagree (%r vs %r)", z, res, res_c)
        datum = PoleDatum(z, res, approx.anchor, Significance.BACKGROUND, approx.axis, bad, dist)
        sig = classify_significance(datum, config.significance)
        poles.append(PoleDatum(z, res, approx.anchor, sig, approx.axis, bad, dist))

    zeros: list[ZeroDatum] = []
    seen: list[complex] = []
    for iz, z in enumerate(zero_roots):
        if iz in paired_zeros or not np.isfinite(z) or not search_box.contains(z):
            continue
        if any(abs(z - q) <= config.dedupe for q in seen):
            continue
        seen.append(z)
        zeros.append(ZeroDatum(complex(z), approx.anchor))
    zeros.sort(key=lambda d: d.position.real)
    return poles, zeros
