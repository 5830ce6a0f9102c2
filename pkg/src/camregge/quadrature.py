"""Adaptive panel quadrature for the half-line Fourier integrals

    f~(phi) = int_0^inf sqrt(lam) S(lam) exp(i lam phi) dlam
    g~(phi) = int_0^inf lam S(lam) exp(i lam phi) dlam

evaluated for a whole vector of ``phi`` at once.

Each panel is integrated with an embedded pair of Gauss-Legendre rules
(``n_low`` and ``n_high`` points); ``|I_high - I_low|`` is the panel error
estimate and panels are bisected until it falls below their share of the
tolerance for every ``phi``.  The first panel uses ``lam = a u^2`` so the
``sqrt(lam)`` endpoint behaviour becomes polynomial.

Beyond ``lam_cut`` the remainder is integrated in closed form with ``S``
continued as a local exponential (see :func:`tail_remainder`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfcx

from .errors import InputError, QuadratureNotConverged

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureConfig:
    atol: float = 1e-14
    rtol: float = 1e-10
    max_depth: int = 30
    n_low: int = 8
    n_high: int = 16
    lam_cut: float | None = None        # default: jmax + 1/2
    remainder_tol: float | None = None  # raise lam_cut until |remainder| falls below this
    lam_cut_max: float = 1e4
    max_panel_width: float = 1.0
    chunk: int = 48

    def __post_init__(self):
        if self.atol < 0 or self.rtol < 0 or (self.atol == 0 and self.rtol == 0):
            raise InputError("quadrature tolerances must be non-negative and not both zero")
        if not 1 <= self.n_low < self.n_high:
            raise InputError("need 1 <= n_low < n_high")


@dataclass(frozen=True)
class FourierResult:
    phi: np.ndarray
    f: np.ndarray
    g: np.ndarray
    err_f: np.ndarray
    err_g: np.ndarray
    remainder_f: np.ndarray
    remainder_g: np.ndarray
    lam_cut: float
    n_panels: int


@lru_cache(maxsize=None)
def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _panel_nodes(a: np.ndarray, b: np.ndarray, n: int, first: np.ndarray):
    """Nodes and weights (panels x n) on [a, b]; ``first`` panels use lam = b u^2."""
    u, w = _gauss(n)
    h = (b - a)[:, None]
    lam = a[:, None] + h * u[None, :]
    wt = h * w[None, :]
    if np.any(first):
        sq_lam = b[first, None] * u[None, :] ** 2
        sq_wt = 2.0 * b[first, None] * u[None, :] * w[None, :]
        lam[first] = sq_lam
        wt[first] = sq_wt
    return lam, wt


def _integrate_panels(S, a, b, first, phi, n):
    lam, wt = _panel_nodes(a, b, n, first)
    s = np.asarray(S(lam.ravel()), dtype=complex).reshape(lam.shape)
    base = s * wt
    kern = np.exp(1j * lam[:, :, None] * phi[None, None, :])
    wf, wg = np.sqrt(lam) * base, lam * base
    If = np.einsum("pn,pnk->pk", wf, kern)
    Ig = np.einsum("pn,pnk->pk", wg, kern)
    return If, Ig, np.abs(wf).sum(axis=1), np.abs(wg).sum(axis=1)


def _abs_scale(S, lam_cut, n=64):
    """``int_0^lam_cut |F|`` for both weights, by a fixed composite rule."""
    edges = np.linspace(0.0, lam_cut, max(2, int(np.ceil(lam_cut)) + 1))
    a, b = edges[:-1], edges[1:]
    first = np.zeros(a.size, bool)
    first[0] = True
    lam, wt = _panel_nodes(a, b, 16, first)
    s = np.abs(np.asarray(S(lam.ravel()), dtype=complex)).reshape(lam.shape)
    return float(np.sum(np.sqrt(lam) * s * wt)), float(np.sum(lam * s * wt))


def _log_derivatives(S, x: float) -> tuple[complex, complex]:
    """First and second derivatives of ``log S`` at ``x`` by 5-point stencils.

    The second derivative only enters as a correction, so it uses a wider
    step where rounding matters less.
    """
    h1, h2 = 1e-3, 4e-3
    off = np.array([-2.0, -1.0, 1.0, 2.0])
    v0 = complex(np.asarray(S(np.array([x])), dtype=complex)[0])
    if v0 == 0:
        return 0j, 0j
    a = np.asarray(S(x + h1 * off), dtype=complex)
    b = np.asarray(S(x + h2 * off), dtype=complex)
    l1 = (a[0] - 8 * a[1] + 8 * a[2] - a[3]) / (12 * h1) / v0
    d1 = (b[0] - 8 * b[1] + 8 * b[2] - b[3]) / (12 * h2)
    d2 = (-b[0] + 16 * b[1] - 30 * v0 + 16 * b[2] - b[3]) / (12 * h2 * h2)
    l2 = d2 / v0 - (d1 / v0) ** 2
    return complex(l1), complex(l2)


def _scaled_upper_gamma(power: float, z):
    """``Gamma(power + 1, z) exp(z)`` for ``power`` in {1/2, 1}."""
    if power == 1.0:
        return z + 1.0
    r = np.sqrt(z)
    return r + 0.5 * np.sqrt(np.pi) * erfcx(r)


def _tail_terms(S, c: float, phi: np.ndarray):
    """Remainders for both weights and an estimate of their error."""
    s_c = complex(np.asarray(S(np.array([c])), dtype=complex)[0])
    zero = np.zeros(phi.size, complex)
    if s_c == 0:
        return zero, zero.copy(), np.zeros(phi.size), np.zeros(phi.size)
    l1, l2 = _log_derivatives(S, c)
    d = -l1 - 1j * phi
    d = np.where(np.abs(d) < 1e-8, np.nan, d)
    base = s_c * np.exp(1j * c * phi)
    out, err = [], []
    for power in (0.5, 1.0):
        # S as a local exponential times the exact weight integral
        R = base * d ** -(power + 1) * _scaled_upper_gamma(power, d * c)
        # curvature of log S: leading correction and the size of the next term
        corr = base * c ** power * l2 / d ** 3
        nxt = np.abs(base) * c ** power * 3.0 * abs(l2) ** 2 / np.abs(d) ** 5
        # a large correction means the expansion itself is not to be trusted
        small = np.abs(corr) <= 0.1 * np.abs(R)
        out.append(np.where(small, R + corr, R))
        err.append(np.where(small, nxt, np.abs(corr)))
    return out[0], out[1], err[0], err[1]


def tail_remainder(S, c: float, phi: np.ndarray):
    """Closed-form estimate of ``int_c^inf F exp(i lam phi)`` for both weights.

    ``S`` is continued beyond ``c`` as ``S(c) exp(-kappa x + nu x^2 / 2)``,
    ``x = lam - c``, from the first two derivatives of ``log S``.  The
    exponential part is integrated exactly against the ``lam^p`` weight
    (an upper incomplete gamma function); ``nu`` enters to first order.
    """
    R_f, R_g, _, _ = _tail_terms(S, c, np.asarray(phi, dtype=float))
    return R_f, R_g


def _remainder_error(S, c, phi, cfg, R_f, R_g):
    """Consistency check of the tail model one unit inside the cut, plus the
    size of the first neglected term of the expansion."""
    delta = min(1.0, 0.5 * c)
    lo = c - delta
    Rf_lo, Rg_lo = tail_remainder(S, lo, phi)
    nsub = int(np.ceil(delta * (np.max(np.abs(phi), initial=0.0) + 1.0) / 2.0)) + 1
    edges = np.linspace(lo, c, nsub + 1)
    If, Ig, _, _ = _integrate_panels(S, edges[:-1], edges[1:], np.zeros(nsub, bool), phi,
                                     cfg.n_high)
    Qf, Qg = If.sum(axis=0), Ig.sum(axis=0)
    _, _, tf, tg = _tail_terms(S, c, phi)
    ef = np.abs(Rf_lo - Qf - R_f) + tf
    eg = np.abs(Rg_lo - Qg - R_g) + tg
    return ef, eg


def _adaptive(S, phi, lam_cut, cfg: QuadratureConfig, energy=None):
    phimax = float(np.max(np.abs(phi), initial=0.0))
    h0 = min(cfg.max_panel_width, 0.375 * cfg.n_high / max(phimax, 1e-300))
    n0 = max(1, int(np.ceil(lam_cut / h0)))
    edges = np.linspace(0.0, lam_cut, n0 + 1)
    scale_f, scale_g = _abs_scale(S, lam_cut)
    tol_f = cfg.atol + cfg.rtol * scale_f
    tol_g = cfg.atol + cfg.rtol * scale_g

    If = np.zeros(phi.size, complex)
    Ig = np.zeros(phi.size, complex)
    Ef = np.zeros(phi.size)
    Eg = np.zeros(phi.size)
    todo = [(edges[i], edges[i + 1], 0) for i in range(n0)]
    n_accepted = 0
    while todo:
        batch, todo = todo[:cfg.chunk], todo[cfg.chunk:]
        a = np.array([p[0] for p in batch])
        b = np.array([p[1] for p in batch])
        depth = np.array([p[2] for p in batch])
        first = a == 0.0
        hf, hg, af, ag = _integrate_panels(S, a, b, first, phi, cfg.n_high)
        lf, lg, _, _ = _integrate_panels(S, a, b, first, phi, cfg.n_low)
        ef = np.abs(hf - lf)
        eg = np.abs(hg - lg)
        share = (b - a) / lam_cut
        # exp(i lam phi) carries an absolute error ~ lam*phi*eps, so differences
        # below that (times the panel's own magnitude) are rounding noise
        floor = _EPS * (100.0 + b * phimax)
        ok = ((ef.max(axis=1) <= np.maximum(tol_f * share, floor * af))
              & (eg.max(axis=1) <= np.maximum(tol_g * share, floor * ag)))
        If += hf[ok].sum(axis=0)
        Ig += hg[ok].sum(axis=0)
        Ef += ef[ok].sum(axis=0)
        Eg += eg[ok].sum(axis=0)
        n_accepted += int(ok.sum())
        for i in np.nonzero(~ok)[0]:
            if depth[i] >= cfg.max_depth:
                worst = int(np.argmax(ef[i] / tol_f + eg[i] / tol_g))
                raise QuadratureNotConverged(float(phi[worst]), energy)
            mid = 0.5 * (a[i] + b[i])
            todo.append((a[i], mid, depth[i] + 1))
            todo.append((mid, b[i], depth[i] + 1))
    return If, Ig, Ef, Eg, n_accepted


def fourier_integrals(S, phi, lam_cut: float, config: QuadratureConfig = QuadratureConfig(),
                      energy: float | None = None) -> FourierResult:
    """Both unfolded integrals of the callable ``S`` (vectorised over real ``lam``).

    ``S`` must be evaluable slightly beyond ``lam_cut`` (the remainder uses
    its logarithmic derivative there).  With ``config.remainder_tol`` set,
    ``lam_cut`` is doubled until the remainder estimate drops below it.
    """
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    if lam_cut <= 0:
        raise InputError("lam_cut must be positive")
    while True:
        R_f, R_g = tail_remainder(S, lam_cut, phi)
        if (config.remainder_tol is None or lam_cut >= config.lam_cut_max
                or not np.all(np.isfinite(R_f))
                or max(np.max(np.abs(R_f)), np.max(np.abs(R_g))) <= config.remainder_tol):
            break
        lam_cut = min(2.0 * lam_cut, config.lam_cut_max)
        logger.debug("raising lam_cut to %g", lam_cut)
    If, Ig, Ef, Eg, n = _adaptive(S, phi, lam_cut, config, energy)
    bad = ~np.isfinite(R_f) | ~np.isfinite(R_g)
    R_f = np.where(bad, 0.0, R_f)
    R_g = np.where(bad, 0.0, R_g)
    rf_err, rg_err = _remainder_error(S, lam_cut, phi, config, R_f, R_g)
    rf_err = np.where(bad | ~np.isfinite(rf_err), np.inf, rf_err)
    rg_err = np.where(bad | ~np.isfinite(rg_err), np.inf, rg_err)
    return FourierResult(phi, If + R_f, Ig + R_g, Ef + rf_err, Eg + rg_err, R_f, R_g,
                         float(lam_cut), n)
