"""Closed-form synthetic S-matrix tables with exactly known singularities.

The model is

    S(lam, E) = a(lam) exp(2i delta(lam))
                * prod_poles [1 + s_n (lam_n - lam_n~) / (lam - lam_n)]
                * prod_zeros (lam - z_m) / (lam - z_m~)

where ``lam_n(E) = alpha + beta E + gamma E^2`` and ``lam_n~`` is the same
polynomial with conjugated coefficients (so it equals ``conj(lam_n)`` for
real E and stays analytic in E).  With strength ``s_n = 1`` the pole factor
is ``(lam - lam_n~)/(lam - lam_n)``, unimodular on the real axis.  For
``0 < s_n <= 1`` the factor has modulus at most one on the real axis, so
tables always satisfy ``|S| <= max a``.

Two background amplitudes are offered: ``"gaussian"``, ``A exp(-((lam-c)/w)^2)``,
and ``"lorentzian"``, ``A prod_k w_k^2 / ((lam-c)^2 + w_k^2)``.  The latter is
rational, so a continued-fraction interpolant reproduces it exactly when
enough samples are available.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import IndexOutOfRange, InputError, PoleOnRealAxis
from .smatrix_io import PartialWaveTable, TransitionLabel, save_table


@dataclass(frozen=True)
class Background:
    kind: str = "gaussian"
    amplitude: float = 1.0
    center: float = 0.0
    width: float = 10.0
    widths: tuple[float, ...] = ()
    phase: tuple[float, ...] = (0.0,)   # ascending coefficients of 2*delta(lam)

    def __post_init__(self):
        if self.kind not in ("gaussian", "lorentzian"):
            raise InputError(f"unknown background kind {self.kind!r}")
        if self.kind == "lorentzian" and not self.widths:
            raise InputError("lorentzian background needs at least one width")

    def amp(self, lam):
        lam = np.asarray(lam, dtype=complex)
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-((lam - self.center) / self.width) ** 2)
        out = np.full(lam.shape, complex(self.amplitude))
        for w in self.widths:
            out = out * (w * w / ((lam - self.center) ** 2 + w * w))
        return out

    def phase_factor(self, lam):
        lam = np.asarray(lam, dtype=complex)
        return np.exp(1j * np.polynomial.polynomial.polyval(lam, self.phase))

    def __call__(self, lam):
        return self.amp(lam) * self.phase_factor(lam)

    def poles(self) -> list[complex]:
        if self.kind != "lorentzian":
            return []
        return [complex(self.center, s * w) for w in self.widths for s in (1.0, -1.0)]


@dataclass(frozen=True)
class Trajectory:
    """Complex polynomial path ``alpha + beta E + gamma E^2`` in the lambda plane."""

    alpha: complex
    beta: complex = 0.0
    gamma: complex = 0.0
    strength: float = 1.0
    label: str = ""

    def at(self, E):
        E = np.asarray(E, dtype=complex)
        return self.alpha + self.beta * E + self.gamma * E * E

    def mirror_at(self, E):
        E = np.asarray(E, dtype=complex)
        return (np.conj(self.alpha) + np.conj(self.beta) * E + np.conj(self.gamma) * E * E)

    def energies_at(self, lam: complex) -> np.ndarray:
        """Complex energies where the path passes through ``lam``."""
        coeffs = [self.gamma, self.beta, self.alpha - lam]
        while coeffs and coeffs[0] == 0:
            coeffs = coeffs[1:]
        if len(coeffs) < 2:
            return np.zeros(0, dtype=complex)
        return np.roots(coeffs).astype(complex)

    def mirror_energies_at(self, lam: complex) -> np.ndarray:
        mirrored = Trajectory(np.conj(self.alpha), np.conj(self.beta), np.conj(self.gamma))
        return mirrored.energies_at(lam)


@dataclass(frozen=True)
class SyntheticModel:
    background: Background = field(default_factory=Background)
    poles: tuple[Trajectory, ...] = ()
    zeros: tuple[Trajectory, ...] = ()
    energies: tuple[float, ...] = tuple(np.linspace(62.09, 101.67, 21))  # meV
    jmax: int = 40
    k_scale: float = 1.0
    k_power: float = 0.0
    transition: TransitionLabel = TransitionLabel(0, 0, 0, 3, 0, 0)

    def k(self, E):
        return self.k_scale * np.asarray(E, dtype=float) ** self.k_power

    def _pole_factor(self, n: int, lam, E):
        t = self.poles[n]
        l0, l0m = t.at(E), t.mirror_at(E)
        return 1.0 + t.strength * (l0 - l0m) / (lam - l0)

    def _zero_factor(self, m: int, lam, E):
        t = self.zeros[m]
        return (lam - t.at(E)) / (lam - t.mirror_at(E))

    def S(self, lam, E):
        """Closed-form S at (possibly complex) ``lam`` and energy ``E``."""
        lam = np.asarray(lam, dtype=complex)
        out = self.background(lam)
        for n in range(len(self.poles)):
            out = out * self._pole_factor(n, lam, E)
        for m in range(len(self.zeros)):
            out = out * self._zero_factor(m, lam, E)
        return out

    def S_of_E(self, J: int):
        """Closed-form S at fixed integer ``J`` as a function of complex energy."""
        lam = J + 0.5
        return lambda E: self.S(lam, E)


def exact_residue(model: SyntheticModel, pole_index: int, E: float) -> complex:
    """``lim (lam - lam_n)(S)`` at the n-th pole trajectory, by the product rule."""
    if not 0 <= pole_index < len(model.poles):
        raise IndexOutOfRange(f"pole index {pole_index} outside 0..{len(model.poles) - 1}")
    t = model.poles[pole_index]
    l0 = complex(t.at(E))
    res = t.strength * (l0 - complex(t.mirror_at(E)))
    res *= complex(model.background(l0))
    for n in range(len(model.poles)):
        if n != pole_index:
            res *= complex(model._pole_factor(n, l0, E))
    for m in range(len(model.zeros)):
        res *= complex(model._zero_factor(m, l0, E))
    return res


def mirror_residue(model: SyntheticModel, zero_index: int, E: float) -> complex:
    """Residue of S at the pole ``z~`` created by the zero trajectory ``zero_index``."""
    if not 0 <= zero_index < len(model.zeros):
        raise IndexOutOfRange(f"zero index {zero_index} outside 0..{len(model.zeros) - 1}")
    t = model.zeros[zero_index]
    zm = complex(t.mirror_at(E))
    res = (zm - complex(t.at(E))) * complex(model.background(zm))
    for n in range(len(model.poles)):
        res *= complex(model._pole_factor(n, zm, E))
    for m in range(len(model.zeros)):
        if m != zero_index:
            res *= complex(model._zero_factor(m, zm, E))
    return res


def exact_zeros(model: SyntheticModel, E: float) -> list[complex]:
    """Zeros of S in the lambda plane (pole-factor zeros and zero trajectories)."""
    out = []
    for t in model.poles:
        l0, l0m = complex(t.at(E)), complex(t.mirror_at(E))
        out.append(l0 - t.strength * (l0 - l0m))
    out.extend(complex(t.at(E)) for t in model.zeros)
    return out


def exact_ce_poles(model: SyntheticModel, J: int) -> list[tuple[str, complex]]:
    """Complex-energy poles of S^J(E): where a pole path crosses ``lam = J + 1/2``."""
    lam = J + 0.5
    out = []
    for n, t in enumerate(model.poles):
        for E in t.energies_at(lam):
            out.append((t.label or f"P{n}", complex(E)))
    for m, t in enumerate(model.zeros):
        for E in t.mirror_energies_at(lam):
            out.append((f"Z{m}~", complex(E)))
    return out


@dataclass
class SyntheticLedger:
    energies: list[float]
    poles: list[dict]          # label, alpha, beta, gamma, per-energy positions and residues
    zeros: list[dict]
    background_poles: list[complex]

    def pole_positions(self, e_index: int) -> list[complex]:
        return [p["positions"][e_index] for p in self.poles]

    def to_json(self) -> str:
        def enc(o):
            if isinstance(o, complex):
                return [o.real, o.imag]
            if isinstance(o, dict):
                return {k: enc(v) for k, v in o.items()}
            if isinstance(o, (list, tuple)):
                return [enc(v) for v in o]
            return o
        return json.dumps(enc(asdict(self)), indent=1, sort_keys=True) + "\n"


def generate(model: SyntheticModel) -> tuple[PartialWaveTable, SyntheticLedger]:
    """Evaluate the model on its grid and return the table with its exact ledger."""
    E = np.asarray(model.energies, dtype=float)
    for n, t in enumerate(model.poles):
        im = np.imag(t.at(E))
        if np.any(np.abs(im) < 1e-12):
            raise PoleOnRealAxis(f"pole trajectory {t.label or n} touches the real axis")
    lam = np.arange(model.jmax + 1) + 0.5
    S = np.array([model.S(lam, e) for e in E])
    table = PartialWaveTable(model.transition, E, model.k(E), S, source="synthetic")

    poles = []
    for n, t in enumerate(model.poles):
        poles.append({
            "label": t.label or f"P{n}",
            "alpha": complex(t.alpha), "beta": complex(t.beta), "gamma": complex(t.gamma),
            "strength": float(t.strength),
            "positions": [complex(t.at(e)) for e in E],
            "residues": [exact_residue(model, n, e) for e in E],
        })
    zeros = []
    for m, t in enumerate(model.zeros):
        label = t.label or f"Z{m}"
        zeros.append({
            "label": label,
            "alpha": complex(t.alpha), "beta": complex(t.beta), "gamma": complex(t.gamma),
            "positions": [complex(t.at(e)) for e in E],
        })
        # the zero factor's denominator is a pole of S as well
        poles.append({
            "label": label + "~",
            "alpha": complex(np.conj(t.alpha)), "beta": complex(np.conj(t.beta)),
            "gamma": complex(np.conj(t.gamma)), "strength": 1.0,
            "positions": [complex(t.mirror_at(e)) for e in E],
            "residues": [mirror_residue(model, m, e) for e in E],
        })
    ledger = SyntheticLedger([float(e) for e in E], poles, zeros, model.background.poles())
    return table, ledger


def write_synthetic(model: SyntheticModel, path, format: str | None = None) -> tuple[Path, Path]:
    """Write the table and a sibling ``.ledger.json``."""
    table, ledger = generate(model)
    path = Path(path)
    save_table(table, path, format)
    ledger_path = path.with_suffix(".ledger.json")
    ledger_path.write_text(ledger.to_json(), encoding="utf-8")
    return path, ledger_path


def tune_strengths(model: SyntheticModel, targets, E: float | None = None,
                   iterations: int = 20) -> SyntheticModel:
    """Rescale pole strengths so that ``|residue_n(E)|`` equals ``targets[n]``.

    Each residue is linear in its own strength but depends on the others
    through the remaining pole factors, hence the fixed-point iteration.
    """
    E = model.energies[0] if E is None else E
    poles = list(model.poles)
    for _ in range(iterations):
        m = replace(model, poles=tuple(poles))
        for n, target in enumerate(targets):
            r = abs(exact_residue(m, n, E))
            poles[n] = replace(poles[n], strength=poles[n].strength * target / r)
    if any(not 0 < t.strength <= 1 for t in poles):
        raise InputError("requested residues need pole strengths outside (0, 1]")
    return replace(model, poles=tuple(poles))


# Ready-made models for the tests, the acceptance suite and the ``synth``
# subcommand.  Pole trajectories are anchored at the first grid energy.

E0 = 62.09
ENERGIES = tuple(np.linspace(62.09, 101.67, 21))


def _traj(lam0: complex, beta: complex, label: str, gamma: complex = 0.0, E0: float = E0,
          **kw) -> Trajectory:
    """Trajectory through ``lam0`` at ``E0`` with slope ``beta`` (and curvature ``gamma``)."""
    alpha = lam0 - beta * E0 - gamma * E0 * E0
    return Trajectory(alpha, beta, gamma, label=label, **kw)


GAUSS40 = Background("gaussian", 1.0, 18.0, 5.0, phase=(0.0, -0.5))
GAUSS20 = Background("gaussian", 1.0, 10.0, 2.7, phase=(0.0, -0.5))
LORENTZ = Background("lorentzian", 1.0, 20.0, widths=(7.0,))
WIDE = Background("gaussian", 1.0, 20.0, 7.0)

POLE_II = _traj(13.0 + 0.9j, 0.08, "II")
POLE_I = _traj(20.0 + 2.5j, 0.1, "I")
POLE_III = _traj(27.0 + 3.2j, 0.12, "III")


def one_pole_model(jmax: int = 40, im: float = 0.9, strength: float = 1.0, **kw) -> SyntheticModel:
    bg = kw.pop("background", GAUSS40)
    pole = _traj(13.0 + 1j * im, 0.08, "II", strength=strength)
    return SyntheticModel(bg, (pole,), jmax=jmax, **kw)


PRESETS = {
    "direct": lambda: SyntheticModel(GAUSS40, ()),
    "one-pole": one_pole_model,
    "two-pole": lambda: SyntheticModel(GAUSS40, (POLE_II, POLE_I)),
    "three-pole": lambda: SyntheticModel(GAUSS40, (POLE_II, POLE_I, POLE_III),
                                         (_traj(33.0 - 1.5j, 0.05, "Z"),)),
    "wide-three-pole": lambda: SyntheticModel(WIDE, (POLE_II, POLE_I, POLE_III),
                                              (_traj(33.0 - 1.5j, 0.05, "Z"),)),
    "rational-three-pole": lambda: SyntheticModel(LORENTZ, (POLE_II, POLE_I, POLE_III),
                                                  (_traj(33.0 - 1.5j, 0.05, "Z"),)),
    "drifting": lambda: SyntheticModel(GAUSS40, (_traj(12.99 + 0.95j, 0.08 + 0.002j, "II"),)),
    "curved": lambda: SyntheticModel(LORENTZ, (_traj(13.0 + 0.9j, 0.08, "II", gamma=2e-4),)),
    "rational-one-pole": lambda: SyntheticModel(LORENTZ, (POLE_II,)),
    "rational-two-pole": lambda: SyntheticModel(LORENTZ, (POLE_II, POLE_I)),
    "wide-two-pole": lambda: SyntheticModel(WIDE, (POLE_II, POLE_I)),
    "j20-one-pole": lambda: SyntheticModel(GAUSS20, (_traj(8.0 + 0.9j, 0.04, "II"),), jmax=20),
    "j20-two-pole": lambda: SyntheticModel(
        Background("gaussian", 1.0, 10.5, 2.8, phase=(0.0, -0.5)),
        (_traj(8.0 + 0.9j, 0.04, "II"), _traj(12.0 + 2.0j, 0.05, "I")), jmax=20),
}
