"""S-matrix tables: on-disk formats, validation and slicing.

A table holds the body-fixed element S^J(E) for one zero-helicity
state-to-state transition on an integer ``J = 0..jmax`` by energy grid,
together with the initial wavevector ``k`` at every energy.

CSV layout (one file per transition)::

    # transition: 0 0 0 -> 3 0 0
    # jmax: 30
    E_meV,k,J,Re_S,Im_S
    62.09,5.123,0,0.01,-0.002
    ...

Rows are sorted by ``(E, J)``; the column-name line is optional on input.
The JSON layout is a single object with keys ``transition``, ``energies``,
``k``, ``jmax``, ``s_re`` and ``s_im`` (the last two row-major
``[energy][J]``).  Floats are written with Python's shortest round-trip
``repr`` so that load/save cycles are bit-exact.
"""

from __future__ import annotations

import json
import logging
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    HelicityNotSupported,
    IndexOutOfRange,
    InputError,
    MalformedRow,
    MissingJ,
    NonMonotonicEnergy,
    UnitarityViolation,
)

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("E_meV", "k", "J", "Re_S", "Im_S")
_TRANSITION_RE = re.compile(
    r"^\s*(\d+)\s+(\d+)\s+(\d+)\s*->\s*(\d+)\s+(\d+)\s+(\d+)\s*$"
)


@dataclass(frozen=True)
class TransitionLabel:
    v_i: int
    j_i: int
    Omega_i: int
    v_f: int
    j_f: int
    Omega_f: int

    def __post_init__(self):
        for name in ("v_i", "j_i", "Omega_i", "v_f", "j_f", "Omega_f"):
            if getattr(self, name) < 0:
                raise InputError(f"quantum number {name} must be non-negative")
        if self.Omega_i != 0 or self.Omega_f != 0:
            raise HelicityNotSupported(
                f"only zero-helicity transitions are supported, got "
                f"Omega_i={self.Omega_i}, Omega_f={self.Omega_f}"
            )

    @classmethod
    def parse(cls, text: str) -> "TransitionLabel":
        m = _TRANSITION_RE.match(text)
        if m is None:
            raise InputError(f"cannot parse transition {text!r}; expected 'vi ji Oi -> vf jf Of'")
        return cls(*(int(g) for g in m.groups()))

    def __str__(self) -> str:
        return (f"{self.v_i} {self.j_i} {self.Omega_i} -> "
                f"{self.v_f} {self.j_f} {self.Omega_f}")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PartialWaveTable:
    """Validated S-matrix table; immutable once constructed.

    ``S[e, J]`` is the element at ``energies[e]`` and total angular
    momentum ``J``.
    """

    transition: TransitionLabel
    energies: np.ndarray
    k: np.ndarray
    S: np.ndarray
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "energies", _frozen(np.asarray(self.energies, dtype=float)))
        object.__setattr__(self, "k", _frozen(np.asarray(self.k, dtype=float)))
        object.__setattr__(self, "S", _frozen(np.asarray(self.S, dtype=complex)))
        if self.S.ndim != 2 or self.S.shape[0] != self.energies.size:
            raise InputError(f"S must have shape (n_energies, jmax+1), got {self.S.shape}")
        if self.k.shape != self.energies.shape:
            raise InputError("k must have one entry per energy")

    @property
    def jmax(self) -> int:
        return self.S.shape[1] - 1

    @property
    def n_energies(self) -> int:
        return self.energies.size

    @property
    def lam(self) -> np.ndarray:
        """Half-integer angular momenta ``J + 1/2``."""
        return np.arange(self.jmax + 1) + 0.5


def validate_table(table: PartialWaveTable, *, unitarity: str = "error",
                   unitarity_tol: float = 1e-6, jmax_warn: int = 20) -> PartialWaveTable:
    """Check the table invariants; returns the table unchanged.

    ``unitarity`` is ``"error"`` (default) or ``"warn"``.
    """
    e = table.energies
    if e.size == 0:
        raise InputError("table has no energies")
    bad = np.nonzero(np.diff(e) <= 0)[0]
    if bad.size:
        i = int(bad[0])
        raise NonMonotonicEnergy(
            f"energies must be strictly increasing: E[{i}]={e[i]!r} >= E[{i + 1}]={e[i + 1]!r}"
        )
    if np.any(~np.isfinite(table.k)) or np.any(table.k <= 0):
        i = int(np.nonzero(~(table.k > 0))[0][0])
        raise InputError(f"wavevector must be positive, got k={table.k[i]!r} at E={e[i]!r}")
    if not np.all(np.isfinite(table.S)):
        raise InputError("S contains non-finite entries")
    mod = np.abs(table.S)
    worst = np.unravel_index(int(np.argmax(mod)), mod.shape)
    if mod[worst] > 1.0 + unitarity_tol:
        err = UnitarityViolation(float(e[worst[0]]), int(worst[1]), float(mod[worst]), unitarity_tol)
        if unitarity == "error":
            raise err
        warnings.warn(str(err), stacklevel=2)
    if table.jmax < jmax_warn:
        warnings.warn(
            f"jmax={table.jmax} is below {jmax_warn}; the rational continuation may be poorly "
            "constrained", stacklevel=2)
    return table


def _parse_csv(path: Path) -> PartialWaveTable:
    transition = None
    jmax = None
    rows: list[tuple[int, float, float, int, complex]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, _, value = body.partition(":")
                key = key.strip().lower()
                if key == "transition":
                    transition = TransitionLabel.parse(value)
                elif key == "jmax":
                    try:
                        jmax = int(value)
                    except ValueError:
                        raise MalformedRow(lineno, f"bad jmax {value.strip()!r}") from None
                continue
            if line.replace(" ", "").startswith("E_meV"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 5:
                raise MalformedRow(lineno, f"expected 5 comma-separated fields, got {len(parts)}")
            try:
                E, k = float(parts[0]), float(parts[1])
                J = int(parts[2])
                s = complex(float(parts[3]), float(parts[4]))
            except ValueError as exc:
                raise MalformedRow(lineno, str(exc)) from None
            rows.append((lineno, E, k, J, s))
    if transition is None:
        raise InputError(f"{path}: missing '# transition:' header")
    if jmax is None:
        raise InputError(f"{path}: missing '# jmax:' header")
    if jmax < 0:
        raise InputError(f"jmax must be non-negative, got {jmax}")
    if not rows:
        raise InputError(f"{path}: no data rows")

    energies: list[float] = []
    ks: list[float] = []
    blocks: list[dict[int, complex]] = []
    for lineno, E, k, J, s in rows:
        if not energies or E != energies[-1]:
            if energies and E < energies[-1]:
                raise NonMonotonicEnergy(f"line {lineno}: E={E!r} after E={energies[-1]!r}")
            energies.append(E)
            ks.append(k)
            blocks.append({})
        elif k != ks[-1]:
            raise MalformedRow(lineno, f"k={k!r} differs from k={ks[-1]!r} earlier at the same energy")
        if not 0 <= J <= jmax:
            raise MalformedRow(lineno, f"J={J} outside 0..{jmax}")
        if J in blocks[-1]:
            raise MalformedRow(lineno, f"duplicate row for E={E!r}, J={J}")
        blocks[-1][J] = s

    S = np.empty((len(energies), jmax + 1), dtype=complex)
    for ie, block in enumerate(blocks):
        for J in range(jmax + 1):
            if J not in block:
                raise MissingJ(energies[ie], J)
            S[ie, J] = block[J]
    return PartialWaveTable(transition, np.array(energies), np.array(ks), S, source=str(path))


def _parse_json(path: Path) -> PartialWaveTable:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedRow(exc.lineno, exc.msg) from None
    try:
        tr = obj["transition"]
        transition = (TransitionLabel(*map(int, tr)) if isinstance(tr, list)
                      else TransitionLabel.parse(tr))
        energies = np.asarray(obj["energies"], dtype=float)
        k = np.asarray(obj["k"], dtype=float)
        jmax = int(obj["jmax"])
        s_re = obj["s_re"]
        s_im = obj["s_im"]
    except KeyError as exc:
        raise InputError(f"{path}: missing key {exc.args[0]!r}") from None
    if len(s_re) != energies.size or len(s_im) != energies.size:
        raise InputError(f"{path}: s_re/s_im must have one row per energy")
    for ie, (r, i) in enumerate(zip(s_re, s_im)):
        if len(r) != jmax + 1 or len(i) != jmax + 1:
            missing = min(len(r), len(i))
            raise MissingJ(float(energies[ie]), missing)
    S = np.asarray(s_re, dtype=float) + 1j * np.asarray(s_im, dtype=float)
    return PartialWaveTable(transition, energies, k, S, source=str(path))


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        fmt = fmt.lower()
    else:
        fmt = path.suffix.lower().lstrip(".")
    if fmt not in ("csv", "json"):
        raise InputError(f"unknown table format {fmt!r}; use csv or json")
    return fmt


def load_table(path, format: str | None = None, *, unitarity: str = "error",
               unitarity_tol: float = 1e-6, jmax_warn: int = 20) -> PartialWaveTable:
    """Read and validate a table from ``path`` (format inferred from suffix)."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    fmt = _infer_format(path, format)
    table = _parse_csv(path) if fmt == "csv" else _parse_json(path)
    return validate_table(table, unitarity=unitarity, unitarity_tol=unitarity_tol,
                          jmax_warn=jmax_warn)


def save_table(table: PartialWaveTable, path, format: str | None = None) -> Path:
    path = Path(path)
    fmt = _infer_format(path, format)
    if fmt == "csv":
        lines = [f"# transition: {table.transition}", f"# jmax: {table.jmax}", ",".join(CSV_COLUMNS)]
        for ie, E in enumerate(table.energies):
            k = repr(float(table.k[ie]))
            for J in range(table.jmax + 1):
                s = table.S[ie, J]
                lines.append(f"{float(E)!r},{k},{J},{float(s.real)!r},{float(s.imag)!r}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        obj = {
            "transition": str(table.transition),
            "energies": [float(x) for x in table.energies],
            "k": [float(x) for x in table.k],
            "jmax": table.jmax,
            "s_re": table.S.real.tolist(),
            "s_im": table.S.imag.tolist(),
        }
        path.write_text(json.dumps(obj, indent=1) + "\n", encoding="utf-8")
    return path


def slice_at_energy(table: PartialWaveTable, e_index: int) -> list[tuple[float, complex]]:
    """``(lambda, S)`` pairs at one energy, ``lambda = J + 1/2``."""
    if not 0 <= e_index < table.n_energies:
        raise IndexOutOfRange(f"energy index {e_index} outside 0..{table.n_energies - 1}")
    return [(J + 0.5, complex(table.S[e_index, J])) for J in range(table.jmax + 1)]


def slice_at_J(table: PartialWaveTable, J: int) -> list[tuple[float, complex]]:
    """``(E, S^J(E))`` pairs in ascending energy."""
    if not 0 <= J <= table.jmax:
        raise IndexOutOfRange(f"J={J} outside 0..{table.jmax}")
    return [(float(E), complex(table.S[ie, J])) for ie, E in enumerate(table.energies)]
