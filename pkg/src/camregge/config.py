"""Flat ``key = value`` run configuration.

Blank lines and text after ``#`` are ignored.  Every key has a default, so
an empty file (or no file) is a valid configuration.  Command-line flags
override file values one for one.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import InputError


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none") else float(text)


def _opt_str(text: str):
    return None if text.strip().lower() in ("", "none") else text.strip()


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    input: str | None = None
    out: str = "out"
    format: str | None = None
    # table checks
    unitarity: str = "error"
    unitarity_tol: float = 1e-6
    jmax_warn: int = 20
    jmax_min: int = 8
    # continuation and pole search
    interp_tol: float = 1e-13
    im_cap: float = 4.0
    im_max: float = 3.0
    res_min: float = 1e-4
    doublet_radius: float = 1e-3
    r_contour: float = 1e-3
    # quadrature and grids
    quad_atol: float = 1e-14
    quad_rtol: float = 1e-10
    quad_max_depth: int = 30
    lam_cut: float | None = None
    phi_step_deg: float = 0.5
    phi_max_deg: float | None = None
    theta_grid: str = "0:180:1"
    m_max: int = 2
    fold_tol: float = 1e-3
    decompose_theta_deg: float = 90.0
    # trajectories and complex-energy poles
    match_radius: float = 1.0
    fit_window: str | None = None
    ce_J: str | None = None
    offset_mev: float = 0.0
    compare_input: str | None = None
    I_moment: float | None = None
    # synthetic tables
    synth_model: str = "two-pole"
    synth_format: str = "csv"
    # execution
    threads: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> "RunConfig":
        positive = ("unitarity_tol", "interp_tol", "im_cap", "im_max", "doublet_radius",
                    "r_contour", "quad_rtol", "phi_step_deg", "fold_tol", "match_radius")
        for name in positive:
            if not getattr(self, name) > 0:
                raise InputError(f"config: {name} must be positive, got {getattr(self, name)!r}")
        if self.quad_atol < 0 or self.res_min < 0:
            raise InputError("config: quad_atol and res_min must be non-negative")
        if self.unitarity not in ("error", "warn"):
            raise InputError("config: unitarity must be 'error' or 'warn'")
        if self.m_max < 0 or self.threads < 1 or self.quad_max_depth < 1:
            raise InputError("config: m_max >= 0, threads >= 1 and quad_max_depth >= 1 required")
        self.theta_degrees()
        self.window()
        self.ce_J_values()
        return self

    # derived values

    def theta_degrees(self) -> tuple[float, float, float]:
        try:
            a, b, step = (float(x) for x in self.theta_grid.split(":"))
        except ValueError:
            raise InputError(f"theta_grid must be 'start:stop:step' in degrees, got "
                             f"{self.theta_grid!r}") from None
        if not (0 <= a <= b <= 180 and step > 0):
            raise InputError(f"theta_grid {self.theta_grid!r} must satisfy 0 <= start <= stop <= 180"
                             " and step > 0")
        return a, b, step

    def window(self) -> tuple[float, float] | None:
        if self.fit_window is None:
            return None
        try:
            lo, hi = (float(x) for x in self.fit_window.split(":"))
        except ValueError:
            raise InputError(f"fit_window must be 'E_lo:E_hi', got {self.fit_window!r}") from None
        if not lo < hi:
            raise InputError("fit_window needs E_lo < E_hi")
        return lo, hi

    def ce_J_values(self) -> list[int] | None:
        if self.ce_J is None:
            return None
        try:
            if ":" in self.ce_J:
                lo, hi = (int(x) for x in self.ce_J.split(":"))
                return list(range(lo, hi + 1))
            return [int(x) for x in self.ce_J.split(",")]
        except ValueError:
            raise InputError(f"ce_J must be 'lo:hi' or a comma list, got {self.ce_J!r}") from None

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_CONVERTERS = {
    "int": int,
    "float": float,
    "str": str,
    "float | None": _opt_float,
    "str | None": _opt_str,
    "bool": _bool,
}


def _convert(name: str, type_name: str, text: str):
    conv = _CONVERTERS.get(type_name)
    if conv is None:
        raise InputError(f"config: no converter for {name} ({type_name})")
    try:
        return conv(text)
    except ValueError as exc:
        raise InputError(f"config: bad value for {name}: {exc}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    known = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise InputError(f"{source}:{lineno}: expected 'key = value'")
        if key not in known:
            raise InputError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _convert(key, known[key], value.strip())
    return values


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    values = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise InputError(f"no such config file: {p}")
        values.update(parse_config_text(p.read_text(encoding="utf-8"), str(p)))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    return RunConfig(**values)

