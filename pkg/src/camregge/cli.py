"""Command-line front end.

Subcommands: dcs, unfold, poles, trajectories, ce-poles, decompose, synth
and pipeline.  Each reads a table (except synth), writes CSV/JSON into
``--out`` and exits 0 on success, 2 on invalid input and 3 when a
numerical stage fails; errors name the failing stage on stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import logging
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .amplitudes import (AngularGrid, UnfoldedAmplitude, build_cam_approximants, dcs_direct,
                         default_phi_grid, fold, unfold)
from .config import RunConfig, load_config
from .errors import CamReggeError, InputError, NumericalError, TooFewPoints
from .pade import (PoleDatum, PoleSearchConfig, SearchBox, SignificanceConfig, Significance,
                   find_poles_zeros)
from .quadrature import QuadratureConfig
from .resonance import (decompose_backward, decompose_forward, decompose_sideway,
                        subtract_tails)
from .smatrix_io import PartialWaveTable, load_table
from .synth import PRESETS, write_synthetic
from .trajectories import (CEPole, ce_poles_direct, chain_trajectories, compare_ce_sets,
                           fit_linear, invert_to_ce, normalize_ce_convention, observables)

logger = logging.getLogger("camregge")


# --- output helpers ----------------------------------------------------------

def _num(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return repr(x) if np.isfinite(x) else ("nan" if np.isnan(x) else ("inf" if x > 0 else "-inf"))


def _write_csv(path: Path, header, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def _jsonable(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.complexfloating):
        return [float(o.real), float(o.imag)]
    if isinstance(o, np.ndarray):
        return [_jsonable(v) for v in o.tolist()]
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, float) and not np.isfinite(o):
        return None
    return o


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(_jsonable(obj), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except CamReggeError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


# --- shared computations -----------------------------------------------------

def _load(cfg: RunConfig, path: str | None = None, *, pipeline: bool = False) -> PartialWaveTable:
    path = path or cfg.input
    if path is None:
        raise InputError("--input is required")
    with stage("load"):
        table = load_table(path, cfg.format, unitarity=cfg.unitarity,
                           unitarity_tol=cfg.unitarity_tol, jmax_warn=cfg.jmax_warn)
        if pipeline and table.jmax < cfg.jmax_min:
            raise InputError(f"jmax={table.jmax} is below the pipeline minimum {cfg.jmax_min}")
    return table


def _search_config(cfg: RunConfig, jmax: int | None = None) -> PoleSearchConfig:
    return PoleSearchConfig(doublet_radius=cfg.doublet_radius, r_contour=cfg.r_contour,
                            im_cap=cfg.im_cap, jmax=jmax,
                            significance=SignificanceConfig(im_max=cfg.im_max,
                                                            res_min=cfg.res_min))


def _quad_config(cfg: RunConfig) -> QuadratureConfig:
    return QuadratureConfig(atol=cfg.quad_atol, rtol=cfg.quad_rtol,
                            max_depth=cfg.quad_max_depth, lam_cut=cfg.lam_cut)


def _pmap(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


class Session:
    """Lazily computed intermediate results for one table."""

    def __init__(self, table: PartialWaveTable, cfg: RunConfig):
        self.table = table
        self.cfg = cfg
        self._approx = None
        self._poles = None
        self._unfolded = None
        self._trajectories = None

    @property
    def approximants(self):
        if self._approx is None:
            with stage("pade"):
                self._approx = build_cam_approximants(self.table, interp_tol=self.cfg.interp_tol)
        return self._approx

    @property
    def poles(self) -> list[tuple[list[PoleDatum], list]]:
        if self._poles is None:
            sc = _search_config(self.cfg, self.table.jmax)
            box = SearchBox.cam_default(self.table.jmax, self.cfg.im_cap)
            with stage("poles"):
                self._poles = _pmap(lambda a: find_poles_zeros(a, box, sc), self.approximants,
                                    self.cfg.threads)
        return self._poles

    def physical_poles(self) -> list[list[PoleDatum]]:
        return [[p for p in ps if p.significance == Significance.SIGNIFICANT]
                for ps, _ in self.poles]

    @property
    def unfolded(self) -> UnfoldedAmplitude:
        if self._unfolded is None:
            phi = default_phi_grid(self.cfg.m_max, self.cfg.phi_step_deg, self.cfg.phi_max_deg)
            with stage("unfold"):
                self._unfolded = unfold(self.table, self.approximants, phi,
                                        _quad_config(self.cfg), threads=self.cfg.threads)
        return self._unfolded

    @property
    def trajectories(self):
        if self._trajectories is None:
            with stage("trajectories"):
                trajs = chain_trajectories([ps for ps, _ in self.poles], self.cfg.match_radius)
                for tr in trajs:
                    try:
                        tr.fit = fit_linear(tr, self.cfg.window())
                    except TooFewPoints:
                        tr.fit = None
            self._trajectories = trajs
        return self._trajectories

    def ce_poles(self) -> list[tuple[CEPole, object]]:
        """Inverted and direct CE poles, each with the trajectory used for its CAM partner."""
        out = []
        J_req = self.cfg.ce_J_values()
        with stage("ce-poles"):
            # trajectories whose poles are, on average, physically significant
            fitted = [t for t in self.trajectories if t.fit is not None
                      and np.mean(t.lam.imag) <= self.cfg.im_max
                      and np.mean(np.abs(t.residues)) >= self.cfg.res_min]
            Js = set()
            for tr in fitted:
                if J_req is not None:
                    J_vals = J_req
                else:
                    lo, hi = tr.lam.real.min(), tr.lam.real.max()
                    J_vals = [J for J in range(0, self.table.jmax + 1) if lo <= J + 0.5 <= hi]
                Js.update(J_vals)
                for c in invert_to_ce(tr.fit, J_vals, lam_shift=0.5, label=tr.label):
                    out.append((c, tr))
            sc = _search_config(self.cfg)
            for J in sorted(Js):
                if not 0 <= J <= self.table.jmax:
                    continue
                if self.table.n_energies < 4:
                    break
                for c in ce_poles_direct(self.table, J, None, sc):
                    partner = _nearest_trajectory(c, out)
                    out.append((c, partner))
        return out


def _nearest_trajectory(c: CEPole, inverted):
    best, dist = None, np.inf
    for ci, tr in inverted:
        if ci.J != c.J:
            continue
        d = min(abs(ci.E_pole - c.E_pole), abs(ci.E_pole.conjugate() - c.E_pole))
        if d < dist:
            best, dist = tr, d
    return best


def _ce_rows(entries, I_moment):
    poles = [c for c, _ in entries]
    normalized, _ = normalize_ce_convention(poles)
    rows = []
    for (c, tr), cn in zip(entries, normalized):
        tau = ang = B = None
        try:
            lam = None
            if tr is not None and tr.fit is not None:
                lam = complex(tr.fit(cn.E_pole.real))
            obs = observables(cn, lam if lam is not None and lam.imag > 0 else None, I_moment)
            tau, ang, B = obs.lifetime_s, obs.angular_life_deg, obs.rotational_constant
        except InputError as exc:
            logger.info("no observables for J=%s pole %r: %s", c.J, c.E_pole, exc)
        rows.append((cn, tau, ang, B))
    return rows


# --- subcommands -------------------------------------------------------------

def cmd_dcs(cfg, out: Path) -> dict:
    table = _load(cfg)
    grid = AngularGrid.from_degrees(*cfg.theta_degrees())
    with stage("dcs"):
        surf = dcs_direct(table, grid)
    deg = np.rad2deg(grid.theta)
    rows = [(_num(E), _num(deg[j]), _num(surf.sigma[i, j]))
            for i, E in enumerate(table.energies) for j in range(deg.size)]
    _write_csv(out / "dcs.csv", ("E_meV", "theta_deg", "sigma"), rows)
    return {"rows": len(rows)}


def cmd_unfold(cfg, out: Path, session: Session | None = None) -> dict:
    s = session or Session(_load(cfg), cfg)
    u = s.unfolded
    deg = np.rad2deg(u.phi)
    rows = []
    for i, E in enumerate(u.energies):
        err = np.maximum(u.err_f[i], u.err_g[i])
        for j in range(deg.size):
            f, g = u.f[i, j], u.g[i, j]
            rows.append((_num(E), _num(deg[j]), _num(f.real), _num(f.imag), _num(g.real),
                         _num(g.imag), _num(err[j])))
    _write_csv(out / "unfold.csv", ("E_meV", "phi_deg", "re_f", "im_f", "re_g", "im_g", "err_est"),
               rows)
    return {"rows": len(rows)}


def cmd_poles(cfg, out: Path, session: Session | None = None) -> dict:
    s = session or Session(_load(cfg), cfg)
    rows, zrows = [], []
    for E, (ps, zs) in zip(s.table.energies, s.poles):
        for p in ps:
            rows.append((_num(E), p.axis.value, _num(p.position.real), _num(p.position.imag),
                         _num(p.residue.real), _num(p.residue.imag), p.significance.value))
        for z in zs:
            zrows.append((_num(E), _num(z.position.real), _num(z.position.imag)))
    _write_csv(out / "poles.csv",
               ("E_meV", "axis", "re_pos", "im_pos", "re_res", "im_res", "significance"), rows)
    _write_csv(out / "zeros.csv", ("E_meV", "re_pos", "im_pos"), zrows)
    return {"poles": len(rows), "zeros": len(zrows)}


def cmd_trajectories(cfg, out: Path, session: Session | None = None) -> dict:
    s = session or Session(_load(cfg), cfg)
    rows, fits = [], []
    for tr in s.trajectories:
        for E, lam, res in tr.points:
            rows.append((tr.label, _num(E), _num(lam.real), _num(lam.imag), _num(res.real),
                         _num(res.imag)))
        fit = tr.fit
        fits.append({"label": tr.label, "n_points": len(tr.points), "short": tr.short,
                     "alpha": None if fit is None else fit.alpha,
                     "beta": None if fit is None else fit.beta,
                     "rms": None if fit is None else fit.rms,
                     "window": None if fit is None else list(fit.window)})
    _write_csv(out / "trajectories.csv",
               ("label", "E_meV", "re_lambda", "im_lambda", "re_res", "im_res"), rows)
    _write_json(out / "trajectory_fits.json", fits)
    return {"trajectories": fits}


def cmd_ce_poles(cfg, out: Path, session: Session | None = None) -> dict:
    s = session or Session(_load(cfg), cfg)
    entries = s.ce_poles()
    rows = []
    summary = []
    for (c, tau, ang, B) in _ce_rows(entries, cfg.I_moment):
        J = int(round(c.J))
        rows.append((J, c.source.value, _num(c.E_pole.real), _num(c.E_pole.imag), _num(tau),
                     _num(ang), _num(B), J * (J + 1)))
        summary.append({"J": J, "source": c.source.value, "E": c.E_pole, "lifetime_s": tau,
                        "angular_life_deg": ang, "B_meV": B, "label": c.label})
    _write_csv(out / "ce_poles.csv", ("J", "source", "re_E_meV", "im_E_meV", "lifetime_s",
                                      "angular_life_deg", "B_meV", "J_J1"), rows)
    result = {"ce_poles": summary}
    if cfg.compare_input is not None:
        other = Session(_load(cfg, cfg.compare_input), cfg)
        a = [c for c, _ in entries if c.source.value == "inverted_from_CAM"]
        b = [c for c, _ in other.ce_poles() if c.source.value == "inverted_from_CAM"]
        with stage("compare"):
            cmp = compare_ce_sets(normalize_ce_convention(a)[0], normalize_ce_convention(b)[0],
                                  cfg.offset_mev)
        _write_csv(out / "ce_compare.csv",
                   ("J", "re_a", "im_a", "re_b_shifted", "im_b_shifted", "d_re", "d_im"),
                   [(_num(p.J), _num(p.a.real), _num(p.a.imag), _num(p.b_shifted.real),
                     _num(p.b_shifted.imag), _num(p.d_re), _num(p.d_im)) for p in cmp.pairs])
        result["comparison"] = {"offset": cmp.offset, "best_offset": cmp.best_offset,
                                "rms_at_offset": cmp.rms_at_offset, "rms_at_best": cmp.rms_at_best,
                                "pairs": len(cmp.pairs)}
    return result


def _decompositions(s: Session):
    cfg, table = s.cfg, s.table
    poles = s.physical_poles()
    u = s.unfolded
    with stage("decompose"):
        reports = [decompose_forward(u, poles, table.k, m_max=cfg.m_max)]
        theta = np.deg2rad(cfg.decompose_theta_deg)
        if 0 < theta < np.pi:
            folded = fold(u, [theta], cfg.m_max, table.k, poles=poles, fold_tol=cfg.fold_tol)
            reports.append(decompose_sideway(folded, poles, theta, table.k))
        reports.append(decompose_backward(u, poles, table.k, m_max=cfg.m_max))
    return reports


def cmd_decompose(cfg, out: Path, session: Session | None = None) -> dict:
    s = session or Session(_load(cfg), cfg)
    reports = _decompositions(s)
    rows = []
    summary = {}
    for rep in reports:
        ex = rep.exact_abs2
        for i, E in enumerate(rep.energies):
            for lab, t in rep.terms.items():
                rows.append((_num(E), rep.tag, lab, _num(t[i].real), _num(t[i].imag),
                             _num(abs(t[i]) ** 2), _num(ex[i]), ""))
            for name, labels in rep.approximations.items():
                amp = sum((rep.terms[lab][i] for lab in labels), 0j)
                rows.append((_num(E), rep.tag, f"sum:{name}", _num(amp.real), _num(amp.imag),
                             _num(rep.coherent[name][i]), _num(ex[i]),
                             _num(rep.residual[name][i])))
        summary[rep.tag] = {name: rep.max_residual(name) for name in rep.approximations}
        summary[rep.tag]["exact_peak"] = float(ex.max())
    _write_csv(out / "decompose.csv", ("E_meV", "theta_tag", "term_label", "re", "im", "abs2",
                                       "exact_abs2", "residual"), rows)
    with stage("tails"):
        tr = subtract_tails(s.unfolded, s.physical_poles())
    summary["tail_residual_max_f"] = tr.max_f
    return {"decomposition": summary}


def cmd_synth(cfg, out: Path) -> dict:
    if cfg.synth_model not in PRESETS:
        raise InputError(f"unknown synth model {cfg.synth_model!r}; choose from "
                         f"{', '.join(sorted(PRESETS))}")
    with stage("synth"):
        model = PRESETS[cfg.synth_model]()
        table_path, ledger_path = write_synthetic(model, out / f"synth.{cfg.synth_format}")
    return {"table": str(table_path), "ledger": str(ledger_path)}


def cmd_pipeline(cfg, out: Path) -> dict:
    table = _load(cfg, pipeline=True)
    s = Session(table, cfg)
    summary = {
        "input": cfg.input,
        "transition": str(table.transition),
        "energies": table.energies,
        "jmax": table.jmax,
        "config": cfg.as_dict(),
    }
    summary["poles"] = [
        {"E_meV": float(E), "position": p.position, "residue": p.residue,
         "significance": p.significance.value, "ill_conditioned": p.ill_conditioned}
        for E, (ps, _) in zip(table.energies, s.poles) for p in ps]
    summary["zeros"] = [{"E_meV": float(E), "position": z.position}
                        for E, (_, zs) in zip(table.energies, s.poles) for z in zs]
    cmd_poles(cfg, out, s)
    summary.update(cmd_trajectories(cfg, out, s))
    summary.update(cmd_ce_poles(cfg, out, s))
    cmd_unfold(cfg, out, s)
    summary.update(cmd_decompose(cfg, out, s))
    _write_json(out / "summary.json", summary)
    return summary


COMMANDS = {
    "dcs": cmd_dcs,
    "unfold": cmd_unfold,
    "poles": cmd_poles,
    "trajectories": cmd_trajectories,
    "ce-poles": cmd_ce_poles,
    "decompose": cmd_decompose,
    "synth": cmd_synth,
    "pipeline": cmd_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="camregge",
        description="Complex angular momentum analysis of tabulated S-matrix elements.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="S-matrix table (csv or json)")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--config", help="key = value run configuration file")
    common.add_argument("--jmax-warn", type=int, dest="jmax_warn")
    common.add_argument("--theta-grid", dest="theta_grid", metavar="A:B:STEP",
                        help="scattering angles in degrees, inclusive")
    common.add_argument("--phi-max-deg", type=float, dest="phi_max_deg")
    common.add_argument("--m-max", type=int, dest="m_max")
    common.add_argument("--im-cap", type=float, dest="im_cap")
    common.add_argument("--res-min", type=float, dest="res_min")
    common.add_argument("--offset-mev", type=float, dest="offset_mev")
    common.add_argument("--threads", type=int, dest="threads")
    common.add_argument("--model", dest="synth_model", help="synth preset name")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    helps = {
        "dcs": "direct partial-wave DCS on a theta grid",
        "unfold": "unfolded amplitudes on the winding-angle grid",
        "poles": "Regge poles and zeros at every energy",
        "trajectories": "chain poles into trajectories and fit them",
        "ce-poles": "complex-energy poles and resonance observables",
        "decompose": "forward, sideways and backward resonance decompositions",
        "synth": "write a synthetic table with its exact ledger",
        "pipeline": "run every stage and write summary.json",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


_OVERRIDES = ("input", "out", "jmax_warn", "theta_grid", "phi_max_deg", "m_max", "im_cap",
              "res_min", "offset_mev", "threads", "synth_model")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    name = args.command
    try:
        cfg = load_config(args.config, {k: getattr(args, k) for k in _OVERRIDES})
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            COMMANDS[name](cfg, out)
    except InputError as exc:
        print(f"camregge {name}: error in stage {exc.stage or 'config'}: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"camregge {name}: numerical failure in stage {exc.stage or name}: {exc}",
              file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
