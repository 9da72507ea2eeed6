"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 solver or invariant failure.
Reports are JSON (sorted keys, shortest round-trip floats) or CSV, and carry a
``provenance`` block with every parameter needed to reproduce the run.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .eigsolve import dense_oracle, principal
from .logradial import assemble_periodic, assemble_sector, build_grid, hardy_constant
from .periodic import DEFAULT_CELL_NODES, lambda_circ, null_energy_decay
from .perturb import THRESHOLD_TOL, bump_threshold, sigma_curve
from .spectra import (CLASSIFICATION_TOL, DEFAULT_GRID, DEFAULT_LMAX, DEFAULT_TOL, ball_bound,
                      check_lemma21, decay_fit, lambda_m)
from .weightcore import load_profile

SUBCOMMANDS = ("eigen", "classify", "periodic", "nullseq", "sigma", "threshold", "ballbound",
               "decay", "oracle")
ORACLE_DEFAULT_NODES = 201
DEFAULT_BAND_R = math.exp(-7.0)
DEFAULT_K_LIST = (16, 64, 256, 1024)


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    weight: str | None
    weight2: str | None
    N: int
    t_min: float
    t_max: float
    n: int | None
    l_max: int
    tol: float
    classification_tol: float
    jobs: int
    out: str | None
    format: str

    def grid(self):
        return build_grid(self.t_min, self.t_max, self.n if self.n is not None else DEFAULT_GRID[2])

    def provenance(self, **extra) -> dict:
        p = {"subcommand": self.subcommand, "version": __version__, "dim": self.N,
             "tol": self.tol, "weight": self.weight, "weight2": self.weight2}
        p.update(extra)
        return p


def _float_list(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hardyspec",
                                 description="Principal eigenvalues of -Delta - lambda m(x)/|x|^2.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--weight", help="weight JSON file")
    ap.add_argument("--weight2", help="second weight JSON file (w for sigma)")
    ap.add_argument("--dim", type=int, default=3, help="dimension N (>= 3)")
    ap.add_argument("--tmin", type=float, default=DEFAULT_GRID[0])
    ap.add_argument("--tmax", type=float, default=DEFAULT_GRID[1])
    ap.add_argument("--n", type=int, default=None,
                    help=f"grid nodes (default {DEFAULT_GRID[2]}; cell nodes {DEFAULT_CELL_NODES} "
                         f"for periodic/nullseq; {ORACLE_DEFAULT_NODES} for oracle)")
    ap.add_argument("--lmax", type=int, default=DEFAULT_LMAX)
    ap.add_argument("--gamma", type=float, default=None, help="period scale factor > 1")
    ap.add_argument("--lambda", dest="lam", type=float, default=None)
    ap.add_argument("--lambda-grid", type=_float_list, default=None)
    ap.add_argument("--k-list", type=_int_list, default=list(DEFAULT_K_LIST))
    ap.add_argument("--r", type=float, default=None, help="ball radius (ballbound) or band radius (decay)")
    ap.add_argument("--d", type=float, default=None)
    ap.add_argument("--m-peak", type=float, default=None)
    ap.add_argument("--m0", type=float, default=None, help="m(0) (ballbound) or base level A (threshold)")
    ap.add_argument("--minf", type=float, default=None)
    ap.add_argument("--sharp", action="store_true")
    ap.add_argument("--tol", type=float, default=DEFAULT_TOL)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default=None, help="output path (default stdout)")
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    return ap


def _config(ns) -> RunConfig:
    try:
        hardy_constant(ns.dim)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if ns.jobs < 1:
        raise InputError("--jobs must be >= 1")
    if not ns.tol > 0:
        raise InputError("--tol must be positive")
    return RunConfig(ns.subcommand, ns.weight, ns.weight2, ns.dim, ns.tmin, ns.tmax, ns.n, ns.lmax,
                     ns.tol, CLASSIFICATION_TOL, ns.jobs, ns.out, ns.format)


def _need(value, flag: str):
    if value is None:
        raise InputError(f"{flag} is required for this subcommand")
    return value


def _weight(path, flag="--weight", require_positive=True):
    return load_profile(_need(path, flag), require_positive=require_positive)


# -- subcommands: each returns (report dict, csv rows or None) ---------------

def _eigen(cfg: RunConfig, ns, brief: bool):
    grid = cfg.grid()
    prof = _weight(cfg.weight)
    rep = lambda_m(prof, cfg.N, grid, cfg.l_max, cfg.tol, cfg.classification_tol, "auto", cfg.jobs)
    body = rep.to_json()
    prov = cfg.provenance(grid=grid.to_json(), l_max=cfg.l_max, closure=rep.closure,
                          classification_tol=cfg.classification_tol,
                          iterations={str(k): v for k, v in sorted(rep.iterations.items())})
    if brief:
        body.pop("psi")
        lm, lp, lmi, holds = check_lemma21(prof, cfg.N, grid, rep.closure, cfg.tol)
        body["lemma21_holds"] = holds
    rows = [("l", "lambda")] + [(l, v) for l, v in sorted(rep.sector_values.items())]
    return body, prov, rows


def _periodic(cfg: RunConfig, ns):
    gamma = _need(ns.gamma, "--gamma")
    n = cfg.n or DEFAULT_CELL_NODES
    state = lambda_circ(_weight(cfg.weight), gamma, cfg.N, n, cfg.tol)
    prov = cfg.provenance(gamma=gamma, cell_nodes=n, iterations=state.iterations)
    rows = [("t", "psi")] + [(state.grid.nodes[i], v) for i, v in enumerate(state.psi)]
    return state.to_json(), prov, rows


def _nullseq(cfg: RunConfig, ns):
    gamma = _need(ns.gamma, "--gamma")
    n = cfg.n or DEFAULT_CELL_NODES
    state = lambda_circ(_weight(cfg.weight), gamma, cfg.N, n, cfg.tol)
    out = null_energy_decay(state, ns.k_list, cfg.jobs)
    body = {"lambda_circ": state.lambda_circ, "sandwich_c": state.sandwich_c,
            "energies": [{"k": k, "Q_k": q, "kQ_k": kq} for k, q, kq in out]}
    prov = cfg.provenance(gamma=gamma, cell_nodes=n, k_list=list(ns.k_list), range_rule="|t| <= 10 k")
    rows = [("k", "Q_k", "kQ_k")] + list(out)
    return body, prov, rows


def _sigma(cfg: RunConfig, ns):
    if ns.lambda_grid is not None:
        lams = ns.lambda_grid
    elif ns.lam is not None:
        lams = [ns.lam]
    else:
        raise InputError("--lambda or --lambda-grid is required for sigma")
    grid = cfg.grid()
    base = _weight(cfg.weight, require_positive=False)
    w = _weight(cfg.weight2, "--weight2")
    pts = sigma_curve(base, w, lams, cfg.N, grid, cfg.tol, cfg.jobs)
    body = {"points": [p.to_json() for p in pts]}
    prov = cfg.provenance(grid=grid.to_json(), lambda_grid=lams)
    rows = [("lambda", "sigma", "feasible")] + [(p.lam, p.sigma, str(p.feasible).lower()) for p in pts]
    return body, prov, rows


def _threshold(cfg: RunConfig, ns):
    A = _need(ns.m0, "--m0")
    grid = cfg.grid()
    res = bump_threshold(A, _weight(cfg.weight), cfg.N, grid, solver_tol=cfg.tol)
    prov = cfg.provenance(grid=grid.to_json(), A_level=A, threshold_tol=THRESHOLD_TOL,
                          evaluations=len(res.lambda_at))
    rows = [("B", "lambda_1")] + sorted(res.lambda_at.items())
    return res.to_json(), prov, rows


def _ballbound(cfg: RunConfig, ns):
    rep = ball_bound(cfg.N, _need(ns.r, "--r"), _need(ns.d, "--d"), _need(ns.m0, "--m0"),
                     _need(ns.minf, "--minf"), _need(ns.m_peak, "--m-peak"), ns.sharp)
    prov = cfg.provenance(sharp=ns.sharp)
    body = rep.to_json()
    rows = [("field", "value")] + [(k, body[k]) for k in sorted(body) if k != "exact"]
    return body, prov, rows


def _decay(cfg: RunConfig, ns):
    band_r = ns.r if ns.r is not None else DEFAULT_BAND_R
    grid = cfg.grid()
    prof = _weight(cfg.weight)
    rep = lambda_m(prof, cfg.N, grid, 0, cfg.tol, cfg.classification_tol, "auto", cfg.jobs)
    fit = decay_fit(rep, (band_r * math.exp(-7.0), band_r), band_r)
    body = fit.to_json()
    body["lambda_m"] = rep.lambda_m
    prov = cfg.provenance(grid=grid.to_json(), closure=rep.closure)
    rows = [("field", "value"), ("fitted_s", fit.fitted_s), ("s_lower", fit.predicted_band[0]),
            ("s_upper", fit.predicted_band[1]), ("band_margin", fit.band_margin)]
    return body, prov, rows


def _oracle(cfg: RunConfig, ns):
    prof = _weight(cfg.weight)
    if ns.gamma is not None:
        n = cfg.n or ORACLE_DEFAULT_NODES
        pencil = assemble_periodic(prof, ns.gamma, cfg.N, n)
        extra = {"gamma": ns.gamma, "cell_nodes": n}
    else:
        grid = build_grid(cfg.t_min, cfg.t_max, cfg.n or ORACLE_DEFAULT_NODES)
        pencil = assemble_sector(grid, prof, cfg.N, 0)
        extra = {"grid": grid.to_json()}
    if pencil.dim > 400:
        raise InputError(f"oracle pencil dimension {pencil.dim} exceeds 400; lower --n")
    it = principal(pencil, cfg.tol)
    dense = dense_oracle(pencil)
    body = {"principal": it.lam, "dense_oracle": dense, "relative_difference": abs(it.lam - dense) / dense,
            "dimension": pencil.dim, "topology": pencil.topology}
    rows = [("field", "value")] + [(k, body[k]) for k in sorted(body)]
    return body, cfg.provenance(iterations=it.iterations, **extra), rows


def dispatch(cfg: RunConfig, ns):
    sub = cfg.subcommand
    if sub in ("eigen", "classify"):
        return _eigen(cfg, ns, brief=(sub == "classify"))
    return {"periodic": _periodic, "nullseq": _nullseq, "sigma": _sigma, "threshold": _threshold,
            "ballbound": _ballbound, "decay": _decay, "oracle": _oracle}[sub](cfg, ns)


def render(body: dict, provenance: dict, rows, fmt: str) -> str:
    if fmt == "json":
        doc = dict(body)
        doc["provenance"] = provenance
        return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).write_text(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(ns)
        body, prov, rows = dispatch(cfg, ns)
        emit(render(body, prov, rows, cfg.format), cfg.out)
    except RuntimeError as exc:
        print(f"hardyspec: solver failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"hardyspec: error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())
