"""Command-line front end.

    supcons {smooth,bounds,metrics,consistency,priorcheck} --config FILE [--out DIR]

Outputs go to ``--out``, else ``$SUPCONS_OUT_DIR``, else the working
directory. Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

from .bounds import normal_mixture_bound, prop1_bound, prop1_valid
from .config import (
    METRIC_KINDS,
    build_density,
    build_grid,
    build_mc,
    build_prior,
    build_regime,
    build_smoother,
    config_hash,
    load_config,
)
from .densities import Family, classify_smoothness
from .errors import AssumptionViolation, ConfigError, NumericalError
from .metrics import density_distance, kolmogorov_distance, prokhorov_bracket
from .posterior import consistency_trace, prior_kl_mass, prior_tail_check
from .smoother import smooth_profile, sup_error_empirical, weak_statistic

OUT_ENV = "SUPCONS_OUT_DIR"
SUBCOMMANDS = ("smooth", "bounds", "metrics", "consistency", "priorcheck")


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.12g" % v
    if v is None:
        return ""
    return str(v)


def _atomic_write(out_dir, name, text):
    path = os.path.join(out_dir, name)
    fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _csv_text(cfg, subcommand, header, rows):
    buf = io.StringIO()
    seed = cfg.get("seed")
    buf.write(f"# subcommand={subcommand} config_sha256={config_hash(cfg)} "
              f"seed={'none' if seed is None else seed}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _smooth(cfg, out_dir, args):
    f = build_density(cfg, "density")
    prof = smooth_profile(f, build_smoother(cfg, cfg["smoother.R"]))
    rows = zip(prof.points[:, 0].tolist(), prof.f.tolist(), prof.f_R.tolist(),
               prof.abs_error.tolist())
    path = _atomic_write(out_dir, "smooth.csv",
                         _csv_text(cfg, "smooth", ["x", "f(x)", "f_R(x)", "abs_error"], rows))
    return f"smooth: max abs_error {prof.sup_error:.6g} over {prof.points.shape[0]} points -> {path}"


def _bounds(cfg, out_dir, args):
    f = build_density(cfg, "density")
    cls = classify_smoothness(f)
    C, C_prime = cfg.get("bounds.C"), cfg.get("bounds.C_prime", 0.0)
    method = cfg.get("bounds.error_method", "difference")
    if method == "tail" and f.dimension != 1:
        raise ConfigError("bounds.error_method = tail needs a one-dimensional density")
    rows = []
    for R in cfg["bounds.R"]:
        emp = sup_error_empirical(f, build_smoother(cfg, R), method=method)
        try:
            p1 = prop1_bound(cls, f.dimension, R, C=C)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        nm = normal_mixture_bound(f.scale, R) if f.family is Family.GAUSSIAN else None
        ratio = emp / p1 if p1 > 0 else math.inf
        rows.append([f.family.value, f.scale, R, emp, p1, nm, ratio, prop1_valid(cls, R, C_prime)])
    header = ["family", "sigma", "R", "empirical_sup_error", "prop1_bound",
              "normal_mixture_bound", "ratio", "in_range"]
    path = _atomic_write(out_dir, "bounds.csv", _csv_text(cfg, "bounds", header, rows))
    worst = max(r[6] for r in rows)
    return f"bounds: {len(rows)} radii, max empirical/prop1 ratio {worst:.6g} -> {path}"


def _metrics(cfg, out_dir, args):
    f, g = build_density(cfg, "f"), build_density(cfg, "g")
    grid = build_grid(cfg)
    kinds = cfg.get("metrics.kinds", [k for k in METRIC_KINDS if k != "weak"])
    rows = []
    for kind in kinds:
        if kind in ("sup", "L1", "Hellinger", "KL"):
            rows.append([kind, density_distance(kind, f, g, grid), None, None])
        elif kind == "Kolmogorov":
            rows.append([kind, kolmogorov_distance(f, g, grid), None, None])
        elif kind == "Prokhorov":
            lo, hi = prokhorov_bracket(f, g, grid)
            rows.append([kind, None, lo, hi])
        else:
            if "metrics.R" not in cfg:
                raise ConfigError("metrics.R is required for the 'weak' statistic")
            rows.append([kind, weak_statistic(f, g, build_smoother(cfg, cfg["metrics.R"])),
                         None, None])
    path = _atomic_write(out_dir, "metrics.csv",
                         _csv_text(cfg, "metrics", ["kind", "value", "lower", "upper"], rows))
    return f"metrics: {len(rows)} distances -> {path}"


def _consistency(cfg, out_dir, args):
    f0 = build_density(cfg, "f0")
    prior, mc = build_prior(cfg), build_mc(cfg)
    grid = build_grid(cfg)
    smoother = build_smoother(cfg, 1.0) if grid is not None else None
    log = [] if args.dump_draws else None
    trace = consistency_trace(f0, cfg["trace.n_list"], cfg["trace.epsilon"], prior,
                              smoother, mc, draw_log=log)
    rows = [[e.n, e.epsilon, e.posterior_mass_estimate, e.mc_standard_error, e.ess]
            for e in trace.entries]
    path = _atomic_write(out_dir, "consistency.csv",
                         _csv_text(cfg, "consistency",
                                   ["n", "epsilon", "mass_estimate", "mc_se", "ess"], rows))
    if log is not None:
        text = "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in log)
        _atomic_write(out_dir, "draws.jsonl", text)
    masses = ", ".join("%.4g" % m for m in trace.masses)
    return f"consistency: masses [{masses}] -> {path}"


def _priorcheck(cfg, out_dir, args):
    prior, regime = build_prior(cfg), build_regime(cfg)
    rows = []
    ok = True
    for n in cfg["check.n_list"]:
        try:
            rep = prior_tail_check(prior, n, cfg["check.R_grid"], regime)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        ok &= rep.passed
        rows += [[n, r.R, r.threshold, r.tail, r.bound, r.log_tail, r.log_bound, r.passed]
                 for r in rep.rows]
    header = ["n", "R", "threshold", "tail", "bound", "log_tail", "log_bound", "passed"]
    path = _atomic_write(out_dir, "priorcheck.csv", _csv_text(cfg, "priorcheck", header, rows))
    msg = f"priorcheck: {regime.kind} condition {'passes' if ok else 'fails'} -> {path}"
    if "kl.epsilon" in cfg:
        if "f0.family" not in cfg:
            raise ConfigError("kl.epsilon needs an f0 density")
        f0 = build_density(cfg, "f0")
        n = cfg.get("kl.n", cfg["check.n_list"][-1])
        draws = cfg.get("kl.draws", 10_000)
        try:
            est, se = prior_kl_mass(prior, n, f0, cfg["kl.epsilon"], draws, cfg["seed"],
                                    build_grid(cfg))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        _atomic_write(out_dir, "kl_mass.csv",
                      _csv_text(cfg, "priorcheck", ["n", "epsilon", "draws", "estimate", "se"],
                                [[n, cfg["kl.epsilon"], draws, est, se]]))
        msg += f"; KL mass {est:.4g} (se {se:.2g})"
    return msg


HANDLERS = {
    "smooth": _smooth,
    "bounds": _bounds,
    "metrics": _metrics,
    "consistency": _consistency,
    "priorcheck": _priorcheck,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="supcons", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
        if name == "consistency":
            p.add_argument("--dump-draws", action="store_true",
                           help="also write draws.jsonl with every retained draw")
    return parser


def run(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.subcommand is None:
        parser.print_usage(sys.stderr)
        return 2
    out_dir = args.out or os.environ.get(OUT_ENV) or "."
    try:
        cfg = load_config(args.config, args.subcommand)
        os.makedirs(out_dir, exist_ok=True)
        msg = HANDLERS[args.subcommand](cfg, out_dir, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, AssumptionViolation, FloatingPointError) as exc:
        print(f"numerical failure in {args.subcommand}: {exc}", file=sys.stderr)
        return 3
    print(msg)
    return 0


def main():
    sys.exit(run(sys.argv[1:]))
