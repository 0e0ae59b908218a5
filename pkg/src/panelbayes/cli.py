"""Command-line front end: `gen`, `fit`, `study`, `spindex`.

Every command is deterministic under a fixed --seed. Exit codes: 0 on
success, 1 for usage or configuration problems, 2 for runtime or numeric
failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys

import numpy as np

from .datagen import SimConfig, gen_panel
from .errors import ConfigError, SamplerError
from .experiment import RUNS, run_study, write_tables
from .kvconfig import get_float, get_int, read_kv_file, write_kv_file
from .model import PanelDataset
from .priors import default_uninformative, load_priors, posterior_to_priorset, save_priors
from .sampler import ChainConfig, draws_to_csv, run_chain, summarize
from .seeding import derive_seed
from .spindex import (DEFAULT_BASELINE, DEFAULT_SPLIT_YEAR, DEFAULT_THRESHOLD,
                      load_returns, surrogate_path, two_stage_fit, write_comparison_csv)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"usage error: {message}")


def _add_chain_flags(p: argparse.ArgumentParser, with_seed: bool = True) -> None:
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--thin", type=int, default=None)
    p.add_argument("--adapt-window", type=int, default=None)
    if with_seed:
        p.add_argument("--seed", type=int, default=None)


def build_parser() -> _Parser:
    parser = _Parser(prog="panelbayes",
                     description="Bayesian random-effects logistic fitting for panel binary data")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate one replicate's synthetic panel")
    p_gen.add_argument("--config", required=True, help="key=value file with individuals/periods/sigma")
    p_gen.add_argument("--out", required=True, help="panel CSV path (truth sidecar goes to <out>.truth)")
    p_gen.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_gen.add_argument("--replicate", type=int, default=None, help="replicate stream index (default 0)")

    p_fit = sub.add_parser("fit", help="fit one panel CSV")
    p_fit.add_argument("--data", required=True, help="panel CSV (individual,time,y,x1,x2)")
    p_fit.add_argument("--config", default=None, help="optional key=value file with chain settings")
    p_fit.add_argument("--priors-in", default="uninformative",
                       help="priors file from an earlier fit, or 'uninformative'")
    p_fit.add_argument("--priors-out", default=None,
                       help="write the posterior, moment-matched, as a priors file")
    p_fit.add_argument("--out", default=None, help="summary CSV path (default: stdout)")
    p_fit.add_argument("--draws-out", default=None, help="write kept draws as iteration,parameter,value")
    _add_chain_flags(p_fit)

    p_study = sub.add_parser("study", help="run the replicated R1..R6 study")
    p_study.add_argument("--config", required=True, help="study config (key=value)")
    p_study.add_argument("--out", default=None, help="override the config output directory")
    p_study.add_argument("--jobs", type=int, default=None, help="override the worker count")
    _add_chain_flags(p_study, with_seed=False)
    p_study.add_argument("--seed", type=int, default=None, help="override the config master seed")

    p_sp = sub.add_parser("spindex", help="two-stage fit of a yearly return series")
    p_sp.add_argument("--data", default=None,
                      help="year,return CSV (default: bundled synthetic surrogate)")
    p_sp.add_argument("--config", default=None, help="optional key=value file with chain settings")
    p_sp.add_argument("--split-year", type=int, default=DEFAULT_SPLIT_YEAR)
    p_sp.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p_sp.add_argument("--baseline", type=int, default=DEFAULT_BASELINE)
    p_sp.add_argument("--out", default=None, help="comparison CSV path (default: stdout)")
    _add_chain_flags(p_sp)

    return parser


def _chain_config_from(kv: dict[str, str], source: str, args) -> ChainConfig:
    def pick(flag, key, default, getter):
        if flag is not None:
            return flag
        return getter(kv, key, source, default)

    try:
        return ChainConfig(
            burn_in=pick(args.burn_in, "burn_in", 2000, get_int),
            samples=pick(args.samples, "samples", 10000, get_int),
            thin=pick(args.thin, "thin", 1, get_int),
            seed=pick(args.seed, "seed", 0, get_int),
            target_accept_block=get_float(kv, "target_accept_block", source, 0.234),
            target_accept_scalar=get_float(kv, "target_accept_scalar", source, 0.44),
            adapt_window=pick(args.adapt_window, "adapt_window", 50, get_int),
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def _sim_config_from(kv: dict[str, str], source: str, seed_override=None) -> SimConfig:
    seed = seed_override if seed_override is not None else get_int(kv, "seed", source, 0)
    return SimConfig(
        individuals=get_int(kv, "individuals", source),
        periods=get_int(kv, "periods", source),
        sigma=get_float(kv, "sigma", source),
        beta_true=(get_float(kv, "beta0", source, -1.0),
                   get_float(kv, "beta1", source, 1.0),
                   get_float(kv, "beta2", source, 1.0)),
        replicates=get_int(kv, "replicates", source, 30),
        seed=seed,
    )


def cmd_gen(args) -> int:
    kv = read_kv_file(args.config)
    sim = _sim_config_from(kv, args.config, seed_override=args.seed)
    rep = args.replicate if args.replicate is not None else get_int(kv, "replicate", args.config, 0)
    rng = np.random.default_rng(derive_seed(sim.seed, rep, 0))
    panel, true_eps = gen_panel(sim, rng)
    panel.to_csv(args.out)
    sidecar: dict[str, object] = {
        "individuals": sim.individuals, "periods": sim.periods, "sigma": sim.sigma,
        "beta0": sim.beta_true[0], "beta1": sim.beta_true[1], "beta2": sim.beta_true[2],
        "seed": sim.seed, "replicate": rep,
    }
    for i, e in enumerate(true_eps, start=1):
        sidecar[f"epsilon.{i}"] = float(e)
    write_kv_file(args.out + ".truth", sidecar, header="panelbayes generation truth")
    return 0


def _write_summary(stats, out_path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["parameter", "mean", "sd", "lcl", "ucl", "ess"])
    for name in ("beta0", "beta1", "beta2", "sigma"):
        s = stats[name]
        w.writerow([name] + [repr(float(v)) for v in (s.mean, s.sd, s.lower, s.upper, s.ess)])
    if out_path is None:
        sys.stdout.write(buf.getvalue())
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())


def _optional_kv(config_path):
    if config_path is None:
        return {}, "<flags>"
    return read_kv_file(config_path), config_path


def cmd_fit(args) -> int:
    data = PanelDataset.from_csv(args.data)
    if args.priors_in == "uninformative":
        priors = default_uninformative()
    else:
        priors = load_priors(args.priors_in)
    cfg = _chain_config_from(*_optional_kv(args.config), args)
    samples = run_chain(data, priors, cfg)
    _write_summary(summarize(samples), args.out)
    if args.priors_out:
        save_priors(posterior_to_priorset(samples), args.priors_out)
    if args.draws_out:
        draws_to_csv(samples, args.draws_out)
    return 0


def cmd_study(args) -> int:
    kv = read_kv_file(args.config)
    sim = _sim_config_from(kv, args.config, seed_override=args.seed)
    cfg = _chain_config_from(kv, args.config, args)
    run_ids = [r.strip() for r in kv.get("runs", ",".join(RUNS)).split(",") if r.strip()]
    for rid in run_ids:
        if rid not in RUNS:
            raise ConfigError(f"{args.config}: unknown run id {rid!r} in 'runs'")
    outdir = args.out if args.out is not None else kv.get("out")
    if not outdir:
        raise ConfigError(f"{args.config}: no output directory (set 'out' or pass --out)")
    hardware = os.cpu_count() or 1
    jobs = args.jobs if args.jobs is not None else get_int(kv, "jobs", args.config, hardware)
    jobs = max(1, min(jobs, hardware))
    result = run_study(sim, run_ids, cfg, jobs=jobs)
    for path in write_tables(result, outdir):
        print(path)
    return 0


def cmd_spindex(args) -> int:
    path = args.data if args.data is not None else surrogate_path()
    series = load_returns(path)
    cfg = _chain_config_from(*_optional_kv(args.config), args)
    rows = two_stage_fit(series, cfg, split_year=args.split_year,
                         threshold=args.threshold, baseline=args.baseline)
    if args.out is None:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["run", "parameter", "mean", "sd", "lcl", "ucl"])
        for row in rows:
            w.writerow([row["run"], row["parameter"]] +
                       [repr(float(row[k])) for k in ("mean", "sd", "lcl", "ucl")])
    else:
        write_comparison_csv(rows, args.out)
    return 0


_COMMANDS = {"gen": cmd_gen, "fit": cmd_fit, "study": cmd_study, "spindex": cmd_spindex}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SamplerError as exc:
        print(f"sampler failure: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 2
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
