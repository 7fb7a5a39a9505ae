"""Command line entry point: ``nonxcrc {synth,elec,qa,check,fixture}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import audits
from .core import InputError, LambdaGrid, RiskSpec
from .data import (IngestionError, SyntheticConfig, generate_elec_like, generate_qa_fixture,
                   generate_synthetic, load_elec_csv, load_qa_jsonl, write_elec_csv,
                   write_qa_jsonl)
from .harness import (IntervalTask, MethodConfig, MultilabelTask, RollingProtocol, WeightScheme,
                      method_curve, per_trial_means, rolling_average, run_qa_trials, run_rolling,
                      run_trials, summarize, write_trace_csv)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_AUDIT = 0, 1, 2, 3
OUTPUT_ENV = "NONXCRC_OUTPUT_DIR"

ELEC_METHODS = {"crc_ls": "crc", "nonx_ls": "nonx_crc", "nonx_wls": "nonx_crc_wls"}

log = logging.getLogger("nonxcrc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _output(args, default_name: str) -> Path:
    if args.output:
        return Path(args.output)
    return Path(os.environ.get(OUTPUT_ENV, "results")) / default_name


def _print_summary(traces, window: int, out) -> None:
    summary = summarize(traces)
    print(f"{'method':<14}{'mean':>9}{'median':>9}{'smoothed_median':>17}"
          f"{'mean_lambda':>13}{'mean_set_size':>15}", file=out)
    for name, st in summary.per_method.items():
        smooth = float(np.median(rolling_average(method_curve(traces, name), window)))
        size = "" if st.mean_set_size is None else f"{st.mean_set_size:.4f}"
        print(f"{name:<14}{st.mean_loss:>9.4f}{st.median_loss:>9.4f}{smooth:>17.4f}"
              f"{st.mean_lambda:>13.4f}{size:>15}", file=out)


def cmd_synth(args, out=None) -> int:
    out = out or sys.stdout
    scheme = WeightScheme.parse(args.weights)
    if scheme.kind == "similarity":
        raise UsageError("similarity weights need embeddings; use them with the qa command")
    if args.set_mode == "top_k":
        task, grid = MultilabelTask("top_k"), LambdaGrid.integers(args.n_labels)
    else:
        task, grid = MultilabelTask("one_minus_lambda"), LambdaGrid.linspace(0, 1, args.step)
    spec = RiskSpec(args.alpha)
    protocol = RollingProtocol((MethodConfig("crc"), MethodConfig("nonx_crc", scheme)),
                               warmup=args.warmup)
    steps = tuple(int(s) for s in args.changepoints.split(",")) if args.changepoints else ()

    def trial(t, seed):
        cfg = SyntheticConfig(args.n_points, args.n_labels, args.setting, steps, seed=seed)
        X, Y = generate_synthetic(cfg)
        return run_rolling(X, Y, protocol, spec, grid, task, trial=t)

    traces = run_trials(trial, args.trials, args.seed, jobs=args.jobs)
    path = _output(args, f"synth_{args.setting}.csv")
    write_trace_csv(path, traces)
    print(f"setting={args.setting} alpha={args.alpha} trials={args.trials} trace={path}", file=out)
    _print_summary(traces, args.window, out)
    return EXIT_OK


def cmd_elec(args, out=None) -> int:
    out = out or sys.stdout
    data = load_elec_csv(args.data, permute=args.permute, seed=args.seed)
    scheme = WeightScheme("decay", rho=args.rho)
    methods = []
    for name in args.methods.split(","):
        if name not in ELEC_METHODS:
            raise UsageError(f"unknown electricity method {name!r}; choose from {sorted(ELEC_METHODS)}")
        tag = ELEC_METHODS[name]
        methods.append(MethodConfig(tag, WeightScheme() if tag == "crc" else scheme,
                                    weighted_model=tag == "nonx_crc_wls"))
    spec = RiskSpec(args.alpha)
    protocol = RollingProtocol(tuple(methods), warmup=args.warmup)
    traces = run_rolling(data.features, data.target, protocol, spec,
                         LambdaGrid.linspace(0, 1, args.step), IntervalTask())
    path = _output(args, "elec_permuted.csv" if args.permute else "elec.csv")
    write_trace_csv(path, traces)
    print(f"alpha={args.alpha} permuted={args.permute} points={len(data)} trace={path}", file=out)
    _print_summary(traces, args.window, out)
    return EXIT_OK


def cmd_qa(args, out=None) -> int:
    out = out or sys.stdout
    if args.data:
        records = load_qa_jsonl(args.data)
    else:
        records = generate_qa_fixture(args.fixture, seed=args.fixture_seed)
    spec = RiskSpec(args.alpha)
    modes = ("uniform", "similarity") if args.weights == "both" else (args.weights,)
    traces = []
    print(f"alpha={args.alpha} records={len(records)} n_calib={args.n_calib} trials={args.trials}",
          file=out)
    for mode in modes:
        tr = run_qa_trials(records, args.n_calib, args.trials, spec, mode, seed=args.seed)
        traces.extend(tr)
        method = tr[0].method
        risk = per_trial_means(tr, method)
        size = per_trial_means(tr, method, "set_size")
        print(f"{mode:<11} ({method}): risk {risk.mean():.4f} +- {risk.std():.4f}  "
              f"set size {size.mean():.3f} +- {size.std():.3f}", file=out)
    path = _output(args, "qa.csv")
    write_trace_csv(path, traces)
    print(f"trace={path}", file=out)
    return EXIT_OK


def cmd_check(args, out=None) -> int:
    out = out or sys.stdout
    results = [audits.tv_bound_audit(args.draws, seed=args.seed),
               audits.uniform_equivalence_audit(args.batches, seed=args.seed)]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name}: {status} draws={r.draws} violations={r.violations}", file=out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_AUDIT


def cmd_fixture(args, out=None) -> int:
    out = out or sys.stdout
    path = Path(args.output)
    path.parent.mkdir(parents=True, exist_ok=True)
    if args.kind == "qa":
        write_qa_jsonl(path, generate_qa_fixture(args.n or 800, seed=args.seed))
    else:
        write_elec_csv(path, generate_elec_like(args.n or 3444, seed=args.seed))
    print(f"wrote {path}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nonxcrc", description="Non-exchangeable conformal risk control experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, alpha):
        sp.add_argument("--alpha", type=float, default=alpha)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--output", "-o", default=None, help=f"trace CSV path (default under ${OUTPUT_ENV} or ./results)")

    s = sub.add_parser("synth", help="multilabel synthetic time series")
    common(s, 0.2)
    s.add_argument("--setting", choices=("iid", "changepoints", "drift"), default="iid")
    s.add_argument("--trials", type=int, default=10)
    s.add_argument("--n-points", type=int, default=2000)
    s.add_argument("--n-labels", type=int, default=10)
    s.add_argument("--changepoints", default="500,1500", help="comma-separated timesteps")
    s.add_argument("--warmup", type=int, default=200)
    s.add_argument("--weights", default="decay:0.99", help="uniform | decay:<rho> | maxent:<beta>[:<eps>]")
    s.add_argument("--set-mode", choices=("threshold", "top_k"), default="threshold")
    s.add_argument("--step", type=float, default=0.01)
    s.add_argument("--window", type=int, default=30)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("elec", help="electricity transfer intervals")
    common(e, 0.05)
    e.add_argument("--data", required=True, help="CSV with nswprice,vicprice,nswdemand,vicdemand,transfer")
    e.add_argument("--permute", action="store_true")
    e.add_argument("--methods", default="crc_ls,nonx_ls,nonx_wls")
    e.add_argument("--rho", type=float, default=0.99)
    e.add_argument("--warmup", type=int, default=200)
    e.add_argument("--step", type=float, default=0.01)
    e.add_argument("--window", type=int, default=300)
    e.set_defaults(func=cmd_elec)

    q = sub.add_parser("qa", help="question answering best-F1 control")
    common(q, 0.3)
    src = q.add_mutually_exclusive_group()
    src.add_argument("--data", help="QA candidates JSONL")
    src.add_argument("--fixture", type=int, default=800, help="size of the synthetic fixture")
    q.add_argument("--fixture-seed", type=int, default=0)
    q.add_argument("--weights", choices=("uniform", "similarity", "both"), default="both")
    q.add_argument("--n-calib", type=int, default=500)
    q.add_argument("--trials", type=int, default=50)
    q.set_defaults(func=cmd_qa)

    c = sub.add_parser("check", help="randomized property audits")
    c.add_argument("--draws", type=int, default=10_000)
    c.add_argument("--batches", type=int, default=1000)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_check)

    f = sub.add_parser("fixture", help="write a synthetic QA JSONL or electricity-style CSV")
    f.add_argument("kind", choices=("qa", "elec"))
    f.add_argument("--n", type=int, default=None)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--output", "-o", required=True)
    f.set_defaults(func=cmd_fixture)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if getattr(args, "trials", 1) < 1:
        parser.error("--trials must be at least 1")
    try:
        return args.func(args)
    except (UsageError, InputError) as exc:
        print(f"nonxcrc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IngestionError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"nonxcrc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
