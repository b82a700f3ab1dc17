"""Command-line front end: ``infer``, ``simulate`` and ``benchmark``.

Exit codes: 0 success, 2 bad input or configuration, 3 pipeline failure.
Reports go to stdout (or ``--output``); progress and errors go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import anm_decide, igci_decide
from .dataset import load_pair, save_pair, subsample
from .direction import InferenceConfig, infer_direction
from .errors import ExocauseError, ParseError, TooFewRows
from .gpcm import GpConfig
from .mixture import MixtureParams, sample_mixture_pair
from .report import RunReport
from .synth import SynthConfig, gen_confounded, gen_pair

EXIT_USAGE = 2
EXIT_PIPELINE = 3

GENERATORS = ("pair", "confounded", "mixture")
BASELINES = ("igci", "anm")


class UsageError(Exception):
    """Bad flags, inputs or manifests (exit 2)."""


def _default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def _add_inference_flags(p: argparse.ArgumentParser, b_flag: str) -> None:
    g = p.add_argument_group("inference")
    g.add_argument(b_flag, dest="B", type=int, default=None,
                   help="bootstrap replicates (default 1000, or 200 with --fast)")
    g.add_argument("--grid-count", type=int, default=80)
    g.add_argument("--permutations", type=int, default=None,
                   help="permutations for the p-value (default 1000, or 500 with --fast)")
    g.add_argument("--alpha", type=float, default=0.01)
    g.add_argument("--subsample-cap", type=int, default=500)
    g.add_argument("--fast", action="store_true", help="desk-scale preset: B=200, 500 permutations")
    g.add_argument("--workers", type=int, default=_default_workers())
    g.add_argument("--quiet", action="store_true", help="no progress on stderr")
    gp = p.add_argument_group("conditional model")
    d = GpConfig()
    gp.add_argument("--gp-max-iters", type=int, default=d.max_iters)
    gp.add_argument("--gp-tol", type=float, default=d.tol)
    gp.add_argument("--gp-restarts", type=int, default=d.restarts)
    gp.add_argument("--gp-jitter", type=float, default=d.jitter)
    gp.add_argument("--gp-indep-weight", type=float, default=d.indep_weight,
                    help="weight of the latent-versus-input dependence penalty")
    gp.add_argument("--gp-warm-iters", type=int, default=d.warm_iters)
    gp.add_argument("--mc-samples", type=int, default=d.mc_samples)
    gp.add_argument("--deriv-floor", type=float, default=d.deriv_floor)


def _inference_config(args) -> InferenceConfig:
    B = args.B if args.B is not None else (200 if args.fast else 1000)
    perms = args.permutations if args.permutations is not None else (500 if args.fast else 1000)
    try:
        gp = GpConfig(max_iters=args.gp_max_iters, tol=args.gp_tol, restarts=args.gp_restarts,
                      jitter=args.gp_jitter, mc_samples=args.mc_samples,
                      deriv_floor=args.deriv_floor, warm_iters=args.gp_warm_iters,
                      indep_weight=args.gp_indep_weight)
        return InferenceConfig(B=B, grid_count=args.grid_count, permutations=perms,
                               alpha=args.alpha, subsample_cap=args.subsample_cap,
                               gp=gp, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _progress(args, label: str):
    if args.quiet:
        return None
    state = {"dir": 0, "last": -1}

    def report(done: int, total: int) -> None:
        if done == 1:
            state["dir"] += 1
        pct = 100 * done // total
        if pct != state["last"] and (pct % 10 == 0 or done == total):
            state["last"] = pct
            print(f"[{label}] direction {state['dir']}/2: replicate {done}/{total}",
                  file=sys.stderr, flush=True)
    return report


def _baseline_results(s, methods, cfg: InferenceConfig) -> dict:
    out = {}
    for m in methods:
        if m == "igci":
            out["IGCI"] = igci_decide(s).as_dict()
        elif m == "anm":
            capped = subsample(s, cfg.subsample_cap, cfg.seed)
            out["ANM"] = anm_decide(capped, cfg.gp, permutations=500, alpha=0.05,
                                    seed=cfg.seed).as_dict()
    return out


def run_inference(s, cfg: InferenceConfig, input_desc: dict, workers: int = 1,
                  progress=None, methods=()) -> RunReport:
    t0 = time.perf_counter()
    decision = infer_direction(s, cfg, workers=workers, progress=progress)
    report = RunReport.from_decision(decision, input_desc, 0.0,
                                     metadata={"n_input": s.n,
                                               "n_used": min(s.n, cfg.subsample_cap)})
    if methods:
        report.baselines = _baseline_results(s, methods, cfg)
    report.wall_seconds = round(time.perf_counter() - t0, 3)
    return report


def _emit(text: str, output) -> None:
    if output:
        Path(output).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")
        sys.stdout.flush()


def _load(path, fmt):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"input file not found: {p}")
    try:
        return load_pair(p, fmt)
    except (ParseError, TooFewRows) as exc:
        raise UsageError(str(exc)) from None


def cmd_infer(args) -> int:
    s = _load(args.input, args.format)
    cfg = _inference_config(args)
    report = run_inference(s, cfg, {"path": str(args.input)}, args.workers,
                           _progress(args, Path(args.input).name))
    _emit(report.to_json(), args.output)
    return 0


def _parse_floats(text: str, name: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--{name} expects comma-separated numbers, got {text!r}") from None


def cmd_simulate(args) -> int:
    if args.gen not in GENERATORS:
        raise UsageError(f"unknown generator {args.gen!r}; choose from {', '.join(GENERATORS)}")
    desc = {"generator": args.gen, "n": args.n, "seed": args.seed}
    try:
        if args.gen == "mixture":
            params = MixtureParams(weights=_parse_floats(args.mix_weights, "mix-weights"),
                                   means=_parse_floats(args.mix_means, "mix-means"),
                                   variances=_parse_floats(args.mix_vars, "mix-vars"),
                                   intercept=args.intercept, slope=args.slope,
                                   noise_var=args.noise_var)
            s = sample_mixture_pair(params, args.n, args.seed)
            desc.update(weights=list(params.weights), means=list(params.means),
                        variances=list(params.variances), intercept=params.intercept,
                        slope=params.slope, noise_var=params.noise_var)
        else:
            beta = args.beta if args.gen == "confounded" else 0.0
            q = args.q if args.q is not None else (1.5 if args.gen == "confounded" else 1.0)
            scfg = SynthConfig(n=args.n, q=q, b=args.b, alpha_mix=args.alpha_mix,
                               beta_conf=beta, seed=args.seed)
            s = gen_confounded(scfg) if args.gen == "confounded" else gen_pair(scfg)
            desc.update(q=q, b=args.b, alpha_mix=args.alpha_mix, beta=beta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    if not args.infer:
        if args.output:
            save_pair(s, args.output)
        else:
            np.savetxt(sys.stdout, np.column_stack([s.x, s.y]), fmt="%.17g")
        return 0
    cfg = _inference_config(args)
    report = run_inference(s, cfg, desc, args.workers, _progress(args, args.gen))
    _emit(report.to_json(), args.output)
    return 0


def read_manifest(path) -> dict:
    truth = {}
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2 or parts[1] not in ("x->y", "y->x"):
            raise UsageError(f"{path}:{line_no}: expected 'filename x->y|y->x', got {line!r}")
        truth[parts[0]] = parts[1]
    return truth


def _verdict(outcome: str, truth: str) -> str:
    if outcome == "NonIdentifiable":
        return "non_identifiable"
    if outcome == "ConfounderSuspected":
        return "confounder"
    predicted = "x->y" if outcome == "XcausesY" else "y->x"
    return "correct" if predicted == truth else "wrong"


def _baseline_verdict(outcome: str, truth: str) -> str:
    if outcome == "Undecided":
        return "undecided"
    predicted = "x->y" if outcome == "XcausesY" else "y->x"
    return "correct" if predicted == truth else "wrong"


def cmd_benchmark(args) -> int:
    root = Path(args.dir)
    if not root.is_dir():
        raise UsageError(f"benchmark directory not found: {root}")
    manifest = Path(args.manifest) if args.manifest else root / "manifest.txt"
    if not manifest.is_file():
        raise UsageError(f"manifest not found: {manifest}")
    truth = read_manifest(manifest)
    methods = [m for m in (args.methods.split(",") if args.methods else []) if m]
    unknown = [m for m in methods if m not in BASELINES]
    if unknown:
        raise UsageError(f"unknown method(s): {', '.join(unknown)}")

    files = sorted(p for p in root.iterdir()
                   if p.is_file() and p.suffix.lower() in (".txt", ".csv", ".dat")
                   and p.resolve() != manifest.resolve() and not p.name.startswith("."))
    for p in files:
        if p.name not in truth:
            raise UsageError(f"no manifest entry for {p.name}")
    present = {p.name for p in files}
    for name in truth:
        if name not in present:
            raise UsageError(f"manifest names a missing file: {name}")

    cfg = _inference_config(args)
    rows = []
    counts = {"correct": 0, "wrong": 0, "non_identifiable": 0, "confounder": 0}
    base_counts = {m.upper(): {"correct": 0, "wrong": 0, "undecided": 0} for m in methods}
    for p in files:
        s = _load(p, "auto")
        report = run_inference(s, cfg, {"path": str(p)}, args.workers,
                               _progress(args, p.name), methods)
        verdict = _verdict(report.outcome, truth[p.name])
        counts[verdict] += 1
        row = {"file": p.name, "truth": truth[p.name], "report": report.to_dict(),
               "verdict": verdict}
        if methods:
            row["baseline_verdicts"] = {}
            for name, res in report.baselines.items():
                v = _baseline_verdict(res["outcome"], truth[p.name])
                base_counts[name][v] += 1
                row["baseline_verdicts"][name] = v
        rows.append(row)

    decided = counts["correct"] + counts["wrong"]
    table = {"bootstrap": {**counts, "decided": decided,
                           "accuracy": counts["correct"] / decided if decided else None}}
    for name, c in base_counts.items():
        d = c["correct"] + c["wrong"]
        table[name] = {**c, "decided": d, "accuracy": c["correct"] / d if d else None}
    summary = {"n_pairs": len(rows), **counts, "decided": decided,
               "accuracy": table["bootstrap"]["accuracy"], "methods": table}
    _emit(json.dumps({"version": __version__, "config": cfg.as_dict(), "pairs": rows,
                      "summary": summary}, indent=2), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exocause", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="infer the causal direction of one pair file")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["auto", "whitespace", "csv"], default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    _add_inference_flags(p, "--b")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("simulate", help="generate a synthetic pair (optionally infer on it)")
    p.add_argument("--gen", required=True)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--q", type=float, default=None,
                   help="power exponent (default 1, or 1.5 for 'confounded')")
    p.add_argument("--b", type=float, default=0.0, help="cubic coefficient")
    p.add_argument("--alpha-mix", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=1.0, help="confounder strength")
    p.add_argument("--mix-weights", default="0.5,0.5")
    p.add_argument("--mix-means", default="-2,2")
    p.add_argument("--mix-vars", default="1,1")
    p.add_argument("--intercept", type=float, default=0.0)
    p.add_argument("--slope", type=float, default=1.0)
    p.add_argument("--noise-var", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.add_argument("--infer", action="store_true", help="run inference and print the report")
    _add_inference_flags(p, "--replicates")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", help="run every pair file of a directory against a manifest")
    p.add_argument("--dir", required=True)
    p.add_argument("--manifest", help="default: <dir>/manifest.txt")
    p.add_argument("--methods", default="", help="comma-separated baselines: igci,anm")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    _add_inference_flags(p, "--b")
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ExocauseError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
