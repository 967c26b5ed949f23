"""
Command-line interface (``fastcp``).

Subcommands read and write the package's binary formats: ``.dten`` tensors,
``.tkr`` Tucker models and ``.cpm`` CP models.
"""

import argparse
import json
import logging
import sys
from dataclasses import asdict
from typing import List, Optional

from . import __version__
from .bench import Generator, add_noise, gen_cp_tensor, gen_tucker_tensor, load_config, run_dist_benchmark, run_experiment
from .bench.data import DEFAULT_ZERO_FRACTION
from .bench.experiment import Algorithm, compress
from .cp import CpModel, StopRule, cp_als, cp_hals, cp_mu, cp_reconstruct
from .dist import read_grid_file
from .ffcp import ConstraintKind, ConstraintSpec, ffcp
from .fileformats import read_any, read_dten, read_tkr, write_cpm, write_dten, write_tkr
from .rand import DEFAULT_OVERSAMPLE, SeedSpec
from .tensor import fit
from .tucker import TuckerModel, hosvd, reconstruct, tucker_als

_log = logging.getLogger(__name__)

_LOG_LEVELS = [logging.WARNING, logging.INFO, logging.DEBUG]


def _int_list(value: str) -> List[int]:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from None


def _add_seed(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="root random seed (default: 0)")


def _add_stop(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-iters", type=int, default=1000, help="sweep budget (default: 1000)")
    parser.add_argument("--fit-tol", type=float, default=1e-6, help="fit-change tolerance (default: 1e-6)")


def _add_constraint(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--constraint", choices=[k.value for k in ConstraintKind], default="none")
    parser.add_argument("--sparsity-c", type=float, default=0.0, help="soft-threshold level of --constraint sparse")


def _add_compression(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mlrank", type=_int_list, help="multilinear rank, e.g. 10,10,10")
    parser.add_argument("--oversample", type=int, default=DEFAULT_OVERSAMPLE,
                        help=f"oversampling p (default: {DEFAULT_OVERSAMPLE})")


def _write_trace(path: Optional[str], result) -> None:
    if path:
        with open(path, "w") as fh:
            for record in result.trace:
                fh.write(json.dumps(asdict(record)) + "\n")


def _cmd_gen(args) -> int:
    seed = SeedSpec(args.seed)
    generator = Generator(args.generator)
    if generator is Generator.TUCKER_GAUSSIAN:
        Y, truth = gen_tucker_tensor(args.dims, args.mlrank or args.rank, seed.spawn(1))
    else:
        distribution = "exponential" if generator is Generator.CP_EXPONENTIAL_SPARSE else "normal"
        Y, truth = gen_cp_tensor(args.dims, args.rank, seed.spawn(1), distribution, args.zero_fraction)
    write_dten(args.out, add_noise(Y, args.snr, seed.spawn(2)))
    if args.truth:
        (write_tkr if isinstance(truth, TuckerModel) else write_cpm)(args.truth, truth)
    print(f"Wrote {args.out} with shape {Y.shape}")
    return 0


def _tucker_command(algorithm: Algorithm):
    def run(args) -> int:
        Y = read_dten(args.input)
        ranks = args.mlrank or [args.rank] * Y.ndim
        if algorithm is Algorithm.HOSVD and args.iters > 0:
            model = tucker_als(Y, ranks, iters=args.iters, init=hosvd(Y, ranks))
        else:
            model = compress(algorithm, Y, ranks, getattr(args, "oversample", 0), SeedSpec(args.seed))
        write_tkr(args.out, model)
        print(f"Wrote {args.out}: core {model.ranks}, fit {fit(Y, reconstruct(model)):.6f}")
        return 0

    return run


def _cmd_cp(args) -> int:
    Y = read_dten(args.input)
    stop = StopRule(args.max_iters, args.fit_tol)
    kind = ConstraintKind(args.constraint)
    engines = {
        ConstraintKind.NONE: cp_als,
        ConstraintKind.NONNEG_MU: cp_mu,
        ConstraintKind.NONNEG_HALS: cp_hals,
    }
    if kind not in engines:
        raise ValueError("--constraint sparse is only available for ffcp")
    result = engines[kind](Y, args.rank, stop, SeedSpec(args.seed))
    write_cpm(args.out, result.model)
    _write_trace(args.trace, result)
    print(f"Wrote {args.out}: {result.iterations} sweeps, fit {fit(Y, cp_reconstruct(result.model)):.6f}")
    return 0


def _cmd_ffcp(args) -> int:
    seed = SeedSpec(args.seed)
    if str(args.input).endswith(".tkr"):
        model = read_tkr(args.input)
    else:
        Y = read_dten(args.input)
        ranks = args.mlrank or [args.rank] * Y.ndim
        model = compress(Algorithm(args.compression), Y, ranks, args.oversample, seed.spawn(0))
    constraint = ConstraintSpec(ConstraintKind(args.constraint), args.sparsity_c)
    result = ffcp(model, args.rank, constraint, StopRule(args.max_iters, args.fit_tol), seed.spawn(1))
    write_cpm(args.out, result.model)
    _write_trace(args.trace, result)
    print(f"Wrote {args.out}: {result.iterations} sweeps, compressed fit {result.fit:.6f}")
    return 0


def _cmd_fit(args) -> int:
    Y = read_dten(args.reference)
    estimate = read_any(args.estimate)
    if isinstance(estimate, TuckerModel):
        estimate = reconstruct(estimate)
    elif isinstance(estimate, CpModel):
        estimate = cp_reconstruct(estimate)
    print(f"{fit(Y, estimate):.10f}")
    return 0


def _apply_overrides(cfg, args):
    if args.runs is not None:
        cfg.runs = args.runs
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _cmd_bench(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    report = run_experiment(cfg, args.out)
    sys.stdout.write(report.summary_table())
    return 0


def _cmd_dist_bench(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    splits = read_grid_file(args.grid)
    records = run_dist_benchmark(cfg, splits, args.out, args.export_log)
    for r in records:
        print(f"run {r['run']}: fit {r['fit_single']:.10f} vs {r['fit_dist']:.10f} "
              f"(diff {r['fit_diff']:.2e}), max angle {r['max_angle']:.2e}, peak {r['peak_bytes']} bytes")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fastcp", description="Fast CP and randomized Tucker decompositions")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic tensor (.dten)")
    p.add_argument("--dims", type=_int_list, required=True)
    p.add_argument("--rank", type=int, default=10)
    p.add_argument("--mlrank", type=_int_list)
    p.add_argument("--generator", choices=[g.value for g in Generator], default=Generator.CP_GAUSSIAN.value)
    p.add_argument("--snr", type=float, default=float("inf"), help="SNR in dB (default: inf, no noise)")
    p.add_argument("--zero-fraction", type=float, default=DEFAULT_ZERO_FRACTION)
    p.add_argument("--truth", help="also write the ground-truth model (.cpm or .tkr)")
    p.add_argument("--out", required=True)
    _add_seed(p)
    p.set_defaults(func=_cmd_gen)

    for name, algorithm, help_text in [
        ("tucker", Algorithm.HOSVD, "HOSVD, or Tucker-ALS with --iters"),
        ("randtucker", Algorithm.RANDTUCKER, "randomized Tucker"),
        ("randtucker2i", Algorithm.RANDTUCKER2I, "randomized Tucker with two projected passes"),
    ]:
        p = sub.add_parser(name, help=f"{help_text} (.dten -> .tkr)")
        p.add_argument("input")
        p.add_argument("--rank", type=int, default=10, help="rank for every mode when --mlrank is absent")
        if algorithm is Algorithm.HOSVD:
            p.add_argument("--mlrank", type=_int_list)
            p.add_argument("--iters", type=int, default=0, help="Tucker-ALS sweeps after HOSVD (default: 0)")
        else:
            _add_compression(p)
        p.add_argument("--out", required=True)
        _add_seed(p)
        p.set_defaults(func=_tucker_command(algorithm))

    p = sub.add_parser("cp", help="CP on the full tensor (.dten -> .cpm)")
    p.add_argument("input")
    p.add_argument("--rank", type=int, required=True)
    _add_constraint(p)
    _add_stop(p)
    p.add_argument("--trace", help="write the sweep trace as JSON lines")
    p.add_argument("--out", required=True)
    _add_seed(p)
    p.set_defaults(func=_cmd_cp)

    p = sub.add_parser("ffcp", help="FFCP on a Tucker model (.tkr or .dten -> .cpm)")
    p.add_argument("input")
    p.add_argument("--rank", type=int, required=True)
    _add_constraint(p)
    _add_compression(p)
    p.add_argument("--compression", choices=[a.value for a in Algorithm if a.is_tucker],
                   default=Algorithm.RANDTUCKER2I.value)
    _add_stop(p)
    p.add_argument("--trace", help="write the sweep trace as JSON lines")
    p.add_argument("--out", required=True)
    _add_seed(p)
    p.set_defaults(func=_cmd_ffcp)

    p = sub.add_parser("fit", help="fit of an estimate (.dten/.tkr/.cpm) against a .dten tensor")
    p.add_argument("reference")
    p.add_argument("estimate")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("bench", help="run an experiment config")
    p.add_argument("config")
    p.add_argument("--out", help="report directory")
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("dist-bench", help="distributed vs single-node RandTucker")
    p.add_argument("grid", help="grid file with per-mode segment lengths")
    p.add_argument("config")
    p.add_argument("--out", help="report directory")
    p.add_argument("--export-log", help="write the last run's message log as JSON lines")
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_dist_bench)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=_LOG_LEVELS[min(args.verbose, len(_LOG_LEVELS) - 1)],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        _log.debug("Command failed", exc_info=True)
        print(f"fastcp: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
