"""Command-line front end for the verification sweeps.

Exit status: 0 when every requested sweep passes its checks, 1 when a sweep
completes but a check fails, 2 for usage or configuration errors.

A JSON config file (--config) may preset any long option of the chosen
subcommand, spelled with underscores ("m_moment"). Explicit flags win over
the file, the file wins over built-in defaults, and unknown keys produce a
warning on stderr but do not abort. Seed lists are written "0..4"
(inclusive range) or "0,2,5"; dimension lists for the kesten sweep are
comma-separated.

Records go to --out as JSONL (--format json), CSV (--format csv) or both
(--format both appends ".csv" for the second file). --no-timestamps nulls
the wall-clock fields before writing so repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from ._version import __version__
from .experiments import (
    ExperimentRecord,
    certificate_arithmetic,
    export_csv,
    persist,
    run_certificate,
    run_distribution_check,
    run_haagerup_gap,
    run_kesten_sweep,
    run_main_estimate,
    run_moe_sweep,
    run_product_bound,
)
from .haar import Seed, sample_tuple
from .spectral import OptConfig

__all__ = ["main", "build_parser", "parse_seeds", "parse_int_list", "parse_words"]


class UsageError(ValueError):
    """Bad flag value or config content; maps to exit code 2."""


# defaults double as the set of config-settable keys per subcommand
DEFAULTS: dict[str, dict] = {
    "sample": {"k": 2, "n": 64, "seed": 0},
    "kesten": {"k": 2, "n": "16,32,64", "seeds": "0..4", "m_moment": 20},
    "dist-check": {
        "k": 2,
        "n": 32,
        "words": "1;1,-1;1,2,-1,-2;1,1",
        "samples": 20,
        "base_seed": 0,
    },
    "haagerup": {"k": 4, "n": 64, "num_matrices": 10, "seeds": "0..2", "m_lower": 1},
    "main-estimate": {"k": 4, "n": 64, "seeds": "0..1", "starts": 8, "max_iters": 500},
    "moe": {"k": 4, "n": 64, "seeds": "0..1", "starts": 8, "max_iters": 500},
    "product-bound": {"k": 3, "n": 32, "seeds": "0..4"},
    "certificate": {
        "k": 4.0,
        "n": 64,
        "seeds": "0..1",
        "starts": 8,
        "max_iters": 500,
        "s_hat": None,
        "bell_entropy": None,
    },
    "all": {},
}

_COMMON = {"out": None, "format": "json", "no_timestamps": False, "threads": None}


def parse_seeds(value) -> list[int]:
    """Accept "a..b" (inclusive), "a,b,c", a bare int, or a list of ints."""
    if isinstance(value, int):
        return [value]
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    text = str(value).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise UsageError(f"empty seed range {text!r}")
            return list(range(lo, hi + 1))
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse seeds {text!r}") from exc


def parse_int_list(value) -> list[int]:
    if isinstance(value, int):
        return [value]
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    try:
        return [int(part) for part in str(value).split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse integer list {value!r}") from exc


def parse_words(value) -> list[tuple[int, ...]]:
    """Words are semicolon-separated, letters comma-separated and signed."""
    if isinstance(value, (list, tuple)):
        words = [tuple(int(x) for x in w) for w in value]
    else:
        try:
            words = [
                tuple(int(x) for x in chunk.split(","))
                for chunk in str(value).split(";")
                if chunk.strip()
            ]
        except ValueError as exc:
            raise UsageError(f"cannot parse words {value!r}") from exc
    if not words:
        raise UsageError("no words given")
    if any(letter == 0 for w in words for letter in w):
        raise UsageError("word letters are signed nonzero indices")
    return words


# ===========================================================================
# parser
# ===========================================================================


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON file presetting this subcommand's options")
    sub.add_argument("--out", help="append records to this JSONL path")
    sub.add_argument(
        "--format",
        choices=["json", "csv", "both"],
        default=None,
        help="output format for --out (default json)",
    )
    sub.add_argument(
        "--no-timestamps",
        action="store_true",
        default=None,
        help="null wall-clock fields for byte-identical output",
    )
    sub.add_argument("--threads", type=int, default=None, help="thread pool size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moelab",
        description="seeded sweeps for the random unitary compression channel",
    )
    parser.add_argument("--version", action="version", version=f"moelab {__version__}")
    subs = parser.add_subparsers(dest="command", metavar="command")

    p = subs.add_parser("sample", help="draw one unitary tuple and report basic stats")
    p.add_argument("--k", type=int, default=None, help="number of unitaries")
    p.add_argument("--n", type=int, default=None, help="matrix dimension")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    _add_common(p)

    p = subs.add_parser("kesten", help="norm of the generator sum vs its free bracket")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--n", default=None, help="comma-separated dimensions")
    p.add_argument("--seeds", default=None, help='"a..b" or comma list')
    p.add_argument("--m-moment", type=int, default=None, help="moment order for the lower bound")
    _add_common(p)

    p = subs.add_parser("dist-check", help="word traces vs the free trace")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--words", default=None, help='e.g. "1,2,-1,-2;1,1"')
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--base-seed", type=int, default=None)
    _add_common(p)

    p = subs.add_parser("haagerup", help="empirical coefficient-channel norms vs bounds")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--num-matrices", type=int, default=None)
    p.add_argument("--seeds", default=None)
    p.add_argument("--m-lower", type=int, default=None)
    _add_common(p)

    p = subs.add_parser("main-estimate", help="max output distance from flat vs 3/k")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seeds", default=None)
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    _add_common(p)

    p = subs.add_parser("moe", help="min output entropy vs log k - 9/k")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seeds", default=None)
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    _add_common(p)

    p = subs.add_parser("product-bound", help="entangled-input entropy vs 2 log k - (log k)/k")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seeds", default=None)
    _add_common(p)

    p = subs.add_parser("certificate", help="additivity-violation arithmetic, measured or direct")
    p.add_argument("--k", type=float, default=None, help="number of unitaries (float ok with --s-hat)")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seeds", default=None)
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--s-hat", type=float, default=None, help="skip measurement, use this distance")
    p.add_argument("--bell-entropy", type=float, default=None, help="optional sharpening with --s-hat")
    _add_common(p)

    p = subs.add_parser("all", help="run every sweep with its defaults")
    _add_common(p)

    return parser


# ===========================================================================
# option merging
# ===========================================================================


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"config {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(
            f"config {path}: invalid JSON at line {exc.lineno} column {exc.colno}"
        ) from exc
    if not isinstance(cfg, dict):
        raise UsageError(f"config {path}: top level must be an object")
    return cfg


def _merge_options(args: argparse.Namespace) -> dict:
    """flag > config file > default, restricted to the subcommand's keys."""
    known = dict(DEFAULTS[args.command])
    known.update(_COMMON)
    config = _load_config(args.config) if args.config else {}
    for key in sorted(config):
        if key not in known:
            print(f"warning: config key {key!r} not used by {args.command}", file=sys.stderr)
    merged = {}
    for key, default in known.items():
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
        elif key in config:
            merged[key] = config[key]
        else:
            merged[key] = default
    return merged


def _opt_config(opts: dict) -> OptConfig:
    return OptConfig(starts=int(opts["starts"]), max_iters=int(opts["max_iters"]))


# ===========================================================================
# dispatch and printing
# ===========================================================================


def _positive(opts: dict, *keys: str) -> None:
    for key in keys:
        if int(opts[key]) < 1:
            raise UsageError(f"--{key.replace('_', '-')} must be >= 1, got {opts[key]}")


def _run_sample(opts: dict) -> ExperimentRecord:
    import numpy as np

    _positive(opts, "n")
    k, n, seed = int(opts["k"]), int(opts["n"]), int(opts["seed"])
    if k < 2:
        raise UsageError(f"--k must be >= 2, got {k}")
    t = sample_tuple(n, k, Seed(seed))
    err = t.unitarity_error()
    norm = float(np.linalg.svd(t.matrices.sum(axis=0), compute_uv=False)[0])
    checks = {"unitary": bool(err <= 1e-12)}
    return ExperimentRecord(
        name="sample",
        params={"k": k, "n": n, "seed": seed},
        results={
            "unitarity_error": float(err),
            "sum_norm": norm,
            "limit": 2.0 * math.sqrt(k - 1),
            "checks": checks,
            "passed": all(checks.values()),
        },
        started_at=None,
        finished_at=None,
    )


def _run_certificate(opts: dict) -> ExperimentRecord:
    k = float(opts["k"])
    if opts["s_hat"] is not None:
        verdict = certificate_arithmetic(
            k,
            float(opts["s_hat"]),
            bell_entropy=None if opts["bell_entropy"] is None else float(opts["bell_entropy"]),
        )
        params = {"k": k, "s_hat": float(opts["s_hat"]), "measured": False}
        if opts["bell_entropy"] is not None:
            params["bell_entropy"] = float(opts["bell_entropy"])
    else:
        if not k.is_integer():
            raise UsageError("--k must be an integer to measure; give --s-hat for arithmetic only")
        if k < 2:
            raise UsageError(f"--k must be >= 2, got {k}")
        _positive(opts, "n", "starts", "max_iters")
        seeds = parse_seeds(opts["seeds"])
        verdict = run_certificate(
            int(k), int(opts["n"]), _opt_config(opts), seeds, threads=opts["threads"]
        )
        params = {
            "k": int(k),
            "n": int(opts["n"]),
            "seeds": seeds,
            "starts": int(opts["starts"]),
            "max_iters": int(opts["max_iters"]),
            "measured": True,
        }
    results = dict(verdict.to_dict())
    results.pop("k", None)
    results.pop("n", None)
    if not params["measured"]:
        results.pop("s_hat", None)
        results.pop("bell_entropy", None)
    results["checks"] = {}
    results["passed"] = True
    return ExperimentRecord(
        name="certificate", params=params, results=results, started_at=None, finished_at=None
    )


def _dispatch(command: str, opts: dict) -> list[ExperimentRecord]:
    threads = opts.get("threads")
    if command == "sample":
        return [_run_sample(opts)]
    if command == "kesten":
        _positive(opts, "k", "m_moment")
        return [
            run_kesten_sweep(
                int(opts["k"]),
                parse_int_list(opts["n"]),
                parse_seeds(opts["seeds"]),
                m_moment=int(opts["m_moment"]),
                threads=threads,
            )
        ]
    if command == "dist-check":
        _positive(opts, "k", "n", "samples")
        return [
            run_distribution_check(
                int(opts["k"]),
                int(opts["n"]),
                parse_words(opts["words"]),
                samples=int(opts["samples"]),
                base_seed=int(opts["base_seed"]),
                threads=threads,
            )
        ]
    if command == "haagerup":
        _positive(opts, "k", "n", "num_matrices", "m_lower")
        return [
            run_haagerup_gap(
                int(opts["k"]),
                int(opts["n"]),
                num_matrices=int(opts["num_matrices"]),
                seeds=parse_seeds(opts["seeds"]),
                m_lower=int(opts["m_lower"]),
                threads=threads,
            )
        ]
    if command == "main-estimate":
        _positive(opts, "k", "n", "starts", "max_iters")
        return [
            run_main_estimate(
                int(opts["k"]),
                int(opts["n"]),
                _opt_config(opts),
                parse_seeds(opts["seeds"]),
                threads=threads,
            )
        ]
    if command == "moe":
        _positive(opts, "k", "n", "starts", "max_iters")
        return [
            run_moe_sweep(
                int(opts["k"]),
                int(opts["n"]),
                _opt_config(opts),
                parse_seeds(opts["seeds"]),
                threads=threads,
            )
        ]
    if command == "product-bound":
        _positive(opts, "k", "n")
        return [
            run_product_bound(
                int(opts["k"]), int(opts["n"]), parse_seeds(opts["seeds"]), threads=threads
            )
        ]
    if command == "certificate":
        return [_run_certificate(opts)]
    if command == "all":
        records = []
        for name in (
            "kesten",
            "dist-check",
            "haagerup",
            "main-estimate",
            "moe",
            "product-bound",
        ):
            sub = dict(DEFAULTS[name])
            sub.update(_COMMON)
            sub["threads"] = threads
            records.extend(_dispatch(name, sub))
        return records
    raise UsageError(f"unknown command {command!r}")


def _print_record(rec: ExperimentRecord) -> None:
    print(f"== {rec.name} ==")
    for key in sorted(rec.params):
        print(f"  {key} = {rec.params[key]}")
    for key in sorted(rec.results):
        if key in ("cells", "checks", "passed"):
            continue
        val = rec.results[key]
        if isinstance(val, float):
            print(f"  {key}: {val:.6g}")
        else:
            print(f"  {key}: {val}")
    checks = rec.results.get("checks", {})
    for name in sorted(checks):
        print(f"  [{'ok' if checks[name] else 'FAIL'}] {name}")
    print(f"  {'PASS' if rec.passed else 'FAIL'}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        opts = _merge_options(args)
        records = _dispatch(args.command, opts)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if opts.get("no_timestamps"):
        records = [r.strip_timestamps() for r in records]
    for rec in records:
        _print_record(rec)

    out = opts.get("out")
    if out:
        fmt = opts.get("format") or "json"
        if fmt in ("json", "both"):
            for rec in records:
                persist(rec, out)
        if fmt == "csv":
            export_csv(records, out)
        elif fmt == "both":
            export_csv(records, out + ".csv")

    return 0 if all(r.passed for r in records) else 1


if __name__ == "__main__":
    sys.exit(main())
