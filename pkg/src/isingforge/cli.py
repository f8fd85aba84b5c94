"""Command-line entry point; owner of every on-disk format.

Three formats live here.  The public instance file (JSON, tagged
mceliece-ising/v1) carries only what an attacker may see; the planted
message and the private key go to separate sidecar files so a solver
invocation physically cannot read the answer.  Spin problems travel
as plain text (header `plocal v1 ...`), one signed term per line.

Subcommands chain the formats: gen writes instances, map/reduce turn
them into spin problems, solve attacks them, decode/verify consume
the sidecars, bench/phase/census/rankdist emit analysis CSVs.

Exit codes: 0 success, 1 solver failure, 2 usage, 3 I/O or malformed
file, 4 internal.  Errors are one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import bench, clustering, mceliece
from .gf2 import BitMatrix, BitVector, vecmat
from .gf2m import FieldContext, FieldPoly
from .goppa import DecodeFailure, build_code
from .isd import IsdConfig, stern_run
from .ising import (
    PLocalInstance,
    map_to_ising,
    reduce_to_2local,
    reduce_to_3local,
)
from .pt import PtConfig, pt_run

INSTANCE_FORMAT = "mceliece-ising/v1"
SOLUTION_FORMAT = "mceliece-ising-solution/v1"
PRIVATE_FORMAT = "mceliece-ising-private/v1"

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INTERNAL = 4


class FormatError(ValueError):
    """Structurally invalid file content (distinct from bad flag values)."""


def _diag(kind: str, detail) -> None:
    sys.stderr.write(json.dumps({"error": kind, "detail": str(detail)}) + "\n")


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _require(cond, msg: str) -> None:
    if not cond:
        raise FormatError(msg)


class ForgeParser(argparse.ArgumentParser):
    """Parser whose usage errors are machine-parseable one-liners."""

    def error(self, message):
        _diag("usage", message)
        raise SystemExit(EXIT_USAGE)


# -------------------------------------------------------------- JSON formats

def _load_json(path: str, expected_format: str) -> dict:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
    _require(isinstance(obj, dict), f"{path}: top level must be an object")
    _require(obj.get("format") == expected_format,
             f"{path}: expected format tag {expected_format!r}")
    return obj


def _dump_json(path: str, obj: dict) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def instance_to_json(inst) -> dict:
    return {
        "format": INSTANCE_FORMAT,
        "n": inst.N,
        "k": inst.k,
        "t": inst.t,
        "m": inst.m,
        "reduction_poly": inst.reduction_poly,
        "g_prime": inst.G_prime.to_hex_rows(),
        "q_prime": inst.q_prime.to_hex(),
        "seed": inst.seed,
    }


def instance_from_json(obj: dict):
    try:
        n, k, t, m = (int(obj[f]) for f in ("n", "k", "t", "m"))
        rows = obj["g_prime"]
        _require(isinstance(rows, list) and len(rows) == k,
                 "g_prime must hold exactly k hex rows")
        G = BitMatrix.from_hex_rows(rows, n)
        qp = BitVector.from_hex(obj["q_prime"], n)
        red = int(obj["reduction_poly"])
        seed = str(obj["seed"])
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad instance data: {exc}") from None
    return mceliece.McElieceInstance(n, k, t, m, red, G, qp, seed)


def write_instance_file(path: str, inst) -> None:
    _dump_json(path, instance_to_json(inst))


def read_instance_file(path: str):
    return instance_from_json(_load_json(path, INSTANCE_FORMAT))


def solution_to_json(inst, sol) -> dict:
    return {
        "format": SOLUTION_FORMAT,
        "n": inst.N,
        "k": inst.k,
        "t": inst.t,
        "q": sol.q.to_hex(),
        "error": sol.error.to_hex(),
        "seed": inst.seed,
    }


def write_solution_file(path: str, inst, sol) -> None:
    _dump_json(path, solution_to_json(inst, sol))


def read_solution_file(path: str):
    obj = _load_json(path, SOLUTION_FORMAT)
    try:
        n, k = int(obj["n"]), int(obj["k"])
        q = BitVector.from_hex(obj["q"], k)
        err = BitVector.from_hex(obj["error"], n)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad solution data: {exc}") from None
    return mceliece.Solution(q, err)


def private_to_json(inst, priv) -> dict:
    code = priv.code
    perm = [priv.P.row(i).support()[0] for i in range(priv.P.rows)]
    return {
        "format": PRIVATE_FORMAT,
        "n": inst.N,
        "k": inst.k,
        "t": inst.t,
        "m": code.ctx.m,
        "reduction_poly": code.ctx.reduction_poly,
        "goppa_poly": [format(c, "x") for c in code.g.c],
        "support": [format(int(a), "x") for a in code.support],
        "s": priv.S.to_hex_rows(),
        "perm": perm,
        "seed": inst.seed,
    }


def write_private_file(path: str, inst, priv) -> None:
    _dump_json(path, private_to_json(inst, priv))


def read_private_file(path: str):
    obj = _load_json(path, PRIVATE_FORMAT)
    try:
        n, k, m = int(obj["n"]), int(obj["k"]), int(obj["m"])
        ctx = FieldContext(m, int(obj["reduction_poly"]))
        g = FieldPoly([int(c, 16) for c in obj["goppa_poly"]], ctx)
        support = [int(a, 16) for a in obj["support"]]
        S = BitMatrix.from_hex_rows(obj["s"], k)
        perm = [int(j) for j in obj["perm"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad private key data: {exc}") from None
    _require(len(support) == n, "support length must equal n")
    _require(sorted(perm) == list(range(n)),
             "perm must be a permutation of 0..n-1")
    try:
        code = build_code(ctx, g, support)
    except ValueError as exc:
        raise FormatError(f"bad code data: {exc}") from None
    _require(code.k == k, "code dimension disagrees with stored k")
    P = BitMatrix.zeros(n, n)
    for i, j in enumerate(perm):
        P.set(i, j, 1)
    return mceliece.private_key_from_parts(code, S, P)


# --------------------------------------------------------------- text format

def write_plocal_file(path: str, pl: PLocalInstance) -> None:
    lines = [f"plocal v1 {pl.num_vars} {len(pl.terms)} {pl.offset}"]
    for c, v in pl.terms:
        if not v:
            raise ValueError("constant terms must be folded into the offset")
        lines.append(str(c) + " " + " ".join(str(i) for i in v))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_plocal_file(path: str) -> PLocalInstance:
    with open(path) as fh:
        raw = fh.read()
    rows = []
    for line in raw.splitlines():
        body = line.split("#", 1)[0].strip()
        if body:
            rows.append(body)
    _require(rows, f"{path}: no content")
    head = rows[0].split()
    _require(len(head) == 5 and head[0] == "plocal" and head[1] == "v1",
             "header must read: plocal v1 <num_vars> <num_terms> <offset>")
    try:
        nv, nt, off = int(head[2]), int(head[3]), int(head[4])
    except ValueError:
        raise FormatError("header counts must be integers") from None
    _require(len(rows) == nt + 1,
             f"expected {nt} term lines, found {len(rows) - 1}")
    terms = []
    for body in rows[1:]:
        toks = body.split()
        try:
            coeff = int(toks[0])
            idx = tuple(int(x) for x in toks[1:])
        except ValueError:
            raise FormatError(f"bad term line: {body!r}") from None
        _require(idx, f"term needs at least one index: {body!r}")
        terms.append((coeff, idx))
    try:
        return PLocalInstance(nv, terms, off)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


# --------------------------------------------------------------- subcommands

def _seed_int(seed: str) -> int:
    return int.from_bytes(hashlib.sha256(seed.encode()).digest()[:8], "little")


def _cmd_gen(args) -> int:
    if args.count < 1:
        raise ValueError("--count must be positive")
    os.makedirs(args.out_dir, exist_ok=True)
    for i in range(args.count):
        inst, sol, priv = mceliece.generate_instance(
            args.n, args.t, args.m, f"{args.seed}/{i}",
            allow_singular_S=args.allow_singular_s)
        base = os.path.join(args.out_dir, f"instance-{i:04d}")
        write_instance_file(base + ".json", inst)
        write_solution_file(base + ".solution.json", inst, sol)
        write_private_file(base + ".private.json", inst, priv)
        _emit({"instance": base + ".json", "n": inst.N, "k": inst.k,
               "t": inst.t, "m": inst.m, "seed": inst.seed})
    return EXIT_OK


def _cmd_map(args) -> int:
    inst = read_instance_file(args.in_path)
    pl = map_to_ising(inst)
    write_plocal_file(args.out, pl)
    _emit({"out": args.out, "num_vars": pl.num_vars, "terms": len(pl.terms),
           "p_max": pl.p_max, "offset": pl.offset})
    return EXIT_OK


def _cmd_reduce(args) -> int:
    pl = read_plocal_file(args.in_path)
    red = reduce_to_3local(pl) if pl.p_max > 3 else pl
    if args.locality == 2:
        red = reduce_to_2local(red)
    write_plocal_file(args.out, red)
    _emit({"out": args.out, "num_vars": red.num_vars, "terms": len(red.terms),
           "p_max": red.p_max, "offset": red.offset})
    return EXIT_OK


def _cmd_solve_stern(args) -> int:
    inst = read_instance_file(args.in_path)
    cfg = IsdConfig(p=args.p, max_iters=args.max_iters, seed=args.seed,
                    workers=args.workers)
    res = stern_run(inst, cfg)
    _emit({
        "success": res.success,
        "iterations": res.iterations,
        "wall_time_s": res.wall_time,
        "cpu_time_s": res.cpu_time,
        "per_iter_time_s": res.per_iter_time,
        "recovered_q": None if res.message is None else res.message.to_hex(),
        "recovered_error": None if res.error is None else res.error.to_hex(),
        "seed": args.seed,
    })
    return EXIT_OK if res.success else EXIT_SOLVER


def _cmd_solve_pt(args) -> int:
    pl = read_plocal_file(args.in_path)
    if args.reps < 1:
        raise ValueError("--reps must be positive")
    cfg = PtConfig(num_replicas=args.replicas, beta_min=args.beta_min,
                   beta_max=args.beta_max, max_sweeps=args.sweeps,
                   seed=args.seed, repetitions=args.reps)
    solved = False
    for rep in range(args.reps):
        res = pt_run(pl, args.target_t, cfg, label=f"rep-{rep}")
        solved = solved or res.success
        _emit({
            "rep": rep,
            "success": res.success,
            "sweeps": res.sweeps,
            "wall_time_s": res.wall_time,
            "cpu_time_s": res.cpu_time,
            "config": None if res.config is None else res.config.to_hex(),
            "seed": res.seed,
        })
    return EXIT_OK if solved else EXIT_SOLVER


def _cmd_decode(args) -> int:
    inst = read_instance_file(args.in_path)
    priv = read_private_file(args.private_key)
    try:
        out = mceliece.decrypt(inst.q_prime, priv)
    except DecodeFailure as exc:
        _diag("solver", f"decoding failed: {exc}")
        return EXIT_SOLVER
    if priv.S_inv is None:
        q0, err, kernel = out
        _emit({"q": q0.to_hex(), "error": err.to_hex(),
               "s_corank": len(kernel)})
    else:
        q, err = out
        _emit({"q": q.to_hex(), "error": err.to_hex(), "s_corank": 0})
    return EXIT_OK


def _cmd_verify(args) -> int:
    inst = read_instance_file(args.in_path)
    sol = read_solution_file(args.solution)
    if sol.q.n != inst.k or sol.error.n != inst.N:
        _emit({"valid": False, "detail": "dimension mismatch"})
        return EXIT_SOLVER
    predicted = vecmat(sol.q, inst.G_prime) ^ sol.error
    weight = sol.error.weight()
    valid = predicted == inst.q_prime and weight == inst.t
    _emit({"valid": bool(valid), "error_weight": weight, "t": inst.t})
    return EXIT_OK if valid else EXIT_SOLVER


def _cmd_bench_campaign(args) -> int:
    with open(args.manifest) as fh:
        try:
            man = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{args.manifest}: {exc}") from None
    _require(isinstance(man, dict), "manifest must be a JSON object")
    for key in ("solver", "grid", "budget"):
        _require(key in man, f"manifest missing key {key!r}")
    out_dir = str(man.get("out_dir", "."))
    predictors = man.get("predictors", ["k"])
    _require(isinstance(predictors, list) and predictors,
             "predictors must be a non-empty list")
    runs = []
    try:
        reports = bench.run_campaign(
            man["grid"],
            int(man.get("instances_per_combo", 8)),
            str(man["solver"]),
            int(man["budget"]),
            seed=str(man.get("seed", "campaign")),
            repetitions=int(man.get("repetitions", 10)),
            workers=int(man.get("workers", 1)),
            stern_p=int(man.get("stern_p", 1)),
            pt_options=man.get("pt_options"),
            resamples=int(man.get("resamples", bench.DEFAULT_RESAMPLES)),
            collect_runs=runs,
        )
    except (TypeError, ValueError) as exc:
        raise FormatError(f"manifest: {exc}") from None
    os.makedirs(out_dir, exist_ok=True)
    written = [os.path.join(out_dir, "reports.csv"),
               os.path.join(out_dir, "runs.jsonl")]
    bench.write_reports_csv(reports, written[0])
    bench.write_runs_jsonl(runs, written[1])
    for pred in predictors:
        path = os.path.join(out_dir, f"scaling_{pred}.csv")
        try:
            bench.write_scaling_csv(reports, str(pred), path)
        except ValueError as exc:
            raise FormatError(f"manifest: {exc}") from None
        written.append(path)
    _emit({"combos": len(reports), "files": written})
    return EXIT_OK


def _linspace(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid axis must read lo:hi:count, got {spec!r}")
    lo, hi, num = float(parts[0]), float(parts[1]), int(parts[2])
    if num < 1 or lo > hi:
        raise ValueError(f"bad grid axis {spec!r}")
    return np.linspace(lo, hi, num)


def _cmd_phase(args) -> int:
    axes = args.grid.split(",")
    if len(axes) != 2:
        raise ValueError("--grid must read x_lo:x_hi:nx,eps_lo:eps_hi:neps")
    grid = clustering.PhaseGrid(args.model, _linspace(axes[0]),
                                _linspace(axes[1]))
    clustering.write_phase_csv(grid, args.out)
    _emit({"out": args.out, "model": args.model, "cells": int(grid.phi.size),
           "forbidden_cells": int(grid.forbidden.sum())})
    return EXIT_OK


def _cmd_census(args) -> int:
    N = args.n
    if N < 1:
        raise ValueError("--n must be positive")
    if args.weights:
        weights = sorted({int(w) for w in args.weights.split(",")})
        if any(not 0 <= w <= N for w in weights):
            raise ValueError("--weights entries must lie in 0..n")
    else:
        weights = list(range(N + 1))
    eps_list = [w / N for w in weights]
    rng = np.random.default_rng(_seed_int(args.seed))
    census = clustering.empirical_census(args.model, N, eps_list,
                                         args.samples, rng)
    clustering.write_census_csv(census, args.out)
    _emit({"out": args.out, "model": args.model, "n": N, "weights": weights,
           "samples": census.samples})
    return EXIT_OK


def _cmd_rankdist(args) -> int:
    if args.alpha_max < 0:
        raise ValueError("--alpha-max must be non-negative")
    import csv

    with open(args.out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["alpha", "probability"])
        for a in range(args.alpha_max + 1):
            wr.writerow([a, f"{clustering.rank_distribution(a):.12f}"])
    mean, var = clustering.kernel_statistics()
    _emit({"out": args.out, "alpha_max": args.alpha_max,
           "multiplicity_mean": mean, "multiplicity_var": var})
    return EXIT_OK


# ------------------------------------------------------------------ dispatch

def build_parser() -> ForgeParser:
    parser = ForgeParser(prog="isingforge",
                         description="planted decoding problems as spin "
                                     "glasses: generate, attack, analyze")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate instances with sidecar secrets")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--allow-singular-s", action="store_true")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("map", help="instance to p-local spin problem")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_map)

    p = sub.add_parser("reduce", help="lower locality with auxiliary spins")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--locality", type=int, choices=(3, 2), required=True)
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("solve", help="attack an instance")
    ssub = p.add_subparsers(dest="solver", required=True)

    s = ssub.add_parser("stern", help="information set decoding")
    s.add_argument("--in", dest="in_path", required=True)
    s.add_argument("--p", type=int, default=1)
    s.add_argument("--max-iters", type=int, default=10_000_000)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--seed", default="isd")
    s.set_defaults(func=_cmd_solve_stern)

    s = ssub.add_parser("pt", help="replica exchange on the spin problem")
    s.add_argument("--in", dest="in_path", required=True)
    s.add_argument("--target-t", type=int, required=True)
    s.add_argument("--replicas", type=int, default=16)
    s.add_argument("--beta-min", type=float, default=0.1)
    s.add_argument("--beta-max", type=float, default=1.0)
    s.add_argument("--sweeps", type=int, default=10_000_000)
    s.add_argument("--reps", type=int, default=1)
    s.add_argument("--seed", default="pt")
    s.set_defaults(func=_cmd_solve_pt)

    p = sub.add_parser("decode", help="decrypt with the private key")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--private-key", required=True)
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("verify", help="check a claimed solution")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--solution", required=True)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("bench", help="benchmark campaigns")
    bsub = p.add_subparsers(dest="bench_command", required=True)
    b = bsub.add_parser("campaign", help="sweep a grid from a manifest")
    b.add_argument("--manifest", required=True)
    b.set_defaults(func=_cmd_bench_campaign)

    p = sub.add_parser("phase", help="analytic pair-census exponent surface")
    p.add_argument("--model", choices=("hwm", "rphwm", "lshwm"), required=True)
    p.add_argument("--grid", required=True,
                   help="x_lo:x_hi:nx,eps_lo:eps_hi:neps")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_phase)

    p = sub.add_parser("census", help="empirical pair-distance counts")
    p.add_argument("--model", choices=("hwm", "rphwm", "lshwm"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--weights", default="",
                   help="comma-separated shell weights, default all")
    p.add_argument("--seed", default="census")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_census)

    p = sub.add_parser("rankdist", help="random-matrix corank law")
    p.add_argument("--alpha-max", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_rankdist)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else int(exc.code)
    try:
        return args.func(args)
    except FormatError as exc:
        _diag("format", exc)
        return EXIT_IO
    except OSError as exc:
        _diag("io", exc)
        return EXIT_IO
    except ValueError as exc:
        _diag("usage", exc)
        return EXIT_USAGE
    except Exception as exc:
        _diag("internal", f"{type(exc).__name__}: {exc}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
