"""Time-to-solution statistics and benchmark campaigns.

TTS is the expected cost of reaching the solution with 99%
confidence: tau * ln(0.01) / ln(1 - P).  The attack solvers feed it
two ways: measured per-iteration success frequency (stern) or ranked
runtime quantiles over repetitions (pt).  Campaigns sweep parameter
grids, aggregate per-combo reports, and fit scaling exponents with
bootstrap confidence intervals.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .concurrency import pool_size
from .isd import IsdConfig, stern_run, stern_theoretical_tts
from .ising import map_to_ising
from .mceliece import generate_instance
from .pt import PtConfig, pt_run

DEFAULT_RESAMPLES = 1000


def tts_from_success_prob(tau: float, p_succ: float,
                          confidence: float = 0.99) -> float:
    """Expected cost to the confidence level for i.i.d. attempts."""
    if not 0.0 < p_succ < 1.0:
        raise ValueError("success probability must be strictly inside (0, 1)")
    if tau <= 0.0:
        raise ValueError("per-attempt cost must be positive")
    return tau * math.log(1.0 - confidence) / math.log(1.0 - p_succ)


def _rank_quantile(times: np.ndarray, censored: np.ndarray, q: float) -> float:
    """Order-statistic quantile; censored entries rank above all others."""
    order = np.lexsort((times, censored.astype(np.int8)))
    n = len(times)
    idx = max(0, math.ceil(q * n) - 1)
    sel = order[idx]
    return math.inf if censored[sel] else float(times[sel])


def tts_from_runtime_ranks(runtimes, quantile: float, censored=None,
                           resamples: int = DEFAULT_RESAMPLES,
                           rng=None) -> tuple[float, float]:
    """Empirical runtime quantile with a bootstrap standard error.

    Failed runs enter as censored at their budget time and rank above
    every success; a censored quantile is reported as infinite.  The
    stderr is taken over finite bootstrap estimates.
    """
    times = np.asarray(runtimes, dtype=float)
    if times.size == 0:
        raise ValueError("need at least one runtime")
    if censored is None:
        cen = np.zeros(times.size, dtype=bool)
    else:
        cen = np.asarray(censored, dtype=bool)
    point = _rank_quantile(times, cen, quantile)
    if math.isinf(point):
        return math.inf, math.inf
    if rng is None:
        rng = np.random.default_rng(0)
    estimates = np.empty(resamples)
    for b in range(resamples):
        idx = rng.integers(0, times.size, size=times.size)
        estimates[b] = _rank_quantile(times[idx], cen[idx], quantile)
    finite = estimates[np.isfinite(estimates)]
    stderr = float(finite.std()) if finite.size else math.inf
    return point, stderr


class TtsReport:
    """Per-parameter-combo TTS summary from one campaign."""

    __slots__ = ("N", "k", "t", "m", "solver", "tts_99", "tts_50",
                 "stderr_99", "success_prob", "iterations", "cpu_total",
                 "wall_total", "runs", "censored", "resamples",
                 "theory_bits")

    def __init__(self, N, k, t, m, solver, tts_99, tts_50, stderr_99,
                 success_prob, iterations, cpu_total, wall_total, runs,
                 censored, resamples, theory_bits):
        self.N = N
        self.k = k
        self.t = t
        self.m = m
        self.solver = solver
        self.tts_99 = tts_99
        self.tts_50 = tts_50
        self.stderr_99 = stderr_99
        self.success_prob = success_prob
        self.iterations = iterations
        self.cpu_total = cpu_total
        self.wall_total = wall_total
        self.runs = runs
        self.censored = censored
        self.resamples = resamples
        self.theory_bits = theory_bits

    def __repr__(self):
        return (f"TtsReport(N={self.N}, k={self.k}, t={self.t}, "
                f"solver={self.solver}, tts_99={self.tts_99:.4g})")


class ScalingFit:
    """Least-squares line through (predictor, log2 TTS) points."""

    __slots__ = ("points", "slope", "intercept", "slope_stderr",
                 "slope_ci", "residuals", "resamples")

    def __init__(self, points, slope, intercept, slope_stderr, slope_ci,
                 residuals, resamples):
        self.points = points
        self.slope = slope
        self.intercept = intercept
        self.slope_stderr = slope_stderr
        self.slope_ci = slope_ci
        self.residuals = residuals
        self.resamples = resamples

    def __repr__(self):
        return (f"ScalingFit(slope={self.slope:.4f} "
                f"ci=({self.slope_ci[0]:.4f}, {self.slope_ci[1]:.4f}))")


def fit_scaling(points, resamples: int = DEFAULT_RESAMPLES,
                rng=None) -> ScalingFit:
    """Fit y = a + b x with a bootstrap CI on the slope b.

    points: (x, y) pairs, y already in log2 units.
    """
    pts = [(float(x), float(y)) for x, y in points
           if math.isfinite(x) and math.isfinite(y)]
    if len(pts) < 2:
        raise ValueError("need at least two finite points")
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    slope, intercept = np.polyfit(xs, ys, 1)
    residuals = ys - (slope * xs + intercept)
    if rng is None:
        rng = np.random.default_rng(0)
    boot = []
    for _ in range(resamples):
        idx = rng.integers(0, len(pts), size=len(pts))
        if np.unique(xs[idx]).size < 2:
            continue
        b, _ = np.polyfit(xs[idx], ys[idx], 1)
        boot.append(b)
    boot = np.array(boot) if boot else np.array([slope])
    ci = (float(np.percentile(boot, 2.5)), float(np.percentile(boot, 97.5)))
    return ScalingFit(pts, float(slope), float(intercept),
                      float(boot.std()), ci, residuals, resamples)


def scaling_points(reports, predictor: str):
    """(predictor, log2 tts_99) pairs from finite reports.

    predictor is one of k, N, theory (theoretical log2 TTS).
    """
    out = []
    for r in reports:
        if not math.isfinite(r.tts_99) or r.tts_99 <= 0:
            continue
        if predictor == "k":
            x = r.k
        elif predictor == "N":
            x = r.N
        elif predictor == "theory":
            x = r.theory_bits
        else:
            raise ValueError("predictor must be k, N, or theory")
        if x is None:
            continue
        out.append((float(x), math.log2(r.tts_99)))
    return out


# ------------------------------------------------------------------ campaign

def _combo_params(combo):
    if isinstance(combo, dict):
        return int(combo["n"]), int(combo["t"]), int(combo["m"])
    N, t, m = combo
    return int(N), int(t), int(m)


_WARMED: set = set()


def _warm_solver(solver: str):
    """Pay the per-process JIT load before anything is timed.

    The first kernel call in a process loads compiled code from the
    cache (hundreds of ms); letting it land inside a measured run
    would skew that run's CPU time and the high TTS quantiles with it.
    """
    if solver in _WARMED:
        return
    inst, _, _ = generate_instance(14, 2, 4, "warmup")
    if solver == "pt":
        pt_run(map_to_ising(inst), 2, PtConfig(max_sweeps=8, seed="warmup"),
               label="warmup")
    else:
        stern_run(inst, IsdConfig(max_iters=4, seed="warmup"))
    _WARMED.add(solver)


def _pt_combo(N, t, m, per_combo_instances, budget, seed, repetitions,
              workers, pt_options, resamples, runs_sink):
    key = f"N{N}-t{t}-m{m}"
    instances = []
    for i in range(per_combo_instances):
        inst, _, _ = generate_instance(N, t, m, f"{seed}/{key}/inst-{i}")
        instances.append(map_to_ising(inst))
    opts = dict(pt_options or {})
    results = {}

    def job(i, rep):
        cfg = PtConfig(max_sweeps=budget, seed=f"{seed}/{key}/inst-{i}",
                       repetitions=repetitions, **opts)
        results[(i, rep)] = pt_run(instances[i], t, cfg, label=f"rep-{rep}")

    jobs = [(i, r) for i in range(per_combo_instances)
            for r in range(repetitions)]
    nw = pool_size(workers)
    if nw == 1:
        for i, r in jobs:
            job(i, r)
    else:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            list(pool.map(lambda ir: job(*ir), jobs))

    times, cens = [], []
    iters = wall = cpu = 0
    for i, rep in sorted(results):
        res = results[(i, rep)]
        times.append(res.cpu_time)
        cens.append(not res.success)
        iters += res.sweeps
        wall += res.wall_time
        cpu += res.cpu_time
        if runs_sink is not None:
            runs_sink.append({"combo": key, "solver": "pt", "instance": i,
                              "rep": rep, "success": res.success,
                              "sweeps": res.sweeps,
                              "wall_time_s": res.wall_time,
                              "cpu_time_s": res.cpu_time,
                              "seed": res.seed})
    # fixed hash, not hash(): bootstrap draws must not vary across processes
    digest = hashlib.sha256(f"{seed}/{key}/bootstrap".encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    tts99, se99 = tts_from_runtime_ranks(times, 0.99, cens, resamples, rng)
    tts50, _ = tts_from_runtime_ranks(times, 0.50, cens, resamples, rng)
    return TtsReport(N, N - t * m, t, m, "pt", tts99, tts50, se99, None,
                     iters, cpu, wall, len(times), bool(math.isinf(tts99)),
                     resamples, None)


def _stern_combo(N, t, m, per_combo_instances, budget, seed, workers,
                 stern_p, resamples, runs_sink):
    key = f"N{N}-t{t}-m{m}"
    k = N - t * m
    per_inst = max(1, budget // per_combo_instances)
    taus, inst_tts = [], []
    iters = succ = 0
    wall = cpu = 0.0
    for i in range(per_combo_instances):
        inst, _, _ = generate_instance(N, t, m, f"{seed}/{key}/inst-{i}")
        cfg = IsdConfig(p=stern_p, seed=f"{seed}/{key}/inst-{i}",
                        workers=workers)
        res = stern_run(inst, cfg, measure_iters=per_inst)
        taus.append(res.per_iter_time)
        iters += res.iterations
        succ += res.successes
        wall += res.wall_time
        cpu += res.cpu_time
        if 0 < res.successes < res.iterations:
            inst_tts.append(tts_from_success_prob(
                res.per_iter_time, res.successes / res.iterations))
        if runs_sink is not None:
            runs_sink.append({"combo": key, "solver": "stern", "instance": i,
                              "iterations": res.iterations,
                              "successes": res.successes,
                              "wall_time_s": res.wall_time,
                              "cpu_time_s": res.cpu_time})
    p_hat = succ / iters if iters else 0.0
    tau = float(np.mean(taus))
    if 0.0 < p_hat < 1.0:
        tts99 = tts_from_success_prob(tau, p_hat)
        tts50 = tts_from_success_prob(tau, p_hat, confidence=0.50)
        censored = False
    else:
        tts99 = tts50 = math.inf
        censored = True
    stderr = (float(np.std(inst_tts) / math.sqrt(len(inst_tts)))
              if len(inst_tts) > 1 else math.inf)
    theory = stern_theoretical_tts(N, k, t, stern_p)
    return TtsReport(N, k, t, m, "stern", tts99, tts50, stderr, p_hat,
                     iters, cpu, wall, per_combo_instances, censored,
                     resamples, theory)


def run_campaign(grid, per_combo_instances: int, solver: str, budget: int,
                 seed: str = "campaign", repetitions: int = 10,
                 workers: int = 1, stern_p: int = 1, pt_options=None,
                 resamples: int = DEFAULT_RESAMPLES, collect_runs=None):
    """Sweep a parameter grid and report TTS per combo.

    grid: (N, t, m) tuples or {"n","t","m"} dicts.  budget is max
    sweeps per pt run, or total measured stern iterations per combo.
    Per-combo failures are recorded as censored reports and the
    campaign continues.  collect_runs, when a list, receives one
    record per run in deterministic key order.
    """
    if solver not in ("pt", "stern"):
        raise ValueError("solver must be pt or stern")
    _warm_solver(solver)
    reports = []
    for combo in grid:
        N, t, m = _combo_params(combo)
        if N - t * m <= 0 or N > 2 ** m:
            raise ValueError(f"invalid combo N={N} t={t} m={m}")
        if solver == "pt":
            reports.append(_pt_combo(N, t, m, per_combo_instances, budget,
                                     seed, repetitions, workers, pt_options,
                                     resamples, collect_runs))
        else:
            reports.append(_stern_combo(N, t, m, per_combo_instances, budget,
                                        seed, workers, stern_p, resamples,
                                        collect_runs))
    return reports


# ------------------------------------------------------------------- outputs

def write_reports_csv(reports, path: str):
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["n", "k", "t", "m", "solver", "tts_99_s", "tts_50_s",
                     "stderr_99_s", "success_prob", "iterations",
                     "cpu_total_s", "wall_total_s", "runs", "censored",
                     "resamples", "theory_bits"])
        for r in reports:
            wr.writerow([r.N, r.k, r.t, r.m, r.solver,
                         repr(r.tts_99), repr(r.tts_50), repr(r.stderr_99),
                         "" if r.success_prob is None else repr(r.success_prob),
                         r.iterations, f"{r.cpu_total:.6f}",
                         f"{r.wall_total:.6f}", r.runs, int(r.censored),
                         r.resamples,
                         "" if r.theory_bits is None else f"{r.theory_bits:.6f}"])


def write_runs_jsonl(runs, path: str):
    with open(path, "w") as fh:
        for rec in runs:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_scaling_csv(reports, predictor: str, path: str):
    """Plot data: predictor value against both TTS quantiles in log2."""
    import csv

    def _log2(v):
        return f"{math.log2(v):.6f}" if math.isfinite(v) and v > 0 else ""

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow([predictor, "log2_tts_99", "log2_tts_50"])
        for r in reports:
            if predictor == "k":
                x = r.k
            elif predictor == "N":
                x = r.N
            elif predictor == "theory":
                x = r.theory_bits
            else:
                raise ValueError("predictor must be k, N, or theory")
            if x is None or not math.isfinite(r.tts_99):
                continue
            wr.writerow([f"{float(x):.6f}", _log2(r.tts_99), _log2(r.tts_50)])
