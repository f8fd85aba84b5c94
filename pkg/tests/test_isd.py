"""Stern and plain information-set decoding, empirical and closed form."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from isingforge.gf2 import BitMatrix, BitVector, matvec, vecmat
from isingforge.isd import (
    IsdConfig,
    isd_success_probability,
    isd_theoretical_tts,
    plain_isd_run,
    public_parity_check,
    recover_message,
    stern_iteration,
    stern_run,
    stern_success_probability,
    stern_tau,
    stern_theoretical_tts,
)
from isingforge.mceliece import generate_instance
from isingforge.prng import derive_state


def test_public_parity_check_annihilates_code_and_matches_syndrome():
    inst, sol, _ = generate_instance(40, 3, 8, "pc")
    H, z = public_parity_check(inst)
    assert H.rows == inst.N - inst.k and H.cols == inst.N
    for i in range(inst.k):
        row = BitVector.zeros(inst.k)
        row.set(i, 1)
        assert matvec(H, vecmat(row, inst.G_prime)).weight() == 0
    assert matvec(H, sol.error) == z
    assert recover_message(inst, sol.error) == sol.q


def test_stern_recovers_planted_error():
    inst, sol, _ = generate_instance(36, 3, 8, "solve-a")
    res = stern_run(inst, IsdConfig(max_iters=200_000, seed="s"))
    assert res.success
    assert res.error == sol.error
    assert res.message == sol.q
    assert 0 < res.iterations <= 200_000
    assert res.per_iter_time >= 0.0


def _augmented(H, z):
    return BitMatrix.from_array(
        np.hstack([H.to_array(), z.to_bits()[:, None]]))


def test_pinned_partition_finds_a_constructed_split():
    inst, sol, _ = generate_instance(34, 3, 8, "pin")
    H, z = public_parity_check(inst)
    A = _augmented(H, z)
    nr, k = H.rows, inst.k
    errs = [i for i in range(inst.N) if sol.error.get(i)]
    rest = [i for i in range(inst.N) if i not in errs]
    # two error positions split across the halves, one swept into R
    R = rest[:nr - 1] + errs[:1]
    I1 = errs[1:2] + rest[nr - 1:nr - 2 + k // 2]
    I2 = errs[2:3] + rest[nr - 2 + k // 2:]
    found = stern_iteration(A, inst.t, 1, np.random.default_rng(0),
                            partition=(R, I1, I2))
    assert found == errs


def test_random_iterations_only_return_coset_solutions():
    inst, _, _ = generate_instance(30, 2, 7, "coset")
    H, z = public_parity_check(inst)
    A = _augmented(H, z)
    rng = np.random.default_rng(7)
    hits = 0
    for _ in range(200):
        got = stern_iteration(A, inst.t, 1, rng)
        if got is None:
            continue
        hits += 1
        e = BitVector.zeros(inst.N)
        for pos in got:
            e.set(pos, 1)
        assert e.weight() <= inst.t
        assert matvec(H, e) == z
    assert hits > 0


@pytest.mark.parametrize("workers", [1, 2, 4])
def test_runs_are_reproducible_per_pool_size(workers):
    inst, sol, _ = generate_instance(36, 3, 8, "det")
    cfg = IsdConfig(max_iters=300_000, seed="d", workers=workers)
    first = stern_run(inst, cfg)
    second = stern_run(inst, cfg)
    assert first.success and second.success
    assert second.iterations == first.iterations
    assert second.error == first.error
    # solution is the unique coset leader regardless of pool size
    assert first.error == sol.error


def test_measure_mode_counts_exactly():
    inst, _, _ = generate_instance(30, 4, 5, "freq")
    res = stern_run(inst, IsdConfig(seed="m"), measure_iters=4000)
    assert not res.success and res.error is None
    assert res.iterations == 4000
    p_hat = res.successes / res.iterations
    p_exact = stern_success_probability(inst.N, inst.k, inst.t, 1)
    sigma = math.sqrt(p_exact * (1 - p_exact) / res.iterations)
    assert abs(p_hat - p_exact) < 5 * sigma
    # same seed, same split: frequency streams are reproducible
    again = stern_run(inst, IsdConfig(seed="m"), measure_iters=4000)
    assert again.successes == res.successes


def _oracle_stern_probability(N, k, t, p):
    # enumerate (information set, half split) pairs; error set fixed by symmetry
    errs = set(range(t))
    n1 = k // 2
    good = total = 0
    for info in itertools.combinations(range(N), k):
        overlap = errs.intersection(info)
        for half in itertools.combinations(info, n1):
            total += 1
            inside = errs.intersection(half)
            if len(overlap) == 2 * p and len(inside) == p:
                good += 1
    return good / total


def test_success_probability_against_enumeration():
    for (N, k, t, p) in [(10, 6, 4, 1), (9, 5, 3, 1), (10, 4, 4, 2)]:
        assert stern_success_probability(N, k, t, p) == \
            pytest.approx(_oracle_stern_probability(N, k, t, p), abs=1e-12)


def test_plain_probability_against_enumeration():
    N, k, t = 10, 4, 3
    errs = set(range(t))
    good = sum(1 for info in itertools.combinations(range(N), k)
               if not errs.intersection(info))
    assert isd_success_probability(N, k, t) == \
        pytest.approx(good / math.comb(N, k), abs=1e-12)
    assert isd_success_probability(10, 8, 3) == 0.0


def test_plain_isd_recovers_planted_error():
    inst, sol, _ = generate_instance(28, 2, 6, "plain")
    res = plain_isd_run(inst, IsdConfig(max_iters=200_000, seed="p"))
    assert res.success and res.error == sol.error


def test_cost_model_reference_point():
    bits = stern_theoretical_tts(3488, 2720, 64)
    assert bits == pytest.approx(159.715, abs=0.01)
    # p=1 is the minimizer at this size
    assert stern_theoretical_tts(3488, 2720, 64, p=1) == pytest.approx(bits)
    assert stern_theoretical_tts(3488, 2720, 64, p=2) > bits
    assert isd_theoretical_tts(3488, 2720, 64) > bits


def test_tau_counts_elimination_plus_enumeration():
    assert stern_tau(20, 8, 4, 1) == 12 ** 3 + 12 * 4 * 4
    assert stern_tau(20, 9, 4, 2) == 11 ** 3 + 11 * math.comb(4, 2) * math.comb(5, 2)


def test_parameter_validation():
    with pytest.raises(ValueError):
        IsdConfig(p=0)
    with pytest.raises(ValueError):
        stern_success_probability(20, 8, 1, 1)  # 2p > t
    with pytest.raises(ValueError):
        stern_success_probability(20, 1, 4, 1)  # 2p > k
    inst, _, _ = generate_instance(26, 2, 6, "val")
    with pytest.raises(ValueError):
        stern_run(inst, IsdConfig(p=2, max_iters=10))  # 2p > t


def test_iteration_cap_reports_failure():
    inst, _, _ = generate_instance(44, 3, 8, "cap")
    res = stern_run(inst, IsdConfig(max_iters=3, seed="c"))
    assert not res.success and res.error is None
    assert res.iterations == 3


def test_seed_stream_independence():
    a = derive_state("s", "worker-0")
    b = derive_state("s", "worker-1")
    c = derive_state("s", "worker-0")
    assert not np.array_equal(a, b)
    assert np.array_equal(a, c)
