"""End-to-end command driving, file formats, and exit codes."""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isingforge import cli
from isingforge.concurrency import pool_size
from isingforge.ising import PLocalInstance

GEN = ["gen", "--n", "38", "--t", "3", "--m", "8", "--seed", "s1",
       "--out-dir"]


def _run(capsys, argv):
    code = cli.main(argv)
    out = capsys.readouterr()
    lines = [json.loads(s) for s in out.out.splitlines()]
    return code, lines, out.err


def _gen(capsys, tmp_path, sub="a"):
    d = str(tmp_path / sub)
    code, lines, _ = _run(capsys, GEN + [d])
    assert code == 0
    return d, lines


def test_generate_writes_triplet_with_sidecars(capsys, tmp_path):
    d, lines = _gen(capsys, tmp_path)
    assert lines[0]["k"] == 14 and lines[0]["n"] == 38
    base = os.path.join(d, "instance-0000")
    assert os.path.exists(base + ".json")
    assert os.path.exists(base + ".solution.json")
    assert os.path.exists(base + ".private.json")
    # the public file never carries the secrets
    pub = open(base + ".json").read()
    assert "error" not in pub and "goppa" not in pub and "perm" not in pub


def test_generation_is_byte_identical_across_runs(capsys, tmp_path):
    d1, _ = _gen(capsys, tmp_path, "a")
    d2, _ = _gen(capsys, tmp_path, "b")
    for suffix in (".json", ".solution.json", ".private.json"):
        f1 = open(os.path.join(d1, "instance-0000" + suffix), "rb").read()
        f2 = open(os.path.join(d2, "instance-0000" + suffix), "rb").read()
        assert f1 == f2


def test_count_produces_distinct_instances(capsys, tmp_path):
    d = str(tmp_path / "many")
    code, lines, _ = _run(capsys, ["gen", "--n", "38", "--t", "3", "--m", "8",
                                   "--seed", "s2", "--count", "2",
                                   "--out-dir", d])
    assert code == 0 and len(lines) == 2
    a = open(os.path.join(d, "instance-0000.json")).read()
    b = open(os.path.join(d, "instance-0001.json")).read()
    assert a != b


def test_verify_accepts_generator_output(capsys, tmp_path):
    d, _ = _gen(capsys, tmp_path)
    base = os.path.join(d, "instance-0000")
    code, lines, _ = _run(capsys, ["verify", "--in", base + ".json",
                                   "--solution", base + ".solution.json"])
    assert code == 0
    assert lines[0]["valid"] is True and lines[0]["error_weight"] == 3


def test_verify_rejects_tampered_solution(capsys, tmp_path):
    d, _ = _gen(capsys, tmp_path)
    base = os.path.join(d, "instance-0000")
    sol = json.load(open(base + ".solution.json"))
    sol["error"] = "0b" + "0" * (len(sol["error"]) - 2)
    bad = os.path.join(d, "bad.solution.json")
    json.dump(sol, open(bad, "w"))
    code, lines, _ = _run(capsys, ["verify", "--in", base + ".json",
                                   "--solution", bad])
    assert code == 1 and lines[0]["valid"] is False


def test_verify_flags_dimension_mismatch(capsys, tmp_path):
    d, _ = _gen(capsys, tmp_path)
    other = str(tmp_path / "other")
    code, _, _ = _run(capsys, ["gen", "--n", "40", "--t", "3", "--m", "8",
                               "--seed", "s3", "--out-dir", other])
    assert code == 0
    code, lines, _ = _run(capsys, [
        "verify", "--in", os.path.join(d, "instance-0000.json"),
        "--solution", os.path.join(other, "instance-0000.solution.json")])
    assert code == 1 and lines[0]["detail"] == "dimension mismatch"


def test_map_reduce_solve_chain(capsys, tmp_path):
    d, _ = _gen(capsys, tmp_path)
    base = os.path.join(d, "instance-0000")
    plp = os.path.join(d, "inst.plocal")
    code, lines, _ = _run(capsys, ["map", "--in", base + ".json",
                                   "--out", plp])
    assert code == 0 and lines[0]["num_vars"] == 14

    r3 = os.path.join(d, "r3.plocal")
    code, lines, _ = _run(capsys, ["reduce", "--in", plp, "--out", r3,
                                   "--locality", "3"])
    assert code == 0 and lines[0]["p_max"] <= 3
    r2 = os.path.join(d, "r2.plocal")
    code, lines, _ = _run(capsys, ["reduce", "--in", plp, "--out", r2,
                                   "--locality", "2"])
    assert code == 0 and lines[0]["p_max"] <= 2

    sol = json.load(open(base + ".solution.json"))
    code, lines, _ = _run(capsys, ["solve", "pt", "--in", plp, "--target-t",
                                   "3", "--sweeps", "200000", "--seed", "c1"])
    assert code == 0
    assert any(l["success"] and l["config"] == sol["q"] for l in lines)

    code, lines, _ = _run(capsys, ["solve", "stern", "--in", base + ".json",
                                   "--max-iters", "300000", "--seed", "c2"])
    assert code == 0
    assert lines[0]["recovered_q"] == sol["q"]
    assert lines[0]["recovered_error"] == sol["error"]


def test_decode_round_trip(capsys, tmp_path):
    d, _ = _gen(capsys, tmp_path)
    base = os.path.join(d, "instance-0000")
    sol = json.load(open(base + ".solution.json"))
    code, lines, _ = _run(capsys, ["decode", "--in", base + ".json",
                                   "--private-key", base + ".private.json"])
    assert code == 0
    assert lines[0]["q"] == sol["q"] and lines[0]["error"] == sol["error"]
    assert lines[0]["s_corank"] == 0


def test_solver_failure_exit_code(capsys, tmp_path):
    d, _ = _gen(capsys, tmp_path)
    plp = os.path.join(d, "inst.plocal")
    _run(capsys, ["map", "--in", os.path.join(d, "instance-0000.json"),
                  "--out", plp])
    # weight-0 target is below the planted optimum: must time out
    code, lines, _ = _run(capsys, ["solve", "pt", "--in", plp, "--target-t",
                                   "0", "--sweeps", "60", "--seed", "c3"])
    assert code == 1
    assert lines and not lines[0]["success"]


def test_usage_errors_exit_two(capsys, tmp_path):
    for argv in (
        [],
        ["frobnicate"],
        ["gen", "--n", "38", "--t", "3", "--m", "8"],  # missing --seed
        ["reduce", "--in", "x", "--out", "y", "--locality", "4"],
        ["gen", "--n", "38", "--t", "3", "--m", "8", "--seed", "s",
         "--count", "0", "--out-dir", str(tmp_path)],
        ["phase", "--model", "hwm", "--grid", "0:1:5", "--out",
         str(tmp_path / "p.csv")],
    ):
        code = cli.main(argv)
        err = capsys.readouterr().err
        assert code == 2, argv
        diag = json.loads(err.splitlines()[-1])
        assert diag["error"] == "usage"


def test_io_errors_exit_three(capsys, tmp_path):
    code, _, err = _run(capsys, ["map", "--in", str(tmp_path / "missing.json"),
                                 "--out", str(tmp_path / "o.plocal")])
    assert code == 3 and json.loads(err.splitlines()[-1])["error"] == "io"
    junk = tmp_path / "junk.json"
    junk.write_text('{"format": "something-else"}')
    code, _, err = _run(capsys, ["map", "--in", str(junk),
                                 "--out", str(tmp_path / "o.plocal")])
    assert code == 3 and json.loads(err.splitlines()[-1])["error"] == "format"


def test_internal_errors_exit_four(capsys, monkeypatch):
    def boom(*a, **kw):
        raise RuntimeError("wires crossed")

    monkeypatch.setattr(cli.mceliece, "generate_instance", boom)
    code = cli.main(["gen", "--n", "38", "--t", "3", "--m", "8", "--seed",
                     "s", "--out-dir", "."])
    err = capsys.readouterr().err
    assert code == 4
    assert json.loads(err.splitlines()[-1])["error"] == "internal"


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0
    capsys.readouterr()


def test_plocal_rejections(tmp_path):
    cases = [
        "",
        "plocal v2 1 0 0\n",
        "plocal v1 2 2 0\n1 0\n",          # count mismatch
        "plocal v1 2 1 0\n1 zero\n",       # bad token
        "plocal v1 2 1 0\n1\n",            # term without indices
        "plocal v1 2 1 0\n1 1 0\n",        # unsorted indices
        "plocal v1 2 1 0\n1 0 5\n",        # index out of range
    ]
    for i, text in enumerate(cases):
        p = tmp_path / f"bad{i}.plocal"
        p.write_text(text)
        with pytest.raises(cli.FormatError):
            cli.read_plocal_file(str(p))


def test_plocal_comments_and_blank_lines(tmp_path):
    p = tmp_path / "c.plocal"
    p.write_text("# energy model\nplocal v1 3 1 -2  # header\n\n-4 0 2\n")
    pl = cli.read_plocal_file(str(p))
    assert pl.num_vars == 3 and pl.offset == -2
    assert pl.terms == [(-4, (0, 2))]


@st.composite
def _plocal_instances(draw):
    nv = draw(st.integers(1, 9))
    subsets = st.lists(
        st.integers(0, nv - 1), min_size=1, max_size=min(4, nv),
        unique=True).map(lambda v: tuple(sorted(v)))
    terms = draw(st.lists(subsets, max_size=10, unique=True))
    coeffs = draw(st.lists(
        st.integers(-9, 9).filter(bool),
        min_size=len(terms), max_size=len(terms)))
    offset = draw(st.integers(-50, 50))
    return PLocalInstance(nv, list(zip(coeffs, terms)), offset)


@settings(max_examples=60, deadline=None)
@given(pl=_plocal_instances())
def test_plocal_round_trip_is_byte_identical(pl):
    with tempfile.TemporaryDirectory() as d:
        p1 = os.path.join(d, "a.plocal")
        p2 = os.path.join(d, "b.plocal")
        cli.write_plocal_file(p1, pl)
        back = cli.read_plocal_file(p1)
        assert back.num_vars == pl.num_vars
        assert back.offset == pl.offset
        assert back.terms == pl.terms
        cli.write_plocal_file(p2, back)
        assert open(p1, "rb").read() == open(p2, "rb").read()


def test_private_key_file_survives_singular_s(capsys, tmp_path):
    d = str(tmp_path / "sing")
    code, _, _ = _run(capsys, ["gen", "--n", "38", "--t", "3", "--m", "8",
                               "--seed", "sing", "--allow-singular-s",
                               "--out-dir", d])
    assert code == 0
    base = os.path.join(d, "instance-0000")
    code, lines, _ = _run(capsys, ["decode", "--in", base + ".json",
                                   "--private-key", base + ".private.json"])
    assert code == 0
    assert lines[0]["s_corank"] >= 1
    sol = json.load(open(base + ".solution.json"))
    assert lines[0]["error"] == sol["error"]


def test_bench_campaign_manifest(capsys, tmp_path):
    out = str(tmp_path / "camp")
    man = {"solver": "pt", "grid": [[38, 3, 8]], "budget": 20000,
           "instances_per_combo": 1, "repetitions": 2, "seed": "cli-camp",
           "out_dir": out, "predictors": ["k", "N"]}
    mp = tmp_path / "manifest.json"
    mp.write_text(json.dumps(man))
    code, lines, _ = _run(capsys, ["bench", "campaign", "--manifest", str(mp)])
    assert code == 0 and lines[0]["combos"] == 1
    with open(os.path.join(out, "reports.csv")) as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["k"] == "14" and rows[0]["solver"] == "pt"
    assert len(open(os.path.join(out, "runs.jsonl")).read().splitlines()) == 2
    assert os.path.exists(os.path.join(out, "scaling_k.csv"))
    assert os.path.exists(os.path.join(out, "scaling_N.csv"))


def test_bench_campaign_manifest_validation(capsys, tmp_path):
    mp = tmp_path / "m.json"
    mp.write_text(json.dumps({"solver": "pt", "grid": [[38, 3, 8]]}))
    code, _, err = _run(capsys, ["bench", "campaign", "--manifest", str(mp)])
    assert code == 3
    assert "budget" in json.loads(err.splitlines()[-1])["detail"]
    mp.write_text(json.dumps({"solver": "pt", "grid": [[40, 2, 5]],
                              "budget": 10}))
    code, _, _ = _run(capsys, ["bench", "campaign", "--manifest", str(mp)])
    assert code == 3


def test_phase_surface_csv(capsys, tmp_path):
    out = tmp_path / "phase.csv"
    code, lines, _ = _run(capsys, ["phase", "--model", "lshwm", "--grid",
                                   "0:1:5,0.05:0.5:3", "--out", str(out)])
    assert code == 0 and lines[0]["cells"] == 15
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 15
    assert lines[0]["forbidden_cells"] == \
        sum(int(r["forbidden"]) for r in rows)


def test_census_csv_matches_exact_counts(capsys, tmp_path):
    out = tmp_path / "census.csv"
    code, lines, _ = _run(capsys, ["census", "--model", "hwm", "--n", "10",
                                   "--weights", "5", "--out", str(out)])
    assert code == 0 and lines[0]["weights"] == [5]
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    by_x = {r["x"]: int(r["count"]) for r in rows}
    assert by_x["0.000000"] == math.comb(10, 5)
    assert by_x["0.200000"] == math.comb(10, 5) * 5 * 5
    assert by_x["0.100000"] == 0
    code, _, _ = _run(capsys, ["census", "--model", "lshwm", "--n", "12",
                               "--weights", "6", "--samples", "2",
                               "--out", str(out)])
    assert code == 0
    code, _, _ = _run(capsys, ["census", "--model", "hwm", "--n", "10",
                               "--weights", "11", "--out", str(out)])
    assert code == 2


def test_rank_distribution_csv(capsys, tmp_path):
    out = tmp_path / "rank.csv"
    code, lines, _ = _run(capsys, ["rankdist", "--alpha-max", "4", "--out",
                                   str(out)])
    assert code == 0
    assert lines[0]["multiplicity_mean"] == pytest.approx(2.0, abs=1e-9)
    assert lines[0]["multiplicity_var"] == pytest.approx(1.0, abs=1e-6)
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["alpha"] for r in rows] == ["0", "1", "2", "3", "4"]
    assert float(rows[0]["probability"]) == pytest.approx(0.2887880951)


def test_thread_cap_env(monkeypatch):
    monkeypatch.setenv("FORGE_THREADS", "2")
    assert pool_size(8) == 2
    assert pool_size(1) == 1
    monkeypatch.delenv("FORGE_THREADS")
    assert pool_size(8) == 8
    with pytest.raises(ValueError):
        pool_size(0)
