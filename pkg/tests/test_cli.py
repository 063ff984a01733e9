import csv
import io
import json
import shlex
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from blockhash import constants
from blockhash.bounds import hypergeom_window_prob
from blockhash.cli import EXIT_ERROR, EXIT_OK, EXIT_UNSATISFIED, main, parse_grid, UsageError

FIXTURES = Path(__file__).parent / "fixtures"
SRC8 = "flat:n16:support=0,1,2,3,4,5,6,7"
SRC16 = "flat:n32:support=" + ",".join(map(str, range(16)))

REGRESSION = {
    "lhl_affine8.csv": "check lhl --family affine:q8:m2 --source flat:n8:support=0,1,2,3 --k 4",
    "lb2univ_2_4_8_3.json": "witness lb2univ --m 2 --t 4 --s 8 --T 3 --format json",
    "hypergeom_4_2_2.csv": "check hypergeom --n 4 --k 2 --tset 2 --beta 0.5",
    "flatsearch_seed7.json": "--seed 7 witness flatsearch --family affine:q16:m2 --k 4 --eps 1/8 --trials 500 "
                             "--format json",
    "sweep_markov_k.csv": f"sweep markov --family affine:q16:m2 --source {SRC8} --T 2 --eps 1/2 --grid k=8,4,2,1",
    "sweep_thm2stat_eps.csv": f"sweep thm2stat --family affine:q32:m2 --source {SRC16} --k 16 "
                              "--grid eps=1/4,1/2,3/4 --grid T=1,2",
}


def run(cmd: str, tmp_path: Path, name: str = "out"):
    out = tmp_path / name
    code = main(shlex.split(cmd) + ["--out", str(out)])
    return code, out


@pytest.mark.parametrize("fixture", sorted(REGRESSION))
def test_regression_fixtures(fixture, tmp_path):
    code, out = run(REGRESSION[fixture], tmp_path)
    assert code == EXIT_OK
    assert out.read_bytes() == (FIXTURES / fixture).read_bytes()
    meta = json.loads(Path(f"{out}.meta.json").read_text())
    assert "runtime_ms" in meta and "runtime_ms" not in out.read_text()


def test_lhl_one_row(tmp_path):
    code, out = run(REGRESSION["lhl_affine8.csv"], tmp_path)
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert code == 0 and len(rows) == 1 and rows[0]["measured"] == "5/8" and rows[0]["ok"] == "true"


def test_lb2univ_bad_fraction(tmp_path):
    code, out = run(REGRESSION["lb2univ_2_4_8_3.json"], tmp_path)
    w = json.loads(out.read_text())
    assert code == 0 and w["certificate"]["bad_fraction"] == "15/32" and w["certified"] is True


def test_hypergeom_measured(tmp_path):
    code, out = run(REGRESSION["hypergeom_4_2_2.csv"], tmp_path)
    assert next(csv.DictReader(io.StringIO(out.read_text())))["measured"] == "2/3"


def test_json_mirrors_csv(tmp_path):
    _, c = run(REGRESSION["lhl_affine8.csv"], tmp_path, "a.csv")
    _, j = run(REGRESSION["lhl_affine8.csv"] + " --format json", tmp_path, "a.json")
    row = next(csv.DictReader(io.StringIO(c.read_text())))
    obj = json.loads(j.read_text())[0]
    assert all(obj[k] == v for k, v in row.items())


def test_markov_sweep_monotone(tmp_path):
    _, out = run(REGRESSION["sweep_markov_k.csv"], tmp_path)
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [r["k"] for r in rows] == ["1", "2", "4", "8"]
    tails = [Fraction(r["measured"]) for r in rows]
    assert tails == sorted(tails)


def test_thm2stat_sweep_above_threshold(tmp_path):
    _, out = run(REGRESSION["sweep_thm2stat_eps.csv"], tmp_path)
    for r in csv.DictReader(io.StringIO(out.read_text())):
        eps, T = Fraction(r["eps"]), int(r["T"])
        if 16 > 2 * T / eps ** 2:
            assert r["satisfied"] == "true"
        else:
            assert r["measured"] == "" and "PreconditionError" in r["note"]


def test_empty_grid_header_only(tmp_path):
    code, out = run("sweep markov --family affine:q16:m2 --grid k=", tmp_path)
    assert code == EXIT_OK
    assert out.read_text() == "k,claim_id,parameters,measured,bound,direction,satisfied,ok,note\n"


def test_sweep_parallel_matches_serial(tmp_path):
    cmd = REGRESSION["sweep_markov_k.csv"]
    _, a = run(cmd, tmp_path, "serial")
    _, b = run(cmd + " --jobs 2", tmp_path, "parallel")
    assert a.read_bytes() == b.read_bytes()


def test_unsatisfied_exit_and_dump(tmp_path):
    code, out = run("check hypergeom --n 4 --k 2 --tset 2 --beta 1/8", tmp_path)
    assert code == EXIT_UNSATISFIED
    dump = json.loads(Path(f"{out}.witness.json").read_text())
    assert dump[0]["satisfied"] == "false" and dump[0]["measured"] == "2/3"


@pytest.mark.parametrize("cmd", [
    "check lhl --family bogus:q8 --source flat:n8:support=0,1,2,3",
    "check lhl --family affine:q8:m2",
    "check lhl --family affine:q8:m2 --source flat:n8:support=0,1 --k 4",
    "check condchain --family affine:q16:m2 --source flat:n16:support=0,1 --k 2 --T 12 --guard-cells 1000",
    "sweep markov --family affine:q16:m2 --grid z=1,2",
    "check hypergeom --n 4 --k 3/2 --tset 2 --beta 1/2",
    "check closeness --joint /nonexistent.json",
    "frobnicate",
])
def test_usage_and_guard_errors(cmd, tmp_path):
    code, _ = run(cmd, tmp_path)
    assert code == EXIT_ERROR


def test_global_flags_before_subcommand(tmp_path):
    a = main(["--seed", "7", "witness", "flatsearch", "--family", "affine:q16:m2", "--k", "4", "--eps", "1/8",
              "--trials", "500", "--format", "json", "--out", str(tmp_path / "a")])
    assert a == 0
    assert (tmp_path / "a").read_bytes() == (FIXTURES / "flatsearch_seed7.json").read_bytes()


def test_closeness_from_joint_file(tmp_path):
    p = tmp_path / "j.json"
    p.write_text(json.dumps({"domain_size": 4, "mode": "exact", "mass": ["1/4"] * 4,
                             "axes": [{"name": "A", "size": 2}, {"name": "B", "size": 2}]}))
    code, out = run(f"check closeness --joint {p}", tmp_path)
    assert code == 0 and next(csv.DictReader(io.StringIO(out.read_text())))["measured"] == "1"


def test_stdout_when_no_out(capsys):
    assert main(shlex.split(REGRESSION["hypergeom_4_2_2.csv"])) == 0
    assert capsys.readouterr().out == (FIXTURES / "hypergeom_4_2_2.csv").read_text()


def test_parse_grid():
    names, axes = parse_grid(["k=4,1,2,2", "family=affine:q8:m2"], ("k", "family"))
    assert names == ["k", "family"] and axes == [[1, 2, 4], ["affine:q8:m2"]]
    _, axes = parse_grid(["source=flat:n8:support=0,1;flat:n8:support=2,3"], ("source",))
    assert axes == [["flat:n8:support=0,1", "flat:n8:support=2,3"]]
    with pytest.raises(UsageError):
        parse_grid(["k=1", "k=2"], ("k",))


@settings(max_examples=25)
@given(st.integers(3, 12), st.data())
def test_exit_code_contract(N, data):
    K = data.draw(st.integers(1, N))
    tset = data.draw(st.integers(1, N))
    beta = data.draw(st.sampled_from([Fraction(1, 8), Fraction(1, 4), Fraction(1, 2), Fraction(7, 8)]))
    L = Fraction(K * tset, N)
    code = main(["check", "hypergeom", "--n", str(N), "--k", str(K), "--tset", str(tset), "--beta", str(beta),
                 "--out", "/dev/null"])
    if beta * beta >= L:
        assert code == EXIT_ERROR
    else:
        p, _ = hypergeom_window_prob(N, K, tset, L, beta)
        assert code == (EXIT_OK if p <= constants.C_DOUBLE_PRIME * beta else EXIT_UNSATISFIED)
