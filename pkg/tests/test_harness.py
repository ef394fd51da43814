import json
from pathlib import Path

import numpy as np
import pytest

from cspolytope import cli
from cspolytope.bounds import BoundConstants
from cspolytope.ensembles import EnsembleSpec, SensingMatrix, generate_matrix
from cspolytope.harness import (
    PHASE_COLUMNS,
    ExperimentConfig,
    PhaseDiagram,
    PhaseRow,
    run_phase_transition,
    run_selftest,
    sparse_test_vector,
)
from cspolytope.randsrc import RngStream

GOLDEN = Path(__file__).parent / "golden" / "phase_gaussian_8x16_seed11.csv"


def golden_config():
    return ExperimentConfig("gaussian", 8, 16, [0, 1, 3, 6], 5, seed=11, delta_trials=10)


# -- configuration -----------------------------------------------------------------

def test_config_json_round_trip():
    cfg = ExperimentConfig("iid_entries(r=1.5)", 10, 30, [1, 2], 7, seed=3,
                           constants=BoundConstants(theta=0.1, psi=2.0))
    back = ExperimentConfig.from_json(cfg.to_json())
    assert back == cfg
    assert back.constants.theta == 0.1 and back.ensemble == EnsembleSpec.parse("iid_entries(r=1.5)")


@pytest.mark.parametrize("kw", [{"m_grid": []}, {"m_grid": [40]}, {"trials": 0}, {"budget": 0},
                                {"magnitudes": "uniform"}, {"n": 0}])
def test_config_validation(kw):
    base = dict(ensemble="gaussian", n=5, N=10, m_grid=[1], trials=2)
    base.update(kw)
    with pytest.raises(ValueError):
        ExperimentConfig(**base)


# -- sparse vectors and sweeps ----------------------------------------------------------

def test_sparse_test_vector():
    z = sparse_test_vector(RngStream(1, 2), 20, 5)
    assert np.count_nonzero(z) == 5 and set(np.abs(z[z != 0])) == {1.0}
    g = sparse_test_vector(RngStream(1, 2), 20, 5, "gaussian")
    assert np.count_nonzero(g) == 5
    assert not sparse_test_vector(RngStream(1, 2), 20, 0).any()


def test_m_zero_row_always_succeeds():
    d = run_phase_transition(ExperimentConfig("gaussian", 6, 12, [0], 10, delta_trials=0))
    assert d.rate(0) == 1.0


def test_undersampled_row_fails():
    d = run_phase_transition(ExperimentConfig("gaussian", 20, 200, [20], 100, delta_trials=0))
    assert d.rate(20) <= 0.1


def test_rows_share_trials_and_rates_in_range():
    d = run_phase_transition(golden_config())
    assert {r.trials for r in d.rows} == {5}
    assert all(0.0 <= r.success_rate <= 1.0 for r in d.rows)


def test_monotone_violation_detector():
    rows = [PhaseRow(1, 100, 50, 0.5, 0.0, 0), PhaseRow(2, 100, 90, 0.9, 0.0, 0),
            PhaseRow(3, 100, 88, 0.88, 0.0, 0)]
    assert PhaseDiagram(rows, {}).monotone_violations() == [(1, 2)]


# -- CSV -------------------------------------------------------------------------

def test_csv_matches_golden_file():
    assert run_phase_transition(golden_config()).to_csv() == GOLDEN.read_text()


def test_csv_schema_and_round_trip():
    text = GOLDEN.read_text()
    header = [line for line in text.splitlines() if not line.startswith("#")][0]
    assert header.split(",") == list(PHASE_COLUMNS) == ["m", "trials", "successes", "success_rate",
                                                       "mean_delta_sampled", "seed"]
    d = PhaseDiagram.from_csv(text)
    assert {"seed", "algorithm_id", "spec", "constants", "version", "config"} <= set(d.metadata)
    assert d.to_csv() == text


def test_header_reproduces_file(tmp_path):
    meta = PhaseDiagram.from_csv(GOLDEN.read_text()).metadata
    cfg = ExperimentConfig.from_dict(dict(meta["config"], output=str(tmp_path / "again.csv")))
    run_phase_transition(cfg)
    assert (tmp_path / "again.csv").read_text() == GOLDEN.read_text()


# -- self-test ---------------------------------------------------------------------

def test_quick_selftest_passes():
    rep = run_selftest("quick")
    assert rep["passed"], [c for c in rep["checks"] if not c["passed"]]
    assert sum(c["seconds"] for c in rep["checks"]) < 60


def test_fault_injection_reports_witness():
    rep = run_selftest("quick", inject_fault=True)
    assert not rep["passed"]
    (eq,) = rep["checks"]
    assert eq["name"] == "equivalence" and eq["detail"]["witness"]


def test_selftest_bad_tier():
    with pytest.raises(ValueError):
        run_selftest("medium")


# -- command line --------------------------------------------------------------------

@pytest.fixture
def hand_matrix(tmp_path):
    path = tmp_path / "hand.csv"
    SensingMatrix(np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])).save(path)
    return str(path)


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_cli_gen_and_rip(tmp_path, capsys):
    path = str(tmp_path / "g.json")
    code, out = run_cli(capsys, "gen", "--n", "6", "--N", "10", "--seed", "4", "--out", path)
    assert code == 0 and json.loads(out)["written"] == path
    again = generate_matrix(EnsembleSpec.gaussian(), 6, 10, 4)
    np.testing.assert_array_equal(SensingMatrix.load(path).entries, again.entries)
    code, out = run_cli(capsys, "rip", "--matrix", path, "--m", "1,2")
    assert code == 0 and set(json.loads(out)["entries"]) == {"1", "2"}


def test_cli_recover_exit_codes(hand_matrix, capsys):
    code, out = run_cli(capsys, "recover", "--matrix", hand_matrix, "--support", "3:+")
    assert code == 0 and json.loads(out)["certificate"]["gamma"] == pytest.approx(0.5)
    code, _ = run_cli(capsys, "recover", "--matrix", hand_matrix, "--support", "1:+,2:+")
    assert code == 1
    code, _ = run_cli(capsys, "recover", "--matrix", hand_matrix, "--m", "1")
    assert code == 0


def test_cli_usage_errors(hand_matrix, capsys):
    assert cli.main(["recover", "--matrix", hand_matrix]) == 2
    assert cli.main(["recover", "--matrix", "/nonexistent.csv", "--m", "1"]) == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["bounds", "--formula", "nonsense"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_cli_budget_refusal(tmp_path, capsys):
    path = str(tmp_path / "big.csv")
    run_cli(capsys, "gen", "--n", "10", "--N", "40", "--out", path)
    code, out = run_cli(capsys, "recover", "--matrix", path, "--m", "3", "--budget", "1e3")
    assert code == 3 and json.loads(out)["error"] == "budget"


def test_cli_neighborly_crosscheck_decode(hand_matrix, capsys):
    code, out = run_cli(capsys, "neighborly", "--matrix", hand_matrix, "--mmax", "3")
    assert code == 0 and json.loads(out)["order"] == 1
    code, out = run_cli(capsys, "crosscheck", "--matrix", hand_matrix, "--m", "2")
    assert code == 0 and json.loads(out)["agree"]
    code, out = run_cli(capsys, "decode", "--matrix", hand_matrix, "--y", "1,2,3")
    assert code == 0 and len(json.loads(out)["t"]) == 2


def test_cli_bounds(tmp_path, capsys):
    params = tmp_path / "p.json"
    params.write_text(json.dumps({"n": 100, "N": 1000, "constants": {"r": 2.0}}))
    code, out = run_cli(capsys, "bounds", "--formula", "neighborly", "--json", str(params))
    doc = json.loads(out)
    assert code == 0 and doc["result"]["m_bar"] == 43 and "user-supplied" in doc["note"]
    code, out = run_cli(capsys, "bounds", "--formula", "amlower", "--param", "n=100", "--param", "N=40",
                        "--param", "m=4")
    assert json.loads(out)["result"]["threshold"] == pytest.approx(16.9915, abs=1e-4)


def test_cli_phase_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(golden_config().to_json())
    code, out = run_cli(capsys, "phase", "--config", str(cfg))
    assert code == 0 and out == GOLDEN.read_text()
    code, out = run_cli(capsys, "phase", "--config", str(cfg), "--m-grid", "0", "--trials", "2")
    d = PhaseDiagram.from_csv(out)
    assert [r.m for r in d.rows] == [0] and d.rows[0].trials == 2


def test_cli_selftest_fault(capsys):
    code, out = run_cli(capsys, "selftest", "--inject-fault")
    assert code == 1 and not json.loads(out)["passed"]
