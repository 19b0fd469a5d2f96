import json

import numpy as np
import pytest

from robot_ot import cli
from robot_ot.datagen import gen_huber_gaussian

ROOT3 = "1.7320508075688772"


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    out = json.loads(captured.out) if captured.out.strip().startswith('{') else None
    return code, out, captured


def write(path, text):
    path.write_text(text)
    return str(path)


@pytest.fixture
def two_by_two(tmp_path):
    source = write(tmp_path / "a.csv", f"w,x1\n0.7,0\n0.3,{ROOT3}\n")
    target = write(tmp_path / "b.csv", f"w,x1\n0.5,0\n0.5,{ROOT3}\n")
    return source, target


@pytest.fixture
def three_points(tmp_path):
    contaminated = write(tmp_path / "x.csv", "x1\n0\n0.1\n100\n")
    clean = write(tmp_path / "y.csv", "x1\n0\n0.1\n0.2\n")
    return contaminated, clean


def test_solve_two_by_two(capsys, two_by_two):
    source, target = two_by_two
    code, out, _ = run(capsys, "solve", "--source", source, "--target", target, "--lambda", "0.5")
    assert code == cli.EXIT_OK
    assert out['objective'] == pytest.approx(0.2, abs=1e-7)
    assert out['slack_l1'] == pytest.approx(0.4, abs=1e-9)
    assert out['lambda'] == 0.5
    assert out['method'] == "exact"
    for key in ('iterations', 'row_residual', 'col_residual', 'converged', 'seconds'):
        assert key in out


def test_solve_infinite_lambda_is_vanilla_ot(capsys, two_by_two):
    source, target = two_by_two
    code, out, _ = run(capsys, "solve", "--source", source, "--target", target, "--lambda", "inf")
    assert code == 0
    assert out['objective'] == pytest.approx(0.6, abs=1e-9)
    assert out['lambda'] == "inf"
    assert out['slack_l1'] == 0.0


def test_solve_identical_files(capsys, tmp_path):
    data = write(tmp_path / "p.csv", "x1,x2\n0,0\n1,2\n-3,0.5\n")
    for lam in ("0.01", "2", "inf"):
        code, out, _ = run(capsys, "solve", "--source", data, "--target", data, "--lambda", lam)
        assert code == 0
        assert out['objective'] == pytest.approx(0.0, abs=1e-12)


def test_solve_sinkhorn(capsys, two_by_two):
    source, target = two_by_two
    code, out, _ = run(capsys, "solve", "--source", source, "--target", target, "--lambda", "0.5",
                       "--method", "sinkhorn", "--alpha", "0.001", "--epsilon-scaling")
    assert code == 0
    assert out['converged'] is True
    assert out['objective'] == pytest.approx(0.2, abs=1e-2)


def test_solve_writes_plan(capsys, two_by_two, tmp_path):
    source, target = two_by_two
    plan_path = tmp_path / "plan.csv"
    code, _, _ = run(capsys, "solve", "--source", source, "--target", target, "--lambda", "0.5",
                     "--plan-out", str(plan_path))
    assert code == 0
    plan = np.loadtxt(plan_path, delimiter=',')
    assert plan.shape == (4, 4)
    np.testing.assert_allclose(plan[:2, 2:], [[0.5, 0.0], [0.0, 0.3]], atol=1e-12)


def test_malformed_csv_exit_1(capsys, tmp_path, two_by_two):
    source, _ = two_by_two
    cases = [
        write(tmp_path / "bad_header.csv", "a,b\n1,2\n"),
        write(tmp_path / "fields.csv", "x1,x2\n1,2,3\n"),
        write(tmp_path / "text.csv", "x1\nfoo\n"),
        write(tmp_path / "empty.csv", "x1\n"),
        write(tmp_path / "weights.csv", "w,x1\n-1,0\n2,1\n"),
        str(tmp_path / "missing.csv"),
    ]
    for bad in cases:
        code, out, captured = run(capsys, "solve", "--source", source, "--target", bad,
                                  "--lambda", "0.5")
        assert code == cli.EXIT_DATA, bad
        assert out is None
        error = json.loads(captured.err.strip().splitlines()[-1])
        assert error['error'] == "DataFormatError"


def test_invalid_arguments_exit_2(capsys, two_by_two):
    source, target = two_by_two
    code, _, captured = run(capsys, "solve", "--source", source, "--target", target, "--bogus")
    assert code == cli.EXIT_USAGE
    assert json.loads(captured.err.strip().splitlines()[-1])['error'] == "UsageError"

    code, _, captured = run(capsys, "solve", "--source", source, "--target", target, "--lambda", "-1")
    assert code == cli.EXIT_USAGE
    assert json.loads(captured.err.strip().splitlines()[-1])['error'] == "InvalidInputError"

    code, _, _ = run(capsys, "solve", "--source", source, "--target", target, "--lambda", "nan")
    assert code == cli.EXIT_USAGE
    code, _, _ = run(capsys, "bench", "nosuch")
    assert code == cli.EXIT_USAGE


def test_solver_failure_exit_3(capsys, two_by_two):
    source, target = two_by_two
    code, out, captured = run(capsys, "solve", "--source", source, "--target", target,
                              "--lambda", "0.5", "--method", "sinkhorn", "--alpha", "0.01",
                              "--max-iter", "1")
    assert code == cli.EXIT_SOLVER
    assert out is None
    assert json.loads(captured.err.strip().splitlines()[-1])['error'] == "ReconstructionError"


def test_detect_three_points(capsys, three_points):
    contaminated, clean = three_points
    code, out, _ = run(capsys, "detect", "--contaminated", contaminated, "--clean", clean,
                       "--lambda", "1")
    assert code == 0
    assert out['outlier_indices'] == [2]
    assert out['lambda_source'] == "given"
    assert out['threshold'] == 1e-9
    assert out['slack'] == pytest.approx([0.0, 0.0, -1 / 3], abs=1e-12)

    code, out, _ = run(capsys, "detect", "--contaminated", contaminated, "--clean", clean,
                       "--lambda", "1e5")
    assert out['outlier_indices'] == []


def test_detect_auto_lambda_on_clusters(capsys, tmp_path):
    x, y, mask = (str(tmp_path / name) for name in ("x.csv", "y.csv", "mask.csv"))
    code, out, _ = run(capsys, "gen", "--model", "clusters", "--n-clean", "60", "--n-out", "15",
                       "--d", "2", "--seed", "0", "--out", x, "--clean-out", y, "--mask-out", mask)
    assert code == 0
    assert out['contaminated'] == 15

    code, out, _ = run(capsys, "detect", "--contaminated", x, "--clean", y, "--lambda", "auto")
    assert code == 0
    assert out['lambda_source'] == "auto"
    assert out['lambda'] > 0
    truth = np.flatnonzero(np.loadtxt(mask, skiprows=1).astype(bool))
    assert set(truth.tolist()) <= set(out['outlier_indices'])


def test_clusters_require_clean_out(capsys, tmp_path):
    code, _, _ = run(capsys, "gen", "--model", "clusters", "--out", str(tmp_path / "x.csv"))
    assert code == cli.EXIT_USAGE


def test_gen_to_stdout(capsys):
    code, out, captured = run(capsys, "gen", "--n", "5", "--d", "2", "--seed", "1")
    assert code == 0
    assert out is None
    lines = captured.out.strip().splitlines()
    assert lines[0] == "x1,x2"
    assert len(lines) == 6


def test_gen_round_trip_is_lossless(capsys, tmp_path):
    path = str(tmp_path / "gen.csv")
    code, _, _ = run(capsys, "gen", "--n", "20", "--d", "3", "--eps", "0.2", "--eta1", "2",
                     "--seed", "4", "--out", path)
    assert code == 0
    expected, _ = gen_huber_gaussian(20, 3, 0.2, 0.0, 2.0, seed=4)
    np.testing.assert_array_equal(cli.read_measure(path).points, expected.points)

    code, out, _ = run(capsys, "solve", "--source", path, "--target", path, "--lambda", "0.5")
    assert code == 0
    assert out['objective'] == pytest.approx(0.0, abs=1e-12)


def test_gen_is_reproducible(capsys, tmp_path):
    first, second = tmp_path / "1.csv", tmp_path / "2.csv"
    for path in (first, second):
        run(capsys, "gen", "--model", "cauchy-huber", "--n", "30", "--d", "2", "--seed", "9",
            "--out", str(path))
    assert first.read_bytes() == second.read_bytes()


def test_estimate_mean_deterministic(capsys, tmp_path):
    data = str(tmp_path / "data.csv")
    run(capsys, "gen", "--n", "50", "--d", "2", "--seed", "3", "--out", data)
    trace = tmp_path / "trace.csv"
    argv = ("estimate-mean", "--data", data, "--outer", "30", "--inner", "3", "--seed", "11",
            "--true-mean", "0,0")
    code, first, _ = run(capsys, *argv, "--trace-out", str(trace))
    assert code == 0
    code, second, _ = run(capsys, *argv)
    first.pop('seconds'), second.pop('seconds')
    assert first['theta'] == second['theta']
    assert first['error_vs'] == second['error_vs']
    assert first['trace_path'] == str(trace) and second['trace_path'] is None
    assert trace.read_text().splitlines()[0] == "theta1,theta2"
    assert np.loadtxt(trace, delimiter=',', skiprows=1).shape == (30, 2)


def test_estimate_mean_true_mean_dimension(capsys, tmp_path):
    data = write(tmp_path / "data.csv", "x1,x2\n0,0\n1,1\n")
    code, _, _ = run(capsys, "estimate-mean", "--data", data, "--outer", "2", "--inner", "1",
                     "--true-mean", "0,0,0")
    assert code == cli.EXIT_USAGE


def test_scan_lambda(capsys, three_points, tmp_path):
    contaminated, clean = three_points
    rows = tmp_path / "scan.csv"
    code, out, _ = run(capsys, "scan-lambda", "--contaminated", contaminated, "--clean", clean,
                       "--grid", "0.5,1,inf", "--csv-out", str(rows))
    assert code == 0
    assert out['lambdas'] == [0.5, 1.0, "inf"]
    assert out['outlier_sets'] == [[2], [2], []]
    assert out['nested'] == [True, True]
    assert out['violation_rate'] == 0.0
    assert rows.read_text().splitlines() == ["lambda,index", "0.5,2", "1,2"]


def test_scan_lambda_rejects_descending_grid(capsys, three_points):
    contaminated, clean = three_points
    code, _, _ = run(capsys, "scan-lambda", "--contaminated", contaminated, "--clean", clean,
                     "--grid", "1,0.5")
    assert code == cli.EXIT_USAGE


def test_bench_gradient(capsys):
    code, out, _ = run(capsys, "bench", "gradient", "--trials", "3")
    assert code == 0
    assert out['suite'] == "gradient"
    assert out['max_relative_error'] <= 1e-5


def test_bench_equivalence_small(capsys):
    code, out, _ = run(capsys, "bench", "equivalence", "--trials", "5", "--max-size", "3")
    assert code == 0
    assert out['passed'] is True
    assert out['failures'] == []


def test_bench_is_reproducible(capsys):
    argv = ("bench", "bounds", "--trials", "5", "--max-size", "4", "--seed", "2")
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    for report in (first, second):
        report.pop('seconds')
    assert first == second
    assert first['violations'] == 0


def test_bench_convergence_infinite_lambda_is_valid_json(capsys):
    code, out, captured = run(capsys, "bench", "convergence", "--n", "4", "--lambda", "inf")
    assert code == 0
    assert out['lam'] == "inf"
    assert "Infinity" not in captured.out
