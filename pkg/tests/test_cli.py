"""Command-line interface: exit codes, file contracts, determinism."""

import json
import subprocess
import sys

import numpy as np
import pytest

from cocolasso.cli import main


def write_dataset(path, n=40, p=6, tau=0.5, missing=0.0, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:2] = (2.0, -1.0)
    y = x @ beta + 0.5 * rng.standard_normal(n)
    z = x + tau * rng.standard_normal((n, p)) if tau else x
    cells = z.astype(object)
    if missing:
        mask = rng.random((n, p)) < missing
        cells[mask] = ""
    header = [f"x{j}" for j in range(p)] + ["y"]
    lines = [",".join(header)]
    for i in range(n):
        lines.append(",".join([str(c) for c in cells[i]] + [str(y[i])]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


class TestFit:
    def test_path_fit_additive_scalar(self, tmp_path):
        data = write_dataset(tmp_path / "d.csv", tau=0.5)
        out = tmp_path / "fit.json"
        rc = main(["fit", "--data", data, "--response", "y",
                   "--additive-tau2", "0.25", "--out", str(out),
                   "--grid-size", "20"])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["schema_version"] == 1
        assert payload["mode"] == "path"
        assert len(payload["lambdas"]) == 20
        assert payload["projection"]["converged"]
        assert "max_norm_distance" in payload["projection"]

    def test_single_lambda_fit(self, tmp_path):
        data = write_dataset(tmp_path / "d.csv", tau=0.0)
        out = tmp_path / "fit.json"
        rc = main(["fit", "--data", data, "--response", "y",
                   "--additive-tau2", "0.0", "--out", str(out),
                   "--lambda", "0.3"])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["mode"] == "single"
        assert payload["kkt_residual"] <= 1e-6

    def test_missing_auto(self, tmp_path):
        data = write_dataset(tmp_path / "d.csv", tau=0.0, missing=0.1)
        out = tmp_path / "fit.json"
        rc = main(["fit", "--data", data, "--response", "y",
                   "--missing", "auto", "--out", str(out), "--grid-size", "10"])
        assert rc == 0
        assert json.loads(out.read_text())["mode"] == "path"

    def test_no_error_model_is_input_error(self, tmp_path):
        data = write_dataset(tmp_path / "d.csv")
        rc = main(["fit", "--data", data, "--response", "y",
                   "--out", str(tmp_path / "o.json")])
        assert rc == 2

    def test_two_error_models_is_input_error(self, tmp_path):
        data = write_dataset(tmp_path / "d.csv")
        rc = main(["fit", "--data", data, "--response", "y",
                   "--additive-tau2", "0.1", "--missing", "0.1",
                   "--out", str(tmp_path / "o.json")])
        assert rc == 2

    def test_malformed_cell_is_input_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("x0,y\n1,2\noops,4\n", encoding="utf-8")
        rc = main(["fit", "--data", str(bad), "--response", "y",
                   "--additive-tau2", "0.0", "--out", str(tmp_path / "o.json")])
        assert rc == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "input"
        assert "row 3" in err["message"] and "x0" in err["message"]

    def test_missing_file_is_input_error(self, tmp_path):
        rc = main(["fit", "--data", str(tmp_path / "nope.csv"), "--response",
                   "y", "--additive-tau2", "0.0",
                   "--out", str(tmp_path / "o.json")])
        assert rc == 2

    def test_clean_fit_matches_library_lasso(self, tmp_path):
        # tau2 = 0 degenerates to an ordinary Lasso on the centered data
        from sklearn.linear_model import Lasso

        data_path = tmp_path / "d.csv"
        write_dataset(data_path, tau=0.0, n=60, p=5)
        out = tmp_path / "fit.json"
        lam = 0.2
        rc = main(["fit", "--data", str(data_path), "--response", "y",
                   "--additive-tau2", "0.0", "--out", str(out),
                   "--lambda", str(lam)])
        assert rc == 0
        beta = np.array(json.loads(out.read_text())["beta"])

        raw = np.genfromtxt(data_path, delimiter=",", skip_header=1)
        z, y = raw[:, :-1], raw[:, -1]
        z = z - z.mean(axis=0)
        y = y - y.mean()
        ref = Lasso(alpha=lam, fit_intercept=False, tol=1e-12, max_iter=100_000)
        ref.fit(z, y)
        np.testing.assert_allclose(beta, ref.coef_, atol=1e-6)


class TestCv:
    def test_default_five_folds(self, tmp_path):
        data = write_dataset(tmp_path / "d.csv", tau=0.3)
        out = tmp_path / "cv.json"
        rc = main(["cv", "--data", data, "--response", "y",
                   "--additive-tau2", "0.09", "--out", str(out),
                   "--grid-size", "15"])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["folds"] == 5
        assert payload["lambda_selected"] in payload["lambdas"]
        assert "naive_loss" not in payload

    def test_emit_naive(self, tmp_path):
        data = write_dataset(tmp_path / "d.csv", tau=0.3)
        out = tmp_path / "cv.json"
        rc = main(["cv", "--data", data, "--response", "y",
                   "--additive-tau2", "0.09", "--out", str(out),
                   "--grid-size", "10", "--emit-naive"])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert len(payload["naive_loss"]) == 10

    def test_more_folds_than_rows_is_input_error(self, tmp_path):
        data = write_dataset(tmp_path / "d.csv", n=10)
        rc = main(["cv", "--data", data, "--response", "y",
                   "--additive-tau2", "0.0", "--folds", "11",
                   "--out", str(tmp_path / "o.json")])
        assert rc == 2


class TestSimulate:
    def test_tiny_run(self, tmp_path):
        out = tmp_path / "sim.json"
        csv = tmp_path / "records.csv"
        rc = main(["simulate", "--n", "30", "--p", "15", "--replications", "2",
                   "--grid-size", "8", "--folds", "3", "--bootstrap-samples",
                   "50", "--out", str(out), "--records-csv", str(csv)])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert len(payload["records"]) == 2
        assert csv.read_text().count("\n") == 3

    def test_invalid_design_param_is_input_error(self, tmp_path):
        rc = main(["simulate", "--design-param", "1.0",
                   "--out", str(tmp_path / "o.json")])
        assert rc == 2


class TestProject:
    def test_identity_passes_through(self, tmp_path):
        m = tmp_path / "m.csv"
        np.savetxt(m, np.eye(3), fmt="%.17g", delimiter=",")
        out = tmp_path / "p.json"
        rc = main(["project", "--matrix", str(m), "--out", str(out)])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["max_norm_distance"] == 0.0
        np.testing.assert_array_equal(payload["sigma_tilde"], np.eye(3))

    def test_analytic_case(self, tmp_path):
        m = tmp_path / "m.csv"
        np.savetxt(m, np.array([[1.0, 2.0], [2.0, 1.0]]), fmt="%.17g",
                   delimiter=",")
        out = tmp_path / "p.json"
        mat_out = tmp_path / "proj.csv"
        rc = main(["project", "--matrix", str(m), "--out", str(out),
                   "--matrix-out", str(mat_out), "--admm-tol", "1e-9"])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["max_norm_distance"] == pytest.approx(0.5, abs=1e-4)
        back = np.genfromtxt(mat_out, delimiter=",")
        np.testing.assert_allclose(back, np.full((2, 2), 1.5), atol=1e-4)

    def test_asymmetric_is_input_error(self, tmp_path):
        m = tmp_path / "m.csv"
        np.savetxt(m, np.array([[1.0, 2.0], [0.0, 1.0]]), fmt="%.17g",
                   delimiter=",")
        rc = main(["project", "--matrix", str(m),
                   "--out", str(tmp_path / "o.json")])
        assert rc == 2

    def test_nonsquare_is_input_error(self, tmp_path):
        m = tmp_path / "m.csv"
        np.savetxt(m, np.ones((2, 3)), fmt="%.17g", delimiter=",")
        rc = main(["project", "--matrix", str(m),
                   "--out", str(tmp_path / "o.json")])
        assert rc == 2


class TestDeterminism:
    def test_cv_rerun_is_bitwise_identical(self, tmp_path):
        data = write_dataset(tmp_path / "d.csv", tau=0.3)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            rc = main(["cv", "--data", data, "--response", "y",
                       "--additive-tau2", "0.09", "--seed", "5",
                       "--grid-size", "10", "--out", str(out)])
            assert rc == 0
        assert a.read_bytes() == b.read_bytes()

    def test_thread_count_does_not_change_output(self, tmp_path):
        data = write_dataset(tmp_path / "d.csv", tau=0.3)
        outs = []
        for threads in ("1", "4"):
            out = tmp_path / f"t{threads}.json"
            rc = subprocess.run(
                [sys.executable, "-m", "cocolasso.cli", "--threads", threads,
                 "cv", "--data", data, "--response", "y",
                 "--additive-tau2", "0.09", "--seed", "3",
                 "--grid-size", "8", "--out", str(out)],
            ).returncode
            assert rc == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
