import json
import subprocess
import sys

import numpy as np
import pytest

from hyperlap import Hypergraph, verify, write_hypergraph
from hyperlap.cli import main, make_config, read_config


@pytest.fixture
def graph_file(tmp_path, four_vertex):
    path = tmp_path / "g.txt"
    write_hypergraph(four_vertex, path)
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def error_payload(err):
    lines = err.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


class TestInfo:
    def test_four_vertex(self, graph_file, capsys):
        code, out, _ = run(["info", "--graph", graph_file, "--p", "2"], capsys)
        assert code == 0
        fields = dict(line.split(" = ") for line in out.strip().splitlines())
        assert fields["components"] == "1"
        assert float(fields["poincare_constant"]) == 64.0
        assert fields["zero_eigenvector_1"] == "1.0,1.0,1.0,1.0"

    def test_two_components(self, tmp_path, capsys):
        path = tmp_path / "g.txt"
        write_hypergraph(Hypergraph(5, [[0, 1], [2, 3, 4]]), path)
        _, out, _ = run(["info", "--graph", str(path)], capsys)
        assert "component_2 = 3,4,5" in out


class TestSolveCauchy:
    def test_deterministic_csv(self, graph_file, tmp_path, capsys):
        outs = []
        for k in range(2):
            path = tmp_path / f"t{k}.csv"
            argv = ["solve-cauchy", "--graph", graph_file, "--x0", "2,1,-1,-2", "--T", "0.5", "--dt", "0.01",
                    "--p", "1.5", "--out", str(path)]
            assert run(argv, capsys)[0] == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]
        lines = outs[0].decode().splitlines()
        assert lines[0] == "t,x_1,x_2,x_3,x_4,energy,residual" and len(lines) == 52

    def test_stdout_and_explicit(self, graph_file, capsys):
        code, out, _ = run(["solve-cauchy", "--graph", graph_file, "--x0", "2,1,-1,-2", "--T", "0.1", "--dt", "0.01",
                            "--scheme", "explicit"], capsys)
        assert code == 0
        last = np.array(out.strip().splitlines()[-1].split(","), dtype=float)
        assert last[0] == pytest.approx(0.1)

    def test_signal_csv(self, graph_file, tmp_path, capsys):
        sig = tmp_path / "h.csv"
        sig.write_text("t,h_1,h_2,h_3,h_4\n0,1,0,0,0\n1,1,0,0,0\n")
        code, out, _ = run(["solve-cauchy", "--graph", graph_file, "--x0", "0,0,0,0", "--signal", str(sig),
                            "--T", "1", "--dt", "0.1"], capsys)
        assert code == 0
        last = np.array(out.strip().splitlines()[-1].split(","), dtype=float)
        assert np.sum(last[1:5]) == pytest.approx(1.0, abs=1e-9)


class TestExitCodes:
    @pytest.mark.parametrize(
        "argv",
        [
            ["info"],
            ["info", "--graph", "/nonexistent/g.txt"],
            ["solve-cauchy", "--graph", "G", "--x0", "1,2,3,4", "--dt", "2", "--T", "1"],
            ["solve-cauchy", "--graph", "G", "--x0", "1,2,3"],
            ["solve-cauchy", "--graph", "G"],
            ["info", "--graph", "G", "--p", "0.5"],
            ["info", "--graph", "G", "--tol-opt", "0"],
            ["info", "--graph", "G", "--bogus"],
            ["frobnicate"],
        ],
    )
    def test_invalid_is_1(self, argv, graph_file, capsys):
        argv = [graph_file if a == "G" else a for a in argv]
        code, _, err = run(argv, capsys)
        assert code == 1
        assert error_payload(err)["exit_code"] == 1

    def test_bad_graph_names_edge(self, tmp_path, capsys):
        path = tmp_path / "g.txt"
        path.write_text("n 3\ne 1 1 2\ne -2 2 3\n")
        code, _, err = run(["info", "--graph", str(path)], capsys)
        payload = error_payload(err)
        assert code == 1 and payload["error"] == "NonpositiveWeight" and payload["edge"] == 2

    def test_incompatible_forcing_is_1(self, tmp_path, graph_file, capsys):
        sig = tmp_path / "h.csv"
        sig.write_text("t,h_1,h_2,h_3,h_4\n0,1,0,0,0\n1,1,0,0,0\n")
        code, _, err = run(["solve-periodic", "--graph", graph_file, "--signal", str(sig), "--dt", "0.1"], capsys)
        payload = error_payload(err)
        assert code == 1 and payload["error"] == "IncompatibleForcing"
        assert "period integral of the component mean" in payload["message"]
        assert payload["residuals"] == [pytest.approx(0.25)]

    def test_nonconvergence_is_2(self, graph_file, capsys):
        code, _, err = run(["solve-cauchy", "--graph", graph_file, "--x0", "2,1.3,-0.7,-2", "--T", "0.1",
                            "--dt", "0.01", "--p", "3", "--tol-opt", "1e-300"], capsys)
        payload = error_payload(err)
        assert code == 2 and payload["error"] == "NonConvergence"
        assert payload["residual"] > 1e-300 and payload["iterations"] >= 1

    def test_verification_failure_is_3(self, monkeypatch, capsys):
        real = verify.prox

        def inflated(G, y, *args, **kwargs):
            out = real(G, y, *args, **kwargs)
            return type(out)(3.0 * out.x, out.residual, out.iterations, out.certificate)

        monkeypatch.setattr(verify, "prox", inflated)
        code, out, err = run(["verify", "--suite", "prox-nonexpansive", "--n-seeds", "1"], capsys)
        assert code == 3
        assert out.startswith("FAIL prox-nonexpansive seed=0")
        assert error_payload(err)["failures"][0]["suite"] == "prox-nonexpansive"


class TestConfig:
    def test_flags_override_file(self, tmp_path, graph_file):
        cfg_path = tmp_path / "run.cfg"
        cfg_path.write_text(f"# experiment\ngraph = {graph_file}\np = 1.5\ndt = 0.01  # step\neps-schedule = 0.1, 0.01\n")
        cfg = make_config(["solve-periodic", "--config", str(cfg_path), "--p", "3"])
        assert (cfg.p, cfg.dt, cfg.eps_schedule, cfg.graph) == (3.0, 0.01, (0.1, 0.01), graph_file)

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("colour = blue\n")
        with pytest.raises(ValueError, match="unknown key"):
            read_config(path)

    def test_bad_value_exits_1(self, tmp_path, capsys):
        path = tmp_path / "run.cfg"
        path.write_text("p = two\n")
        assert run(["info", "--config", str(path)], capsys)[0] == 1


class TestVerifyAndReproduce:
    def test_verify_subset(self, capsys):
        code, out, _ = run(["verify", "--suite", "oddness,graph-laplacian", "--n-seeds", "2", "--workers", "2"], capsys)
        assert code == 0
        assert [line.split()[1] for line in out.strip().splitlines()] == ["oddness"] * 2 + ["graph-laplacian"] * 2

    @pytest.mark.parametrize("case", ["cauchy-4vertex", "degeneracy", "graph-laplacian"])
    def test_reproduce_cases(self, case, capsys):
        code, out, _ = run(["reproduce", "--case", case], capsys)
        assert code == 0
        assert "FAIL" not in out and "PASS" in out

    def test_module_entry_point(self, graph_file):
        done = subprocess.run([sys.executable, "-m", "hyperlap", "info", "--graph", graph_file],
                              capture_output=True, text=True, check=False)
        assert done.returncode == 0 and "poincare_constant = 64.0" in done.stdout
