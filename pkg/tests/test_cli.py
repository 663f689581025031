import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from onebit_precoding import cli
from onebit_precoding.cli import _snr_grid, main


def write_instance(tmp_path, name="inst.json", **overrides):
    doc = {
        "U": 1,
        "B": 2,
        "N0": 0.0,
        "H_re": [[1.0, 1.0]],
        "H_im": [[0.0, 0.0]],
        "s_re": [1.0],
        "s_im": [0.0],
    }
    doc.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def strip_timing(text):
    """Drop the wall-time column, the only non-deterministic CSV field."""
    out = []
    for line in text.splitlines():
        if line.startswith("#"):
            out.append(line)
        else:
            out.append(",".join(line.split(",")[:-1]))
    return "\n".join(out)


class TestSolve:
    def test_hand_instance(self, tmp_path, capsys):
        path = write_instance(tmp_path)
        assert main(["solve", path]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["precoder"] == "bb1"
        assert payload["cmqp_value"] == pytest.approx(1.0, rel=1e-12)
        assert payload["beta"] > 0.0
        assert payload["stats"]["nodes_visited"] >= 1
        assert len(payload["x_re"]) == 2 and len(payload["x_im"]) == 2
        x = np.array(payload["x_re"]) + 1j * np.array(payload["x_im"])
        assert np.allclose(np.abs(x), 0.5 * np.sqrt(2.0), atol=1e-12)

    @pytest.mark.parametrize("precoder",
                             ["bb1", "exhaustive", "wf_quantized", "wf_infinite"])
    def test_every_precoder_runs(self, tmp_path, capsys, precoder):
        path = write_instance(tmp_path, N0=0.5)
        assert main(["solve", path, "--precoder", precoder]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["precoder"] == precoder
        assert payload["qp_mse"] >= 0.0

    def test_tricks_off_matches_default_value(self, tmp_path, capsys):
        path = write_instance(tmp_path, N0=0.3)
        assert main(["solve", path]) == 0
        v_on = json.loads(capsys.readouterr().out)["cmqp_value"]
        args = ["solve", path]
        for flag, _, _ in cli._TRICK_FLAGS:
            args += [flag, "off"]
        assert main(args) == 0
        v_off = json.loads(capsys.readouterr().out)["cmqp_value"]
        assert v_on == pytest.approx(v_off, rel=1e-12)

    def test_missing_field_exits_2(self, tmp_path, capsys):
        path = write_instance(tmp_path)
        doc = json.loads(open(path).read())
        del doc["H_im"]
        (p := tmp_path / "broken.json").write_text(json.dumps(doc))
        assert main(["solve", str(p)]) == 2
        payload = json.loads(capsys.readouterr().out)
        assert payload["error"] == "ParseError"
        assert "H_im" in payload["message"]

    def test_wrong_shape_exits_2(self, tmp_path, capsys):
        path = write_instance(tmp_path, s_re=[1.0, 2.0])
        assert main(["solve", path]) == 2
        assert "s_re" in json.loads(capsys.readouterr().out)["message"]

    def test_bad_json_exits_2(self, tmp_path, capsys):
        p = tmp_path / "junk.json"
        p.write_text("{not json")
        assert main(["solve", str(p)]) == 2
        assert json.loads(capsys.readouterr().out)["error"] == "ParseError"

    def test_missing_file_exits_2(self, tmp_path, capsys):
        assert main(["solve", str(tmp_path / "nope.json")]) == 2
        assert json.loads(capsys.readouterr().out)["error"] == "ParseError"

    def test_non_integer_dimension_exits_2(self, tmp_path, capsys):
        path = write_instance(tmp_path, B=2.5)
        assert main(["solve", path]) == 2
        assert "B" in json.loads(capsys.readouterr().out)["message"]

    def test_zero_data_exits_3(self, tmp_path, capsys):
        path = write_instance(tmp_path, s_re=[0.0], s_im=[0.0])
        assert main(["solve", path]) == 3
        assert json.loads(capsys.readouterr().out)["error"] == "DegenerateInstance"

    def test_too_large_exits_4(self, tmp_path, capsys):
        path = write_instance(
            tmp_path, B=15,
            H_re=[[1.0] * 15], H_im=[[0.0] * 15], N0=0.5,
        )
        assert main(["solve", path, "--precoder", "exhaustive"]) == 4
        assert json.loads(capsys.readouterr().out)["error"] == "InstanceTooLarge"

    def test_bad_flag_value_exits_5(self, tmp_path):
        path = write_instance(tmp_path)
        with pytest.raises(SystemExit) as exc:
            main(["solve", path, "--trick-preprune", "maybe"])
        assert exc.value.code == 5

    def test_unknown_precoder_exits_5(self, tmp_path):
        path = write_instance(tmp_path)
        with pytest.raises(SystemExit) as exc:
            main(["solve", path, "--precoder", "zf"])
        assert exc.value.code == 5


class TestSnrGrid:
    def test_inclusive_endpoints(self):
        assert _snr_grid(0.0, 10.0, 2.0) == (0.0, 2.0, 4.0, 6.0, 8.0, 10.0)
        assert _snr_grid(0.0, 10.0, 3.0) == (0.0, 3.0, 6.0, 9.0)
        assert _snr_grid(5.0, 5.0, 2.0) == (5.0,)

    def test_rejects_bad_grids(self):
        with pytest.raises(cli.FlagError):
            _snr_grid(0.0, 10.0, 0.0)
        with pytest.raises(cli.FlagError):
            _snr_grid(10.0, 0.0, 2.0)


class TestSweep:
    BASE = [
        "sweep", "ber", "--bs-antennas", "3", "--users", "2",
        "--snr-min", "0", "--snr-max", "4", "--snr-step", "2",
        "--trials", "2", "--symbols-per-trial", "5", "--seed", "3",
    ]

    def test_deterministic_output(self, tmp_path, capsys):
        outs = []
        for name, jobs in (("a.csv", "1"), ("b.csv", "1"), ("c.csv", "3")):
            out = tmp_path / name
            assert main(self.BASE + ["--out", str(out), "--jobs", jobs]) == 0
            outs.append(strip_timing(out.read_text()))
        capsys.readouterr()
        assert outs[0] == outs[1]
        assert outs[0] == outs[2]

    def test_stdout_csv(self, capsys):
        assert main(self.BASE) == 0
        captured = capsys.readouterr()
        lines = captured.out.splitlines()
        assert lines[0].startswith("# {")
        assert lines[1] == "snr_db,ber,bit_errors,bits_sent,mean_nodes,mean_ms"
        assert len(lines) == 2 + 3  # three SNR points
        assert "snr_db=0 ber=" in captured.err

    def test_complexity_summary(self, capsys):
        args = list(self.BASE)
        args[1] = "complexity"
        assert main(args) == 0
        captured = capsys.readouterr()
        assert "mean_nodes=" in captured.err
        # the CSV payload is the same either way
        assert "snr_db,ber,bit_errors,bits_sent,mean_nodes,mean_ms" in captured.out

    def test_exhaustive_node_count(self, tmp_path, capsys):
        out = tmp_path / "ex.csv"
        args = [
            "sweep", "complexity", "--bs-antennas", "2", "--users", "1",
            "--snr-min", "0", "--snr-max", "0", "--snr-step", "1",
            "--trials", "2", "--symbols-per-trial", "3", "--seed", "0",
            "--precoder", "exhaustive", "--out", str(out),
        ]
        assert main(args) == 0
        capsys.readouterr()
        row = out.read_text().splitlines()[2].split(",")
        assert float(row[4]) == 8.0  # 2 * 4^(B-1) evaluations at B = 2

    def test_json_format(self, tmp_path, capsys):
        out = tmp_path / "res.json"
        assert main(self.BASE + ["--format", "json", "--out", str(out)]) == 0
        capsys.readouterr()
        doc = json.loads(out.read_text())
        assert doc["config"]["B"] == 3
        assert len(doc["results"]) == 3
        assert doc["config"]["master_seed"] == 3

    def test_zero_step_exits_5(self, capsys):
        args = list(self.BASE)
        args[args.index("--snr-step") + 1] = "0"
        assert main(args) == 5
        assert "snr-step" in capsys.readouterr().err

    def test_bad_jobs_exits_5(self, capsys):
        assert main(self.BASE + ["--jobs", "0"]) == 5
        assert "jobs" in capsys.readouterr().err

    def test_negative_seed_exits_5(self, capsys):
        args = list(self.BASE)
        args[args.index("--seed") + 1] = "-1"
        assert main(args) == 5
        assert "seed" in capsys.readouterr().err


class TestEntryPoints:
    def test_module_invocation(self, tmp_path):
        path = write_instance(tmp_path)
        proc = subprocess.run(
            [sys.executable, "-m", "onebit_precoding", "solve", path],
            capture_output=True, text=True, timeout=120,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["cmqp_value"] == pytest.approx(1.0, rel=1e-12)

    def test_console_script_exists(self):
        exe = shutil.which("onebit-precode")
        if exe is None:
            pytest.skip("console script not on PATH in this environment")
        proc = subprocess.run([exe, "--version"], capture_output=True, text=True,
                              timeout=60)
        assert proc.returncode == 0
        assert proc.stdout.strip() == "0.1.0"
