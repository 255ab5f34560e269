"""Command line interface."""

import json

import numpy as np
import pytest

from gestureflight.cli import main
from gestureflight.sim import read_log


class TestMission:
    def test_mission_writes_log_and_summary(self, tmp_path, capsys):
        out = tmp_path / "flight.ndjson"
        rc = main(["mission", "--kind", "l_shape", "--width", "2",
                   "--height", "1", "--seed", "3", "--out", str(out)])
        assert rc == 0
        text = capsys.readouterr().out
        assert "l_shape seed=3" in text
        assert "max |error|" in text
        log = read_log(out)
        assert len(log.rows) > 0

    def test_zero_noise_flag(self, tmp_path, capsys):
        out = tmp_path / "flight.ndjson"
        rc = main(["mission", "--kind", "l_shape", "--width", "1",
                   "--height", "1", "--zero-noise", "--out", str(out)])
        assert rc == 0
        for line in capsys.readouterr().out.splitlines():
            if line.startswith("max |error|"):
                assert all(float(v) < 1e-6 for v in line.split("[m]:")[1].split())

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"grid": {"threshold": 0.99}}))
        out = tmp_path / "flight.ndjson"
        rc = main(["mission", "--kind", "l_shape", "--width", "1", "--height", "1",
                   "--config", str(cfg), "--out", str(out)])
        assert rc == 0
        # oracle confidences sit near 0.9, so everything is rejected
        log = read_log(out)
        assert all(r.event.startswith("rejected") for r in log.rows)

    def test_bad_config_reports_error(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"grid": {"threshold": 2}}))
        rc = main(["mission", "--config", str(cfg), "--out",
                   str(tmp_path / "x.ndjson")])
        assert rc == 2
        assert "error:" in capsys.readouterr().err


class TestReport:
    def test_report_round_trip(self, tmp_path, capsys):
        out = tmp_path / "flight.ndjson"
        main(["mission", "--kind", "rectangle", "--width", "2", "--height", "1",
              "--seed", "1", "--out", str(out)])
        capsys.readouterr()
        rc = main(["report", str(out), "--kind", "rectangle",
                   "--width", "2", "--height", "1"])
        assert rc == 0
        text = capsys.readouterr().out
        assert "segments" in text and "max |error|" in text

    def test_report_missing_file(self, tmp_path, capsys):
        rc = main(["report", str(tmp_path / "nope.ndjson")])
        assert rc == 2


class TestGaborDump:
    def test_print(self, capsys):
        rc = main(["gabor-dump", "--orientations", "2", "--wavelengths", "2", "4"])
        assert rc == 0
        lines = capsys.readouterr().out.splitlines()
        headers = [json.loads(l) for l in lines if l.startswith("{")]
        assert len(headers) == 4  # 2 orientations x 2 wavelengths
        assert headers[0]["channel"] == 0

    def test_npz_dump(self, tmp_path, capsys):
        out = tmp_path / "bank.npz"
        rc = main(["gabor-dump", "--out", str(out)])
        assert rc == 0
        bank = np.load(out)["bank"]
        assert bank.shape == (3, 3, 1, 16)

    def test_bad_params(self, capsys):
        rc = main(["gabor-dump", "--wavelengths", "1.0"])
        assert rc == 2
        assert "error:" in capsys.readouterr().err
