#!/usr/bin/env python3

import json

import pytest

from cli import main
from utils.csv_export import SWEEP_HEADER, TABLE2_HEADER, TRANSFER_HEADER

WORKED = ["--src", "2x2", "--dst", "3x4", "--nblocks", "12"]


class TestPlanCommand:
    """plan / stats / cost"""

    def test_plan_json(self, capsys):
        assert main(["plan", *WORKED]) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["version"] == "redistplan-plan/1"
        assert document["dims"] == {"R": 6, "C": 4, "sup": 6}
        assert document["shift_case"] == "none"
        assert len(document["transfer"]) == 6
        assert document["recv"] is not None

    def test_plan_csv_to_file(self, tmp_path, capsys):
        out = tmp_path / "plan.csv"
        assert main(["plan", *WORKED, "--format", "csv", "--out", str(out)]) == 0
        assert capsys.readouterr().out == ""
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == ",".join(TRANSFER_HEADER)
        assert len(lines) == 1 + 6 * 4
        assert lines[1] == "0,0,0,0,0"

    def test_output_is_deterministic(self, capsys):
        main(["plan", "--src", "3x4", "--dst", "2x2", "--nblocks", "12"])
        first = capsys.readouterr().out
        main(["plan", "--src", "3x4", "--dst", "2x2", "--nblocks", "12"])
        assert capsys.readouterr().out == first

    def test_format_from_environment(self, fresh_settings, capsys):
        fresh_settings.setenv("REDISTPLAN_FORMAT", "csv")
        assert main(["stats", *WORKED]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("steps,copies,sendrecvs")

    def test_stats_json(self, capsys):
        assert main(["stats", "--src", "2x2", "--dst", "2x3", "--nblocks", "6"]) == 0
        result = json.loads(capsys.readouterr().out)
        assert (result["steps"], result["copies"], result["sendrecvs"]) == (3, 3, 9)

    def test_cost(self, capsys):
        assert main(["cost", *WORKED, "--lambda", "1", "--tau", "1"]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["modeled_cost_s"] == 42.0
        assert result["message_blocks"] == 6

    def test_cost_per_byte(self, capsys):
        assert main(["cost", *WORKED, "--block-size", "2", "--tau-per-byte", "1"]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["tau"] == 32.0
        assert result["modeled_cost_s"] == 6 * 6 * 32.0

    def test_no_shifts(self, capsys):
        assert main(["plan", "--src", "2x1", "--dst", "1x2", "--nblocks", "2", "--no-shifts"]) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["shift_case"] == "case1"
        assert document["shifted"] is False
        assert document["contentions"] == {"before": 2, "after": 2}
        assert document["recv"] is None


class TestExitCodes:
    """0 success, 1 domain failure, 2 usage"""

    def test_divisibility_failure(self, capsys):
        assert main(["plan", "--src", "2x2", "--dst", "3x4", "--nblocks", "8"]) == 1
        err = capsys.readouterr().err
        assert err.startswith("error: rows: 8 is not divisible by 6")
        assert err.count("\n") == 1

    def test_bad_grid_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["plan", "--src", "2by2", "--dst", "3x4", "--nblocks", "12"])
        assert excinfo.value.code == 2

    def test_missing_arguments(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["plan", "--src", "2x2"])
        assert excinfo.value.code == 2

    def test_simulate_without_grids(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["simulate", "--nblocks", "12"])
        assert excinfo.value.code == 2

    def test_invalid_environment_setting(self, fresh_settings, capsys):
        fresh_settings.setenv("REDISTPLAN_FORMAT", "xml")
        assert main(["stats", *WORKED]) == 2
        captured = capsys.readouterr()
        assert captured.out == ""
        assert captured.err.startswith("error: invalid settings: REDISTPLAN_FORMAT")
        assert captured.err.count("\n") == 1

    def test_simulate_invalid_hop(self, capsys):
        assert main(["simulate", "--chain", "2x2,3x4,5x5", "--nblocks", "12"]) == 1
        assert "hop 2" in capsys.readouterr().err


class TestSimulate:
    """In-memory execution from the command line"""

    def test_chain(self, tmp_path, capsys):
        report = tmp_path / "report.json"
        dump = tmp_path / "blocks.csv"
        code = main([
            "simulate", "--chain", "2x2,3x4,2x2", "--nblocks", "12",
            "--report", str(report), "--dump-blocks", str(dump),
        ])
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("hop 1: 2x2 -> 3x4 steps=6")
        assert "VERIFIED (144 blocks)" in lines[0]
        assert "shift=case3" in lines[1]
        assert "contended" in lines[1]
        assert lines[-1] == "VERIFIED"

        document = json.loads(report.read_text(encoding="utf-8"))
        assert document["passed"] is True
        assert [hop["hop"] for hop in document["hops"]] == [1, 2]

        rows = dump.read_text(encoding="utf-8").splitlines()
        assert rows[0] == "x,y,owner,slot_x,slot_y,checksum"
        assert len(rows) == 1 + 144

    def test_src_dst_pair(self, capsys):
        assert main(["simulate", "--src", "1x2", "--dst", "2x2", "--nblocks", "4"]) == 0
        assert capsys.readouterr().out.splitlines()[-1] == "VERIFIED"

    def test_simulation_limit(self, fresh_settings):
        fresh_settings.setenv("REDISTPLAN_MAX_SIM_BLOCKS", "100")
        with pytest.raises(SystemExit) as excinfo:
            main(["simulate", *WORKED])
        assert excinfo.value.code == 2


class TestSweep:
    """Sweeps and the published comparison"""

    def test_table2_csv(self, capsys):
        assert main(["sweep", "--table2", "--format", "csv"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == ",".join(TABLE2_HEADER)
        assert len(lines) == 1 + 16 * 3
        assert lines[1].startswith("2,4,nearly-square,1x2,2x2,2,2,2,2,2,2,MATCH")

    def test_config_sweep_csv(self, capsys):
        code = main(["sweep", "--config", "2x2:3x4", "--config", "2x2:5x5", "--nblocks", "12", "--format", "csv"])
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == ",".join(SWEEP_HEADER)
        assert lines[1] == "2x2,3x4,nearly-square,6,4,20,0,6,0.0"
        assert lines[2] == "2x2,5x5,error,,,,,,"

    def test_preset_json(self, capsys):
        assert main(["sweep", "--preset", "nearly-square"]) == 0
        rows = json.loads(capsys.readouterr().out)
        assert len(rows) == 12
        assert all(row["error"] is None for row in rows)

    def test_sweep_needs_configs(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["sweep"])
        assert excinfo.value.code == 2

    def test_bad_config(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["sweep", "--config", "2x2-3x4"])
        assert excinfo.value.code == 2


class TestEmissions:
    """JSON and CSV views of one plan"""

    def test_json_and_csv_agree(self, capsys):
        from utils.csv_export import parse_transfer_csv

        main(["plan", *WORKED])
        document = json.loads(capsys.readouterr().out)
        main(["plan", *WORKED, "--format", "csv"])
        transfer = parse_transfer_csv(capsys.readouterr().out)
        assert transfer.dest.tolist() == document["transfer"]
        assert transfer.coords.tolist() == document["coords"]

    def test_identity_plan(self, capsys):
        assert main(["plan", "--src", "2x2", "--dst", "2x2", "--nblocks", "4"]) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["transfer"] == [[0, 1, 2, 3]]

    def test_contended_shrink_is_noted(self, capsys):
        assert main(["simulate", "--src", "2x2", "--dst", "1x2", "--nblocks", "4"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert "contentions_after=2" in lines[0]
        assert "[contended, max fan-in 2]" in lines[0]
        assert lines[-1] == "VERIFIED"
