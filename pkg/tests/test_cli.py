import json

import numpy as np
import pytest

from mmdist import mm_space, write_space
from mmdist.cli import main


@pytest.fixture
def spaces(tmp_path):
    x = tmp_path / "x.json"
    y = tmp_path / "y.json"
    write_space(x, mm_space([0.5, 0.5], [[0, 1], [1, 0]]))
    write_space(y, mm_space([0.5, 0.5], [[0, 2], [2, 0]]))
    return x, y


def run_json(capsys, argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip().startswith("{") else out


class TestBoxCommand:
    def test_identical_files_give_zero(self, tmp_path, capsys, spaces):
        x, _ = spaces
        code, rep = run_json(capsys, ["box", x, x, "--lambda", "1.0"])
        assert code == 0
        assert rep["result"]["value"] == 0.0

    def test_golden_pair(self, capsys, spaces):
        x, y = spaces
        code, rep = run_json(capsys, ["box", x, y, "--lambda", "1.0"])
        assert code == 0
        assert rep["result"]["value"] == 0.5
        assert rep["result"]["mode"] == "exact"
        assert rep["inputs"]["x"]["sha256"]

    def test_missing_input_exits_one(self, capsys, tmp_path):
        assert main(["box", str(tmp_path / "nope.json"), str(tmp_path / "nope.json")]) == 1

    def test_size_limit_exits_two(self, tmp_path, capsys):
        n = 9
        p = tmp_path / "big.json"
        write_space(p, mm_space(np.ones(n) / n, np.ones((n, n)) - np.eye(n)))
        assert main(["box", str(p), str(p), "--max-cells", "64"]) == 2

    def test_invalid_space_exits_one(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"labels": ["a"], "weights": [-1.0], "dist": [[0.0]]}))
        assert main(["box", str(p), str(p)]) == 1


class TestValidateCommand:
    def test_valid_space(self, capsys, spaces):
        x, _ = spaces
        code, rep = run_json(capsys, ["validate", x])
        assert code == 0 and rep["result"]["ok"]

    def test_invalid_space_is_reported_not_raised(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text(
            json.dumps({"labels": ["a", "b"], "weights": [1, 1], "dist": [[0, 1], [2, 0]]})
        )
        code, rep = run_json(capsys, ["validate", str(p)])
        assert code == 0
        assert not rep["result"]["ok"]
        assert rep["result"]["violations"]


class TestOtherCommands:
    def test_isotest_distinguishes_golden_pair(self, capsys, spaces):
        x, y = spaces
        code, rep = run_json(capsys, ["isotest", x, y])
        assert code == 0
        assert rep["result"]["verdict"] == "distinguished"
        assert rep["result"]["distinguishing_r"] == 2

    def test_me_command(self, tmp_path, capsys, spaces):
        x, _ = spaces
        f = tmp_path / "f.json"
        g = tmp_path / "g.json"
        f.write_text("[0.3, 0.0]")
        g.write_text("[0.0, 0.0]")
        code, rep = run_json(capsys, ["me", x, "--f", f, "--g", g, "--lambda", "1.0"])
        assert code == 0 and rep["result"]["value"] == 0.3

    def test_hlip_exact0(self, capsys, spaces):
        x, y = spaces
        code, rep = run_json(capsys, ["hlip", x, y, "--lambda", "0"])
        assert code == 0
        assert rep["result"]["value"] == 0.5
        assert rep["result"]["tag"] == "exact"

    def test_prokhorov_command(self, tmp_path, capsys, spaces):
        x, _ = spaces
        mu = tmp_path / "mu.json"
        nu = tmp_path / "nu.json"
        mu.write_text("[0.7, 0.3]")
        nu.write_text("[0.5, 0.5]")
        code, rep = run_json(capsys, ["prokhorov", x, "--mu", mu, "--nu", nu])
        assert code == 0 and abs(rep["result"]["value"] - 0.2) < 1e-9

    def test_witness_command(self, capsys, spaces):
        x, _ = spaces
        code, rep = run_json(capsys, ["witness", x, x])
        assert code == 0
        assert rep["result"]["eps"] == 0.0
        assert rep["result"]["box1_upper_bound"] == 0.0

    def test_matdist_command(self, capsys, spaces):
        x, _ = spaces
        code, rep = run_json(capsys, ["matdist", x, "--r", "2"])
        assert code == 0
        assert len(rep["result"]["entries"]) == 2

    def test_dominate_command(self, capsys, spaces):
        x, y = spaces
        code, rep = run_json(capsys, ["dominate", y, x])
        assert code == 0 and rep["result"]["dominates"]

    def test_homogeneous_command(self, capsys, spaces):
        x, _ = spaces
        code, rep = run_json(capsys, ["homogeneous", x])
        assert code == 0
        assert rep["result"]["homogeneous"] is True
        assert rep["result"]["isometry_group_order"] == 2

    def test_converge_report_csv(self, capsys, spaces):
        x, _ = spaces
        code = main(["converge-report", str(x), "--sizes", "10,100", "--seed", "2"])
        out = capsys.readouterr().out
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "N,value,mode"
        assert lines[1].startswith("10,") and lines[2].startswith("100,")


class TestSuiteCommand:
    def test_subset_run_passes(self, capsys):
        code, rep = run_json(
            capsys, ["suite", "--properties", "scale-roundtrip,box-triangle", "--samples", "0.4"]
        )
        assert code == 0
        assert rep["result"]["passed"]
        names = [p["name"] for p in rep["result"]["properties"]]
        assert names == ["box-triangle", "scale-roundtrip"]

    def test_unknown_property_rejected(self, capsys):
        assert main(["suite", "--properties", "not-a-property"]) == 1

    def test_determinism_excluding_wall_time(self, tmp_path):
        out1 = tmp_path / "a.json"
        out2 = tmp_path / "b.json"
        args = ["suite", "--properties", "me-metric,prokhorov-metric", "--seed", "3"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        a = json.loads(out1.read_text())
        b = json.loads(out2.read_text())
        a.pop("wall_time_s")
        b.pop("wall_time_s")
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
