import json

import numpy as np
import pytest

from wcorr.cli import RunReport, load_state, main, parse_measured, parse_state, state_to_obj, CliError
from wcorr.states import random_density

QUICK = ["--restarts-inner", "12", "--restarts-outer", "6"]


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, obj, name="s.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


class TestStateFiles:
    def test_round_trip(self):
        rho = random_density((2, 3), seed=1)
        back = parse_state(json.loads(json.dumps(state_to_obj(rho))))
        assert np.array_equal(back.matrix, rho.matrix) and back.dims == (2, 3)

    def test_bundled(self):
        assert load_state("bell.json").dims == (2, 2)
        assert load_state("ghz.json").dims == (2, 2, 2)

    @pytest.mark.parametrize("obj", [{"dims": [2]}, {"dims": [2], "matrix": [[1, 0], [0, 1]]},
                                     {"dims": [3], "matrix": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]},
                                     {"dims": [2], "kind": "mixed", "matrix": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]}])
    def test_malformed(self, obj):
        with pytest.raises(CliError) as exc:
            parse_state(obj)
        assert exc.value.code == 2

    def test_invalid_state_names_invariant(self):
        with pytest.raises(CliError) as exc:
            parse_state({"dims": [2], "matrix": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]})
        assert exc.value.code == 3 and "TraceNotOne" in str(exc.value)


class TestPartySpec:
    def test_letters_and_indices(self):
        assert parse_measured("A", 2) == [0]
        assert parse_measured("ab", 2) == [0, 1]
        assert parse_measured("0,2", 3) == [0, 2]

    @pytest.mark.parametrize("spec", ["C", "AA", "x1", "", "0,5"])
    def test_bad(self, spec):
        with pytest.raises(CliError) as exc:
            parse_measured(spec, 2)
        assert exc.value.code == 4


class TestExitCodes:
    def test_missing_file(self, capsys):
        assert run(["compute", "--state", "/nonexistent/zz.json"], capsys)[0] == 2

    def test_garbage_file(self, tmp_path, capsys):
        assert run(["compute", "--state", write(tmp_path, "{not json")], capsys)[0] == 2

    def test_invalid_state(self, tmp_path, capsys):
        path = write(tmp_path, {"dims": [2, 2], "matrix": (np.eye(4)[..., None] * [1, 0]).tolist()})
        code, _, err = run(["compute", "--state", path], capsys)
        assert code == 3 and "TraceNotOne" in err

    def test_bad_party(self, capsys):
        assert run(["compute", "--state", "bell.json", "--measured", "Q"], capsys)[0] == 4

    def test_bad_flags(self, capsys):
        assert run(["compute", "--state", "bell.json", "--restarts-inner", "0"], capsys)[0] == 4
        assert run(["nonsense"], capsys)[0] == 4
        assert run(["sweep-werner", "--pmin", "0.8", "--pmax", "0.2"], capsys)[0] == 4

    def test_pointer_needs_qubit(self, capsys):
        assert run(["pointer", "--state", "bell.json"], capsys)[0] == 4


class TestCommands:
    def test_compute_cq(self, capsys):
        code, out, _ = run(["compute", "--state", "cq.json", "--json"] + QUICK, capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["value"] <= 1e-6 and rep["format_version"] == "1"
        assert "wall_time" not in rep or rep["wall_time"] is None

    def test_report_round_trip(self, capsys):
        _, out, _ = run(["compute", "--state", "werner_p02.json", "--json"] + QUICK, capsys)
        rep = RunReport.from_json(out)
        assert rep.to_json() + "\n" == out
        assert rep.value == pytest.approx(0.2, abs=1e-2)

    def test_timing_flag(self, capsys):
        _, out, _ = run(["compute", "--state", "cq.json", "--json", "--timing"] + QUICK, capsys)
        assert json.loads(out)["wall_time"] >= 0

    def test_out_file(self, tmp_path, capsys):
        target = tmp_path / "r.txt"
        assert run(["oracle", "--state", "bell.json", "--grid", "12", "--out", str(target)], capsys)[0] == 0
        text = target.read_bytes()
        assert b"\r" not in text and b"value: " in text

    def test_sweep_csv(self, capsys):
        code, out, _ = run(["sweep-werner", "--pmin", "0", "--pmax", "1", "--steps", "3"] + QUICK, capsys)
        rows = out.split("\n")
        assert code == 0 and "\r" not in out
        assert rows[0] == "p,value,restart_spread" and len(rows) == 5 and rows[-1] == ""
        vals = [float(r.split(",")[1]) for r in rows[1:4]]
        assert vals == pytest.approx([0.0, 0.5, 1.0], abs=1e-2)

    def test_witness_bell(self, capsys):
        _, out, _ = run(["witness", "--state", "bell.json", "--json"] + QUICK, capsys)
        rep = json.loads(out)
        assert rep["witness_pure"] == pytest.approx(1.0)
        assert rep["w_value"] == pytest.approx(1.0, abs=5e-3)
        assert all(rep["ordering"].values())

    def test_witness_product(self, tmp_path, capsys):
        path = write(tmp_path, {"dims": [2, 2], "kind": "pure", "matrix": [[[1, 0], [0, 0], [0, 0], [0, 0]]]})
        rep = json.loads(run(["witness", "--state", path, "--json"] + QUICK, capsys)[1])
        for key in ("w_value", "uncertainty_bound", "tsallis_bound", "witness_pure"):
            assert rep[key] == pytest.approx(0, abs=1e-6)

    def test_pointer_commuting(self, tmp_path, capsys):
        path = write(tmp_path, {"dims": [2], "kind": "pure", "matrix": [[[1, 0], [0, 0]]]})
        rep = json.loads(run(["pointer", "--state", path, "--observable", "Z", "--postselect", "+", "--json"], capsys)[1])
        assert abs(rep["inferred_im"]) <= 1e-6

    def test_pointer_reference(self, capsys):
        rep = json.loads(run(["pointer", "--state", "plus.json", "--json"], capsys)[1])
        assert rep["inferred_im"] == pytest.approx(0.5, rel=0.05)
        assert rep["exact_im"] == pytest.approx(0.5)

    def test_same_seed_same_bytes(self, capsys):
        argv = ["compute", "--state", "werner_p02.json", "--seed", "3"] + QUICK
        first = run(argv, capsys)[1]
        assert run(argv, capsys)[1] == first
