import json

import pytest

from app.cli import main

SQUARE = {"dim": 2, "vertices": [["0", "0"], ["1", "0"], ["0", "1"], ["1", "1"]]}
LOWER = {"dim": 2, "vertices": [["0", "0"], ["1", "0"], ["1", "1"]]}
UPPER = {"dim": 2, "vertices": [["0", "0"], ["1", "1"], ["0", "1"]]}
DIAGONAL = {"dim": 2, "vertices": [["0", "0"], ["1", "1"]]}
EDGES = [{"dim": 2, "vertices": e} for e in ([["0", "0"], ["1", "0"]], [["1", "0"], ["1", "1"]],
                                              [["0", "1"], ["1", "1"]], [["0", "0"], ["0", "1"]])]
CORNERS = [{"dim": 2, "vertices": [v]} for v in SQUARE["vertices"]]


def _write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


@pytest.fixture
def files(tmp_path):
    split = {"target": SQUARE, "cells": [LOWER, UPPER, DIAGONAL] + EDGES + CORNERS}
    broken = {"target": SQUARE, "cells": [LOWER, UPPER] + EDGES + CORNERS}
    return {
        "square": _write(tmp_path, "square.json", SQUARE),
        "points": _write(tmp_path, "points.json", {"points": [[0, 0], [2, 0], [0, 2], ["1/2", "1/2"]]}),
        "split": _write(tmp_path, "split.json", split),
        "broken": _write(tmp_path, "broken.json", broken),
        "set": _write(tmp_path, "set.json", {"subdivision": split, "members": [0, 1]}),
        "table": _write(tmp_path, "table.json", {"values": {str(i): ["1", "0"] for i in range(11)}}),
        "v1": _write(tmp_path, "v1.json", {"kind": "intrinsic", "n": 2, "k": 1}),
        "volume": _write(tmp_path, "volume.json", {"kind": "volume", "n": 2}),
        "bad": _write(tmp_path, "bad.json", {"dim": 3, "vertices": [["0", "0"]]}),
    }


def _run(capsys, argv):
    code = main(argv)
    return code, capsys.readouterr()


def test_hull(capsys, files):
    code, out = _run(capsys, ["hull", files["points"]])
    assert code == 0
    assert json.loads(out.out)["f_vector"] == [3, 3, 1]


def test_subdiv_verify_exit_codes(capsys, files):
    assert _run(capsys, ["subdiv", "verify", files["split"]])[0] == 0
    code, out = _run(capsys, ["subdiv", "verify", files["broken"]])
    assert code == 1
    assert json.loads(out.out)["violations"][0]["condition"] == "coverage"


def test_subdiv_intersect_self_is_a_domain_error(capsys, files):
    code, out = _run(capsys, ["subdiv", "intersect", files["split"], files["split"]])
    assert code == 2
    assert json.loads(out.err.strip().splitlines()[-1])["error"] == "NonTransversalError"


def test_subdiv_reduce_and_triangulate(capsys, files):
    code, out = _run(capsys, ["subdiv", "reduce", files["set"]])
    assert code == 0
    assert len(json.loads(out.out)["reduced"]) == 2
    code, out = _run(capsys, ["subdiv", "triangulate", files["split"], "--mode", "barycentric"])
    assert code == 0
    assert len(json.loads(out.out)["cells"]) > 11


def test_measure_eval(capsys, files):
    code, out = _run(capsys, ["measure", "eval", files["set"], files["table"]])
    assert code == 0
    assert json.loads(out.out) == {"mode": "rational", "value": ["1", "0"]}


def test_measure_extend(capsys, files):
    code, out = _run(capsys, ["measure", "extend", files["split"], files["table"]])
    assert code == 0
    assert json.loads(out.out)["total"] == ["1", "0"]


def test_cycles(capsys, files):
    code, out = _run(capsys, ["cycle", "cc", files["square"]])
    assert code == 0
    assert len(json.loads(out.out)["cells"]) == 9
    code, out = _run(capsys, ["cycle", "nc", files["square"]])
    assert len(json.loads(out.out)["cells"]) == 8


def test_val_eval_via_cc(capsys, files):
    code, out = _run(capsys, ["--quad-order", "12", "val", "eval", files["v1"], files["square"], "--via", "cc"])
    assert code == 0
    assert float(json.loads(out.out)["value"][0]) == pytest.approx(2.0, abs=1e-8)


def test_val_decompose_writes_samples(capsys, files, tmp_path):
    samples = tmp_path / "samples.csv"
    code, out = _run(capsys, ["val", "decompose", files["volume"], files["square"], "--x", "1/2", "0",
                              "--samples", str(samples)])
    assert code == 0
    coefficients = [float(c[0]) for c in json.loads(out.out)["coefficients"]]
    assert coefficients == pytest.approx([0, 0, 1], abs=1e-9)
    assert samples.read_text().startswith("t,value")


def test_converge_csv(capsys, tmp_path):
    out_file = tmp_path / "disk.csv"
    assert main(["--out", str(out_file), "converge", "--body", "disk", "--k", "1", "--m", "8", "16"]) == 0
    assert out_file.read_text().splitlines()[0] == "m,value,error,order"


def test_suite_report_and_log(capsys, tmp_path):
    config = _write(tmp_path, "suite.json", {"corpus": [{"generator": "cube", "n": 2}],
                                            "families": ["face-lattice", "angle-sum"]})
    report = tmp_path / "report.json"
    assert main(["--out", str(report), "suite", config]) == 0
    assert json.loads(report.read_text())["passed"]
    assert len(report.with_suffix(".jsonl").read_text().splitlines()) == 2
    assert main(["--tol", "0", "--out", str(report), "suite", config]) == 1


def test_input_errors_exit_with_two(capsys, files, tmp_path):
    code, out = _run(capsys, ["hull", files["bad"]])
    assert code == 2
    assert json.loads(out.err.strip().splitlines()[-1])["error"] == "DimensionMismatchError"
    code, out = _run(capsys, ["hull", str(tmp_path / "missing.json")])
    assert code == 2
    assert json.loads(out.err.strip().splitlines()[-1])["error"] == "MalformedInputError"
