import json

import pytest

from app.services.complexes import verify_subdivision
from app.services.serialization import CorpusItem, SuiteConfig
from app.services.suite import DEFAULT_TOLERANCES, FAMILIES, dump_report, random_triangulation, run_suite

EXACT = ["face-lattice", "subdivision", "measure-uniqueness", "additivity", "euler-characteristic",
         "verdier-involution"]


def _config(**kwargs):
    base = {"corpus": [CorpusItem(generator="cube", n=2), CorpusItem(generator="simplex", n=2)], "workers": 2,
            "triangulations": 4, "filtration_probes": 2, "forms_per_body": 2}
    base.update(kwargs)
    return SuiteConfig(**base)


def test_every_family_has_a_tolerance_or_is_exact():
    for name, (exact, _) in FAMILIES.items():
        assert exact or name in DEFAULT_TOLERANCES
    assert len(FAMILIES) >= 12


def test_empty_corpus():
    report = run_suite(SuiteConfig(corpus=[]))
    assert report["families"] == []
    assert report["passed"]


def test_exact_families_pass():
    report = run_suite(_config(families=EXACT))
    assert [f["family"] for f in report["families"]] == EXACT
    failing = [c for f in report["families"] for c in f["checks"] if not c["passed"]]
    assert failing == []
    assert report["passed"]


def test_zero_tolerance_fails_only_approximate_families():
    report = run_suite(_config(families=["angle-sum", "face-lattice"], tol=0.0))
    by_name = {f["family"]: f for f in report["families"]}
    assert not by_name["angle-sum"]["passed"]
    assert by_name["face-lattice"]["passed"]
    assert not report["passed"]


def test_report_is_deterministic():
    config = _config(families=["face-lattice", "angle-sum", "intrinsic-volumes", "verdier-involution"])
    assert dump_report(run_suite(config)) == dump_report(run_suite(config))
    assert "seconds" not in dump_report(run_suite(config))


def test_progress_log_has_one_line_per_family(tmp_path):
    log = tmp_path / "progress.jsonl"
    run_suite(_config(families=["face-lattice", "angle-sum"]), log)
    lines = [json.loads(line) for line in log.read_text().splitlines()]
    assert sorted(line["family"] for line in lines) == ["angle-sum", "face-lattice"]
    assert all("seconds" in line for line in lines)


def test_timings_are_opt_in():
    report = run_suite(_config(families=["face-lattice"], include_timings=True))
    assert "seconds" in report["families"][0]


def test_unknown_family_is_a_diagnostic():
    report = run_suite(_config(families=["face-lattice", "no-such-family"]))
    assert [f["family"] for f in report["families"]] == ["face-lattice"]
    assert report["diagnostics"][0]["message"] == "no-such-family"
    assert not report["passed"]


def test_bad_corpus_item_is_a_diagnostic():
    report = run_suite(_config(corpus=[CorpusItem(generator="cube", n=2), CorpusItem(name="broken")],
                               families=["face-lattice"]))
    assert report["diagnostics"][0]["item"] == "broken"
    assert report["families"][0]["passed"]


def test_family_tolerance_override():
    report = run_suite(_config(families=["angle-sum"], tolerances={"angle-sum": 0.0}))
    assert not report["passed"]



def _checks(report, family):
    return {c["item"]: c for f in report["families"] if f["family"] == family for c in f["checks"]}


def test_boundary_of_a_triangle_has_euler_characteristic_zero():
    report = run_suite(_config(corpus=[CorpusItem(generator="simplex", n=2)], families=["euler-characteristic"]))
    checks = _checks(report, "euler-characteristic")
    assert checks["simplex2/boundary"]["passed"]
    assert report["passed"]


@pytest.mark.parametrize("n", [2, 3])
def test_random_triangulations_are_small_complexes(n):
    for seed in range(5):
        D = random_triangulation(n, seed)
        assert len(D) <= 30
        assert verify_subdivision(D).passed
        assert all(c.is_simplex() for c in D.cells)


def test_measure_uniqueness_covers_random_triangulations():
    checks = _checks(run_suite(_config(families=["measure-uniqueness"])), "measure-uniqueness")
    assert checks["random-triangulations/orders"]["passed"]
    assert checks["random-triangulations/refinement"]["passed"]
    assert checks["simplex2/refinement"]["passed"]


def test_filtration_family_covers_three_dimensions():
    report = run_suite(_config(families=["filtration"]))
    checks = _checks(report, "filtration")
    assert {f"n3/level{i}" for i in range(4)} <= set(checks)
    assert checks["n3/volume-degree"]["passed"]
    assert checks["n3/euler-degree"]["passed"]
    assert report["passed"]


def test_stokes_family_covers_normal_cycles_and_polynomial_bumps():
    corpus = [CorpusItem(generator="simplex", n=2), CorpusItem(generator="random_hull", n=2, seed=63052)]
    report = run_suite(_config(corpus=corpus, families=["stokes"]))
    checks = _checks(report, "stokes")
    assert {"simplex2/N", "random_hull2-63052/N", "simplex2/CC/polynomial"} <= set(checks)
    assert report["passed"]


def test_verdier_identity_family_includes_segments():
    checks = _checks(run_suite(_config(families=["verdier-identity"])), "verdier-identity")
    assert checks["segment1"]["passed"]
    assert checks["segment2"]["passed"]
    assert checks["cube2"]["passed"]


@pytest.mark.slow
def test_default_suite_passes():
    report = run_suite(SuiteConfig())
    failing = {f["family"]: [c for c in f["checks"] if not c["passed"]] for f in report["families"] if not f["passed"]}
    assert failing == {}
    assert len(report["families"]) == len(FAMILIES)
