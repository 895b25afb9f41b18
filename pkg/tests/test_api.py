import pytest
from fastapi.testclient import TestClient

from app.main import app

SQUARE = {"dim": 2, "vertices": [["0", "0"], ["1", "0"], ["0", "1"], ["1", "1"]]}


@pytest.fixture
def client():
    return TestClient(app)


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.json() == {"message": "Polyhedral Valuation Lab API is running"}


def test_hull(client):
    response = client.post("/api/hull", json={"dim": 2, "vertices": [["0", "0"], ["1", "0"], ["0", "1"],
                                                                      ["1/4", "1/4"]]})
    assert response.status_code == 200
    assert response.json()["f_vector"] == [3, 3, 1]


def test_domain_errors_are_400(client):
    response = client.post("/api/hull", json={"dim": 3, "vertices": [["0", "0"]]})
    assert response.status_code == 400
    assert response.json()["detail"]["error"] == "DimensionMismatchError"


def test_malformed_bodies_are_422(client):
    assert client.post("/api/hull", json={"vertices": "nope"}).status_code == 422


def test_intrinsic_volume_via_cc(client):
    body = {"valuation": {"kind": "intrinsic", "n": 2, "k": 1}, "polytope": SQUARE, "via": "cc", "quad_order": 12}
    response = client.post("/api/val/eval", json=body)
    assert response.status_code == 200
    assert float(response.json()["value"][0]) == pytest.approx(2.0, abs=1e-8)


def test_cycle(client):
    response = client.post("/api/cycle", json={"polytope": SQUARE, "cycle": "nc"})
    assert response.status_code == 200
    assert len(response.json()["cells"]) == 8


def test_converge(client):
    response = client.post("/api/converge", json={"body": "disk", "k": 1, "m": [8, 16]})
    assert response.status_code == 200
    rows = response.json()
    assert rows[0]["order"] is None
    assert rows[1]["order"] == pytest.approx(2.0, abs=0.05)


def test_suite_endpoint(client):
    response = client.post("/api/suite", json={"corpus": [{"generator": "simplex", "n": 2}],
                                               "families": ["face-lattice"]})
    assert response.status_code == 200
    assert response.json()["passed"]


def test_measure_extend(client):
    segment = {"dim": 1, "vertices": [["0"], ["1"]]}
    cells = [segment, {"dim": 1, "vertices": [["0"]]}, {"dim": 1, "vertices": [["1"]]}]
    body = {"subdivision": {"target": segment, "cells": cells},
            "table": {"values": {"0": ["1", "0"], "1": ["1", "0"], "2": ["1", "0"]}}}
    response = client.post("/api/measure/extend", json=body)
    assert response.status_code == 200
    result = response.json()
    assert result["mode"] == "rational"
    assert result["total"] == ["1", "0"]
    assert len(result["atoms"]) == 3


def test_val_split_of_volume_is_even(client):
    response = client.post("/api/val/split", json={"kind": "volume", "n": 2})
    assert response.status_code == 200
    result = response.json()
    assert result["plus"]["terms"]
    assert all(t["coef"] == "0" for t in result["minus"]["terms"])


def test_val_split_needs_a_form(client):
    response = client.post("/api/val/split", json={"kind": "cc", "n": 2})
    assert response.status_code == 400


def test_val_steiner(client):
    response = client.post("/api/val/steiner", json={"polytope": SQUARE, "eps": [0.1], "samples": 200000})
    assert response.status_code == 200
    row = response.json()[0]
    assert row["closed_form"] == pytest.approx(1.4 + 0.01 * 3.141592653589793)
    assert row["rel_error"] < 0.01
