import pytest

from app import app


@pytest.fixture
def client():
    app.config["TESTING"] = True
    with app.test_client() as client:
        yield client


def test_list_checks(client):
    response = client.get("/api/checks?category=exact")
    assert response.status_code == 200
    assert "symmetries" in response.get_json()["checks"]


def test_construct_standard_fixture(client):
    response = client.post("/api/construct", json={})
    assert response.status_code == 200
    assert response.get_json()["richelot"]["delta"] == "32/1"


def test_map_point_of_a_kernel_node(client):
    # first column of C for the standard factorization
    body = client.post("/api/construct", json={}).get_json()
    column = [row[0] for row in body["richelot"]["C"]]
    response = client.post("/api/map-point", json={"point": column})
    assert response.status_code == 200
    data = response.get_json()
    assert data["node"] == "N0"
    assert data["exact"]


def test_map_point_requires_a_point(client):
    response = client.post("/api/map-point", json={})
    assert response.status_code == 400
    assert response.get_json()["error_type"] == "KeyError"


def test_nodes_and_tropes(client):
    nodes = client.post("/api/nodes", json={"f": ["0", "-120", "274", "-225", "85", "-15", "1"]}).get_json()
    assert nodes["nodes"]["N01"] == ["1/1", "1/1", "0/1", "-30/1"]
    tropes = client.post("/api/tropes", json={}).get_json()
    assert tropes["nodes_per_trope"] == [6] * 16
    assert tropes["tropes_per_node"] == [6] * 16


def test_degenerate_factorization_is_a_client_error(client):
    body = {"p": ["0", "-5", "1"], "q": ["4", "-5", "1"], "r": ["6", "-5", "1"]}
    response = client.post("/api/construct", json=body)
    assert response.status_code == 400
    assert response.get_json()["error_type"] == "DegenerateDecomposition"


def test_verify_with_overrides(client):
    response = client.post("/api/verify", json={"checks": ["matrix_inverse"], "trials": 20, "timings": True})
    assert response.status_code == 200
    data = response.get_json()
    assert data["passed"]
    assert "matrix_inverse" in data["report"]["timings"]
