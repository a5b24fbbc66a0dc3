import json

from services.verification_service import VerificationService


def print_section(title):
    print("\n" + "=" * 50)
    print(f"  {title}")
    print("=" * 50)


def pretty_print(data):
    """Pretty print JSON data"""
    if isinstance(data, (dict, list)):
        print(json.dumps(data, indent=2, default=str))
    else:
        print(data)


def test_all_services():
    print_section("Testing All Services on the Standard Factorization")

    print("Initializing services...")
    service = VerificationService({"seed": 1, "trials": 20, "height": 10})

    print_section("Construction")
    construction = service.construct()
    assert construction["success"]
    richelot = construction["richelot"]
    pretty_print({"delta": richelot["delta"], "hat_f": richelot["hat_f"], "H": richelot["H"]})
    assert richelot["delta"] == "32/1"

    print_section("Nodes of K_f and of the dual surface")
    nodes = service.nodes()
    dual = service.nodes({"dual": True}, numeric=True)
    pretty_print({"N01": nodes["nodes"]["N01"], "dual_labels": sorted(dual["nodes"])[:4]})
    assert nodes["success"] and dual["success"]
    assert len(dual["nodes"]) == 16

    print_section("Tropes")
    tropes = service.tropes()
    pretty_print({"T024": tropes["tropes"]["T024"]})
    assert tropes["nodes_per_trope"] == [6] * 16

    print_section("Decompositions")
    rows = service.decompose()["decompositions"]
    degenerate = [row["pairs"] for row in rows if row["degenerate"]]
    pretty_print({"count": len(rows), "degenerate": degenerate})
    assert [[0, 5], [1, 4], [2, 3]] in degenerate

    print_section("Map a point")
    image = service.map_point({"point": ["1", "2", "3", "4"]})
    pretty_print(image)
    assert image["success"] and image["exact"]

    print_section("Exact checks")
    result = service.verify(checks=["matrix_inverse", "kernel_collapse", "symmetries"])
    print(result["summary"])
    assert result["passed"]


if __name__ == "__main__":
    test_all_services()
