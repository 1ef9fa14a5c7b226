import pytest

import intentroute as ir

ACCEPT = {
    "intent_id": "py-accept",
    "flow_selectors": [{"traffic_class": "video", "src_node": 10, "dst_node": 30}],
    "hard_constraints": [
        {"type": "disable_plane", "target": "plane:7"},
        {"type": "max_latency_ms", "target": "flow_selector:0", "value": 150},
    ],
    "priority": "high",
}


def test_validate_accepts_with_witness():
    report = ir.validate(ACCEPT)
    assert report["outcome"] == "accept"
    assert [p["pass"] for p in report["passes"]] == list(range(1, 9))


def test_validate_rejects_infeasible_hops():
    program = {
        "intent_id": "py-hops",
        "flow_selectors": [{"src_node": 5, "dst_node": 305}],
        "hard_constraints": [
            {"type": "max_hops", "target": "flow_selector:0", "value": 3}],
        "priority": "medium",
        "fallback_policy": "report_unsat_core",
    }
    report = ir.validate(program, fallback=True)
    assert report["outcome"] == "reject"
    assert report["resolution"]["kind"] == "unsat_core"
    assert report["resolution"]["unsat_core"] == [0]


def test_structural_error_names_the_field():
    bad = dict(ACCEPT, priority="urgent")
    report = ir.validate(bad)
    assert report["outcome"] == "reject"
    assert any(e.startswith("priority") for e in report["errors"])


def test_ground_and_route():
    g = ir.ground(ACCEPT)
    assert g["masked_nodes"] == 20
    r = ir.route(10, 30, program=ACCEPT)
    assert r["reachable"] and r["path"][0] == 10 and r["path"][-1] == 30
    assert r["violations"] == []
    with pytest.raises(ir.EndpointError):
        ir.route(140, 30, program=ACCEPT)


def test_compile_rule_and_mock():
    out = ir.compile_intent("Disable node 142.")
    assert out["compiled"]
    assert out["program"]["hard_constraints"][0]["target"] == "node:142"
    mock = ir.compile_intent("x", backend="mock",
                             script=["no json", '{"intent_id":"m","hard_constraints":[],"priority":"low"}'])
    assert mock["compiled"] and mock["attempts"] == 2


def test_snapshot_and_custom_topology():
    s = ir.snapshot()
    assert len(s["nodes"]) == 400 and len(s["edges"]) == 800
    small = ir.snapshot(topology={"planes": 4, "sats_per_plane": 5})
    assert len(small["edges"]) == 40
    with pytest.raises(ir.ConfigError):
        ir.snapshot(topology={"planes": 0})


def test_audits():
    audit = ir.corruption_audit(n=2, seed=1)
    assert audit["detection_rate"] == 1.0
    assert audit["schema_version"] == ir.RESULTS_SCHEMA_VERSION
    adv = ir.adversarial()
    assert adv["flagged"] == adv["total"] == 15
    assert all(case["outcome"] != "accept" for case in adv["cases"])
    conf = ir.confusion()
    assert conf["unsafe_accepts"] == 0
    assert conf["categories"]["infeasible"]["reject"] == 6
    assert len(ir.benchmark()) == 40


def test_latitude_edge_removal_is_monotone():
    # Lower thresholds cut at least as many inter-plane links.
    rows = ir.latitude_edge_removal([30, 45, 60], snapshots=4)
    means = [r["mean_fraction"] for r in rows["rows"]]
    assert means == sorted(means, reverse=True)
