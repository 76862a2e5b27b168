import json
import os

import pytest

import deskcloud

SOURCE_DIR = os.environ.get("DESKCLOUD_SOURCE_DIR", os.path.join(os.path.dirname(__file__), "..", ".."))


def build_world(cp):
    site = cp.submit_system("site.create", {"name": "dc", "role": "primary"})["id"]
    pool = cp.submit_system("pool.create", {"name": "p", "site_id": site})["id"]
    for i in range(2):
        cp.submit_system("host.add", {"pool_id": pool, "name": f"h{i}", "vcpu": 16, "memory_gib": 64, "disk_gib": 500})
    project = cp.submit_system("project.create", {"name": "alpha"})["id"]
    tmpl = cp.submit_system(
        "template.register",
        {"name": "t2", "spec": {"vcpu": 16, "memory_gib": 32, "disk_gib": 200, "network_count": 7}},
    )["id"]
    farm = cp.submit_system(
        "farm.create",
        {
            "name": "f",
            "project_id": project,
            "pool_id": pool,
            "network_cidr": "10.9.0.0/24",
            "quota": {"max_hosts": 2, "max_instances": 10, "object_quota_gib": 1, "block_quota_gib": 10},
        },
    )["id"]
    return farm, tmpl


def test_provision_and_digest():
    cp = deskcloud.ControlPlane()
    farm, tmpl = build_world(cp)
    token = cp.login("admin", "admin")["token"]
    out = cp.submit("instance.provision", {"farm_id": farm, "template_id": tmpl, "count": 2}, token)
    assert len(out["instances"]) == 2
    for inst in out["instances"]:
        assert inst["spec"] == {"vcpu": 16, "memory_gib": 32, "disk_gib": 200, "network_count": 7}
        assert inst["state"] == "Running"
    assert cp.violations() == []
    assert cp.replay_digest() == cp.digest()
    assert len(cp.query("instances", {}, token)) == 2


def test_errors_carry_codes():
    cp = deskcloud.ControlPlane()
    farm, tmpl = build_world(cp)
    with pytest.raises(deskcloud.DeskcloudError) as info:
        cp.submit("instance.provision", {"farm_id": farm, "template_id": tmpl, "count": 1}, "bogus")
    assert info.value.code == "Unauthorized"
    before = cp.digest()
    with pytest.raises(deskcloud.DeskcloudError) as info:
        cp.submit_system("instance.provision", {"farm_id": farm, "template_id": tmpl, "count": 5})
    assert info.value.code == "CapacityExhausted"
    assert cp.digest() == before


def test_config_is_applied():
    cp = deskcloud.ControlPlane({"heartbeat.miss_limit": 5, "seed": 3})
    assert cp.state()["mutation_sequence"] >= 1
    with pytest.raises(deskcloud.DeskcloudError):
        deskcloud.ControlPlane({"no.such.key": 1})


def test_scenario_is_deterministic():
    with open(os.path.join(SOURCE_DIR, "scenarios", "dr_failover.json")) as f:
        doc = json.load(f)
    a = deskcloud.run_scenario(doc)
    b = deskcloud.run_scenario(doc)
    assert a["digest"] == b["digest"]
    assert a["violations"] == []
    assert len(a["failovers"]) >= 1
    assert deskcloud.run_scenario(doc, seed=99)["digest"] != a["digest"]
