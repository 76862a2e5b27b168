#include "doctest.h"

#include "deskcloud/core/error.hpp"
#include "deskcloud/farm/farm.hpp"

using namespace deskcloud;

TEST_SUITE("farm") {
  TEST_CASE("vlans are the lowest free ids per site") {
    std::map<Id, Farm> farms;
    Farm a;
    a.id = Id{"FA"};
    a.primary_site = Id{"S1"};
    a.vlan_ids = {100, 101, 103};
    farms[a.id] = a;
    Farm b;
    b.id = Id{"FB"};
    b.primary_site = Id{"S2"};
    b.vlan_ids = {100};
    b.dr = DrPair{Id{"S1"}, Id{"P"}, {}};
    b.vlan_ids.insert(104);
    farms[b.id] = b;
    CHECK(allocate_vlans(farms, Id{"S1"}, 2, {}) == std::vector<int>{102, 105});
    CHECK(allocate_vlans(farms, Id{"S1"}, 1, {102}) == std::vector<int>{105});
    CHECK(allocate_vlans(farms, Id{"S3"}, 3, {}) == std::vector<int>{100, 101, 102});
    CHECK_THROWS_AS(allocate_vlans({}, Id{"S1"}, 4000, {}), Error);
    CHECK(allocate_vlans({}, Id{"S1"}, 3995, {}).back() == 4094);
  }

  TEST_CASE("quota validation") {
    validate(FarmQuota{0, 0, 0, 0});
    CHECK_THROWS_AS(validate(FarmQuota{-1, 0, 0, 0}), Error);
    CHECK_THROWS_AS(validate(FarmQuota{0, 0, 0, -5}), Error);
  }

  TEST_CASE("remote access endpoints follow the enabled channels") {
    const RemoteAccess r = make_remote_access(Id{"I1"}, true, false, true);
    CHECK(r.endpoints.size() == 2);
    CHECK(r.endpoints.at("agent") == "agent://I1");
    CHECK(r.endpoints.at("desktop") == "desktop://I1");
    CHECK(make_remote_access(Id{"I1"}, false, true, false).endpoints.at("vdi") == "vdi://I1:3389");
  }

  TEST_CASE("farm json round trip") {
    Farm f;
    f.id = Id{"F"};
    f.name = "f";
    f.project_id = Id{"P"};
    f.site_id = f.primary_site = Id{"S"};
    f.pool_id = f.primary_pool = Id{"PL"};
    f.quota = {2, 10, 5, 50};
    f.vlan_ids = {100};
    f.delta_seq = 7;
    f.replicated_seq = 5;
    f.dr = DrPair{Id{"S2"}, Id{"PL2"}, {Id{"H9"}}};
    Json j = f;
    Farm g = j.get<Farm>();
    CHECK(Json(g) == j);
    CHECK(g.replication_lag() == 2);
  }
}
