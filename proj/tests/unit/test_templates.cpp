#include "doctest.h"

#include "deskcloud/core/error.hpp"
#include "deskcloud/templates/template_store.hpp"
#include "support/gen.hpp"

using namespace deskcloud;

namespace {

Template make(const std::string& id, const std::string& name, std::optional<Id> project = std::nullopt) {
  Template t;
  t.id = Id{id};
  t.name = name;
  t.owner_user_id = Id{"U"};
  t.project_id = project;
  t.origin = project ? TemplateOrigin::user_built : TemplateOrigin::preconfigured;
  t.software_stack = {"base"};
  t.default_spec = {16, 128, 2048, 7};
  return t;
}

}  // namespace

TEST_SUITE("templates") {
  TEST_CASE("overrides only lower the defaults") {
    const ResourceSpec d{16, 128, 2048, 7};
    CHECK(merge(d, {}) == d);
    CHECK(merge(d, {4, std::nullopt, 100, std::nullopt}) == ResourceSpec{4, 128, 100, 7});
    CHECK_THROWS_AS(merge(d, {17, std::nullopt, std::nullopt, std::nullopt}), Error);
    CHECK_THROWS_AS(merge(d, {0, std::nullopt, std::nullopt, std::nullopt}), Error);
    CHECK_THROWS_AS(merge(d, {std::nullopt, std::nullopt, std::nullopt, 8}), Error);
  }

  TEST_CASE("names are unique per project scope") {
    TemplateStore s;
    s.add(make("T1", "web"));
    CHECK_THROWS_AS(s.add(make("T2", "web")), Error);
    s.add(make("T2", "web", Id{"P"}));
    s.add(make("T3", "web", Id{"Q"}));
    CHECK_THROWS_AS(s.add(make("T4", "web", Id{"Q"})), Error);
    Template bare = make("T5", "bare");
    bare.software_stack.clear();
    CHECK_THROWS_AS(s.add(bare), Error);
  }

  TEST_CASE("instances copy the merged spec and ignore later edits") {
    TemplateStore s;
    s.add(make("T1", "table"));
    IdGenerator ids(1);
    const auto batch = s.instantiate(Id{"T1"}, 3, Id{"F"}, {}, Id{"U"}, ids, sim_time_ms(10));
    REQUIRE(batch.size() == 3);
    for (const auto& i : batch) {
      CHECK(i.spec == ResourceSpec{16, 128, 2048, 7});
      CHECK(i.state == LifecycleState::Requested);
      CHECK(i.template_id == Id{"T1"});
      CHECK(i.farm_id == Id{"F"});
    }
    s.update_spec(Id{"T1"}, {1, 1, 1, 1});
    CHECK(batch[0].spec == ResourceSpec{16, 128, 2048, 7});
    CHECK(s.get(Id{"T1"}).default_spec == ResourceSpec{1, 1, 1, 1});
    CHECK_THROWS_AS(s.instantiate(Id{"nope"}, 1, Id{"F"}, {}, Id{"U"}, ids, sim_time_ms(0)), Error);
  }

  TEST_CASE("property: any lowering override yields exactly the override") {
    testing::Gen g(21);
    const ResourceSpec d{16, 128, 2048, 7};
    for (int i = 0; i < 1000; ++i) {
      SpecOverride o;
      if (g.coin()) o.vcpu = g.irange(1, 16);
      if (g.coin()) o.memory_gib = g.range(1, 128);
      if (g.coin()) o.disk_gib = g.range(1, 2048);
      if (g.coin()) o.network_count = g.irange(1, 7);
      const ResourceSpec m = merge(d, o);
      CHECK(m.vcpu == o.vcpu.value_or(d.vcpu));
      CHECK(m.memory_gib == o.memory_gib.value_or(d.memory_gib));
      CHECK(m.disk_gib == o.disk_gib.value_or(d.disk_gib));
      CHECK(m.network_count == o.network_count.value_or(d.network_count));
    }
  }

  TEST_CASE("template json round trip") {
    TemplateStore s;
    s.add(make("T1", "a"));
    s.add(make("T2", "b", Id{"P"}));
    s.set_published(Id{"T1"}, true);
    Json j = s;
    TemplateStore t = j.get<TemplateStore>();
    CHECK(Json(t) == j);
    CHECK(t.get(Id{"T1"}).published);
  }
}
