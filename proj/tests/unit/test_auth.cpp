#include "doctest.h"

#include "deskcloud/auth/rbac.hpp"
#include "deskcloud/core/error.hpp"
#include "support/gen.hpp"

using namespace deskcloud;

namespace {

const std::set<Surface> kAll(kAllSurfaces.begin(), kAllSurfaces.end());

AuthRegistry registry() {
  AuthRegistry r;
  r.add_project(Id{"P"}, "alpha");
  r.add_project(Id{"Q"}, "beta");
  r.add_user(Id{"A"}, "root", Role::admin, "root-pw", {}, "s1");
  r.add_user(Id{"U"}, "ursula", Role::user, "u-pw", {Id{"P"}}, "s2");
  return r;
}

}  // namespace

TEST_SUITE("auth") {
  TEST_CASE("credentials are salted digests, never plaintext") {
    AuthRegistry r = registry();
    const User& u = r.user(Id{"U"});
    CHECK(u.credential_hash == credential_digest("s2", "u-pw"));
    CHECK(u.credential_hash != credential_digest("s1", "u-pw"));
    CHECK(u.credential_hash.find("u-pw") == std::string::npos);
    CHECK(public_view(u).dump().find(u.credential_hash) == std::string::npos);
  }

  TEST_CASE("authenticate distinguishes unknown users and bad credentials") {
    AuthRegistry r = registry();
    try {
      r.authenticate("nobody", "x", kAll, sim_time_ms(0), Duration{1000}, "t0");
      FAIL("expected UnknownUser");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownUser);
    }
    try {
      r.authenticate("ursula", "wrong", kAll, sim_time_ms(0), Duration{1000}, "t0");
      FAIL("expected BadCredential");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadCredential);
    }
    CHECK(r.tokens().empty());
    const AuthToken& t = r.authenticate("ursula", "u-pw", kAll, sim_time_ms(0), Duration{1000}, "t1");
    CHECK(t.user_id == Id{"U"});
  }

  TEST_CASE("tokens expire exactly at expires_at") {
    AuthRegistry r = registry();
    r.authenticate("ursula", "u-pw", kAll, sim_time_ms(100), Duration{1000}, "t1");
    CHECK(r.resolve("t1", sim_time_ms(1099)).user_id == Id{"U"});
    CHECK_THROWS_AS(r.resolve("t1", sim_time_ms(1100)), Error);
    CHECK_THROWS_AS(r.resolve("nope", sim_time_ms(0)), Error);
    r.purge_expired(sim_time_ms(1100));
    CHECK(r.find_token("t1") == nullptr);
  }

  TEST_CASE("truth table: role x surface x action x ownership") {
    AuthRegistry r = registry();
    const AuthToken& admin = r.authenticate("root", "root-pw", kAll, sim_time_ms(0), Duration{10000}, "ta");
    const AuthToken& user = r.authenticate("ursula", "u-pw", kAll, sim_time_ms(0), Duration{10000}, "tu");
    const ResourceOwner own{Id{"P"}, Id{"U"}};
    const ResourceOwner other{Id{"Q"}, Id{"A"}};
    int cells = 0;
    for (Role role : {Role::admin, Role::user})
      for (Surface s : kAllSurfaces)
        for (Action a : {Action::view, Action::modify})
          for (bool mine : {true, false}) {
            ++cells;
            const bool expect_allow = role == Role::admin || a == Action::view || mine;
            const AuthToken& t = role == Role::admin ? admin : user;
            const User& u = r.user(t.user_id);
            CAPTURE(cells);
            CHECK((check_access(t, u, sim_time_ms(5), s, a, mine ? own : other) == Decision::allow) == expect_allow);
          }
    CHECK(cells == 32);
  }

  TEST_CASE("modify needs both project membership and creatorship") {
    AuthRegistry r = registry();
    const AuthToken& t = r.authenticate("ursula", "u-pw", kAll, sim_time_ms(0), Duration{10000}, "tu");
    const User& u = r.user(Id{"U"});
    CHECK(check_access(t, u, sim_time_ms(1), Surface::storage, Action::modify, {Id{"P"}, Id{"A"}}) == Decision::deny);
    CHECK(check_access(t, u, sim_time_ms(1), Surface::storage, Action::modify, {Id{"Q"}, Id{"U"}}) == Decision::deny);
    CHECK(check_access(t, u, sim_time_ms(1), Surface::storage, Action::modify, {Id{"P"}, std::nullopt}) == Decision::deny);
  }

  TEST_CASE("a token only opens the surfaces it was issued for") {
    AuthRegistry r = registry();
    const AuthToken& t = r.authenticate("root", "root-pw", {Surface::image}, sim_time_ms(0), Duration{10000}, "ta");
    const User& u = r.user(Id{"A"});
    CHECK(check_access(t, u, sim_time_ms(1), Surface::image, Action::modify, {}) == Decision::allow);
    CHECK(check_access(t, u, sim_time_ms(1), Surface::framework, Action::view, {}) == Decision::deny);
    CHECK(check_access(t, u, sim_time_ms(10000), Surface::image, Action::view, {}) == Decision::deny);
  }

  TEST_CASE("property: random owners agree with the rule") {
    AuthRegistry r = registry();
    const AuthToken& t = r.authenticate("ursula", "u-pw", kAll, sim_time_ms(0), Duration{10000}, "tu");
    const User& u = r.user(Id{"U"});
    testing::Gen g(8);
    const std::vector<Id> projects{Id{"P"}, Id{"Q"}};
    const std::vector<Id> creators{Id{"U"}, Id{"A"}};
    for (int i = 0; i < 1000; ++i) {
      ResourceOwner o;
      if (g.coin(0.8)) o.project_id = g.pick(projects);
      if (g.coin(0.8)) o.creator = g.pick(creators);
      const Action a = g.coin() ? Action::view : Action::modify;
      const bool expect = a == Action::view || (o.project_id == Id{"P"} && o.creator == Id{"U"});
      CHECK((check_access(t, u, sim_time_ms(g.irange(0, 9999)), kAllSurfaces[static_cast<std::size_t>(g.irange(0, 3))], a, o) ==
             Decision::allow) == expect);
    }
  }
}
