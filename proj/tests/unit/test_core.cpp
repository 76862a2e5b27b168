#include <map>
#include <set>

#include "doctest.h"

#include "deskcloud/core/error.hpp"
#include "deskcloud/core/hash.hpp"
#include "deskcloud/core/id.hpp"
#include "deskcloud/core/lifecycle.hpp"
#include "support/gen.hpp"

using namespace deskcloud;

TEST_SUITE("core") {
  TEST_CASE("error codes map onto HTTP statuses") {
    CHECK(http_status(ErrorCode::Unauthorized) == 401);
    CHECK(http_status(ErrorCode::BadCredential) == 401);
    CHECK(http_status(ErrorCode::Forbidden) == 403);
    CHECK(http_status(ErrorCode::NotFound) == 404);
    CHECK(http_status(ErrorCode::IllegalTransition) == 409);
    CHECK(http_status(ErrorCode::Conflict) == 409);
    CHECK(http_status(ErrorCode::QuotaExceeded) == 422);
    CHECK(http_status(ErrorCode::CapacityExhausted) == 422);
    CHECK(http_status(ErrorCode::QuorumUnavailable) == 503);
    CHECK(http_status(ErrorCode::MalformedCommand) == 400);
    CHECK(http_status(ErrorCode::CorruptSnapshot) == 500);
    CHECK(to_string(ErrorCode::PoolExhausted) == "PoolExhausted");
  }

  TEST_CASE("hash known vectors") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(crc32_of("123456789") == 0xCBF43926u);
    CHECK(stable_hash64("ring") == stable_hash64("ring"));
    CHECK(stable_hash64("ring") != stable_hash64("rinh"));
  }

  TEST_CASE("ids are well formed, ordered and reproducible") {
    IdGenerator a(7), b(7), c(8);
    std::vector<Id> seen;
    for (int i = 0; i < 200; ++i) {
      const SimTime t = sim_time_ms(i / 10);
      const Id x = a.next(t);
      CHECK(x == b.next(t));
      CHECK(x != c.next(t));
      CHECK(is_well_formed_id(x.value));
      CHECK(x.value.size() == kIdLength);
      if (!seen.empty()) CHECK(seen.back() < x);
      seen.push_back(x);
    }
    IdGenerator d(7);
    d.restore(a.state());
    CHECK(d.next(sim_time_ms(50)) == a.next(sim_time_ms(50)));
    CHECK_FALSE(is_well_formed_id("short"));
  }

  TEST_CASE("lifecycle edge set matches the declared table exactly") {
    using S = LifecycleState;
    using E = LifecycleEvent;
    const std::map<std::pair<S, E>, S> truth{
        {{S::Requested, E::attribute}, S::Attributed}, {{S::Attributed, E::start}, S::Running},
        {{S::Running, E::migrate_begin}, S::Migrating}, {{S::Migrating, E::migrate_end}, S::Running},
        {{S::Running, E::stop}, S::Stopped},            {{S::Running, E::fail}, S::Failed},
        {{S::Migrating, E::fail}, S::Failed},           {{S::Stopped, E::destroy}, S::Destroyed},
        {{S::Failed, E::destroy}, S::Destroyed},        {{S::Stopped, E::start}, S::Running},
    };
    CHECK(lifecycle_edges().size() == truth.size());
    const S states[] = {S::Requested, S::Attributed, S::Running, S::Migrating, S::Stopped, S::Failed, S::Destroyed};
    const E events[] = {E::attribute, E::start, E::migrate_begin, E::migrate_end, E::stop, E::fail, E::destroy};
    for (S s : states)
      for (E e : events) {
        auto it = truth.find({s, e});
        const auto got = next_state(s, e);
        if (it == truth.end()) {
          CHECK_FALSE(got.has_value());
          Instance inst;
          inst.state = s;
          CHECK_THROWS_AS(transition(inst, e), Error);
        } else {
          REQUIRE(got.has_value());
          CHECK(*got == it->second);
        }
      }
  }

  TEST_CASE("transition maintains host binding and ever_started") {
    Instance i;
    i = transition(i, LifecycleEvent::attribute);
    i = transition(i, LifecycleEvent::start);
    i.host_id = Id{"h1"};
    CHECK(i.ever_started);
    i = transition(i, LifecycleEvent::stop);
    CHECK_FALSE(i.host_id.has_value());
    CHECK(i.ever_started);
    try {
      (void)transition(i, LifecycleEvent::migrate_begin);
      FAIL("expected IllegalTransition");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IllegalTransition);
    }
  }

  TEST_CASE("random walks only ever follow declared edges") {
    testing::Gen g(11);
    const LifecycleEvent events[] = {LifecycleEvent::attribute, LifecycleEvent::start, LifecycleEvent::migrate_begin,
                                     LifecycleEvent::migrate_end, LifecycleEvent::stop, LifecycleEvent::fail,
                                     LifecycleEvent::destroy};
    for (int walk = 0; walk < 200; ++walk) {
      Instance i;
      for (int step = 0; step < 30; ++step) {
        const auto e = events[g.irange(0, 6)];
        const auto before = i.state;
        if (next_state(before, e)) {
          i = transition(i, e);
          bool declared = false;
          for (const auto& edge : lifecycle_edges()) declared |= edge.from == before && edge.event == e && edge.to == i.state;
          CHECK(declared);
        } else {
          CHECK_THROWS(transition(i, e));
          CHECK(i.state == before);
        }
      }
    }
  }
}
