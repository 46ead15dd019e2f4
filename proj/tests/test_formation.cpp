#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lawn/formation.hpp"
#include "lawn/rng.hpp"
#include "oracles.hpp"

using namespace lawn;
using formation::FormationConfig;
using formation::UavState;
using formation::Vec2;

namespace {

std::vector<UavState> states_at(const std::vector<Vec2>& positions) {
  std::vector<UavState> out;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    UavState s;
    s.id = static_cast<int>(i);
    s.pos = positions[i];
    out.push_back(s);
  }
  return out;
}

FormationConfig small_cfg(int m) {
  FormationConfig cfg;
  cfg.m = m;
  return cfg;
}

}  // namespace

TEST_CASE("leader is the UAV with the smallest y, ties by id") {
  auto st = states_at({{0, 3}, {0, 1}, {0, 2}});
  CHECK(formation::select_leader(st) == 1);
  st = states_at({{0, 5}, {1, 5}, {2, 5}});
  CHECK(formation::select_leader(st) == 0);
}

TEST_CASE("weighted-distance reference prefers the candidate ahead") {
  // me at the origin; candidates directly ahead and diagonally ahead at
  // the same Euclidean distance
  const auto st = states_at({{0, 0}, {0, -1}, {0.5, -std::sqrt(3.0) / 2.0}});
  const auto ref = formation::find_reference(0, st, 1.0 / 3.0);
  REQUIRE(ref.has_value());
  CHECK(*ref == 1);
}

TEST_CASE("two UAVs: the one behind follows the other") {
  const auto st = states_at({{0, 0}, {0.3, 2.0}});
  const auto ref = formation::find_reference(1, st, 1.0 / 3.0);
  REQUIRE(ref.has_value());
  CHECK(*ref == 0);
  CHECK_FALSE(formation::find_reference(0, st, 1.0 / 3.0).has_value());
}

TEST_CASE("neighbor sets") {
  auto st = states_at({{0, 0}, {1, 0}, {2, 0}});
  CHECK(formation::neighbor_set(1, st).size() == 3);

  st = states_at({{0, 0}, {1, 0}, {2, 0}, {10, 0}});
  const auto n = formation::neighbor_set(1, st);
  REQUIRE(n.size() == 3);
  CHECK(n[0] == 1);
  CHECK(n[1] == 0);
  CHECK(n[2] == 2);
}

TEST_CASE("neighbor set matches the brute-force nearest-two oracle") {
  const CounterRng rng(21);
  std::vector<Vec2> pos;
  for (int i = 0; i < 19; ++i)
    pos.emplace_back(rng.uniform(-5.0, 5.0, 0, i), rng.uniform(-5.0, 5.0, 1, i));
  const auto st = states_at(pos);
  for (int me = 0; me < 19; ++me) {
    const auto got = formation::neighbor_set(me, st);
    // exhaustive scan
    std::vector<std::pair<double, int>> dist;
    for (int o = 0; o < 19; ++o)
      if (o != me) dist.push_back({(pos[o] - pos[me]).squaredNorm(), o});
    std::sort(dist.begin(), dist.end());
    REQUIRE(got.size() == 3);
    CHECK(got[0] == me);
    CHECK(got[1] == dist[0].second);
    CHECK(got[2] == dist[1].second);
  }
}

TEST_CASE("upwash observation identities") {
  const aero::AeroParams p;
  FormationConfig cfg = small_cfg(3);
  cfg.sigma_obs2 = 0.0;
  const CounterRng rng(3);

  auto st = states_at({{0, 0}, {0.9, 1.0}, {-0.9, 1.0}});
  // make the estimate zero and force u_max to the current total
  for (auto& s : st) s.est = Vec2::Zero();
  std::vector<Vec2> pos = {st[0].pos, st[1].pos, st[2].pos};
  const double u1 = aero::total_upwash(1, pos, p);
  st[1].u_max = u1;
  auto obs = formation::observe_upwash(1, st, p, cfg, rng, 0);
  CHECK(obs.d == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(st[1].u_max == doctest::Approx(u1));

  // noise-free identity for a nonzero estimate
  st[2].est = Vec2(0.4, 0.8);
  obs = formation::observe_upwash(2, st, p, cfg, rng, 0);
  CHECK(obs.d - obs.f.dot(st[2].est) ==
        doctest::Approx(st[2].u_max - obs.u_tot).epsilon(1e-12));

  // the leader has no observation model
  CHECK_THROWS_AS(formation::observe_upwash(0, st, p, cfg, rng, 0),
                  std::logic_error);
}

TEST_CASE("seeded observations are reproducible") {
  const aero::AeroParams p;
  FormationConfig cfg = small_cfg(3);
  cfg.sigma_obs2 = 1e-4;
  auto st1 = states_at({{0, 0}, {0.9, 1.0}, {-0.9, 1.0}});
  auto st2 = st1;
  const CounterRng rng_a(77), rng_b(77);
  const auto a = formation::observe_upwash(1, st1, p, cfg, rng_a, 5);
  const auto b = formation::observe_upwash(1, st2, p, cfg, rng_b, 5);
  CHECK(a.d == b.d);
  CHECK(a.f == b.f);
}

TEST_CASE("adapt step") {
  FormationConfig cfg = small_cfg(3);
  cfg.step = 2e-3;
  UavState me;
  me.est = Vec2(0.5, 0.5);

  formation::Observation obs;
  obs.f = Vec2::Zero();
  obs.d = 3.0;
  CHECK(formation::adapt(me, false, obs, cfg) == me.est);

  obs.f = Vec2(1.0, 2.0);
  obs.d = obs.f.dot(me.est);
  CHECK(formation::adapt(me, false, obs, cfg) == me.est);

  me.est = Vec2::Zero();
  obs.f = Vec2(1.0, 1.0);
  obs.d = 1.0;
  const Vec2 psi = formation::adapt(me, false, obs, cfg);
  CHECK(psi.x() == doctest::Approx(0.002));
  CHECK(psi.y() == doctest::Approx(0.002));

  // leaders keep their estimate regardless of the observation
  me.est = Vec2(0.7, 0.9);
  CHECK(formation::adapt(me, true, obs, cfg) == me.est);
}

TEST_CASE("combine step") {
  const std::vector<Vec2> psis = {Vec2(0, 0), Vec2(3, 0), Vec2(0, 3)};
  const Vec2 v = formation::combine(psis, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  CHECK(v.x() == doctest::Approx(1.0));
  CHECK(v.y() == doctest::Approx(1.0));

  CHECK(formation::combine(psis, {1.0, 0.0, 0.0}) == psis[0]);

  const std::vector<Vec2> same = {Vec2(2, 1), Vec2(2, 1), Vec2(2, 1)};
  const Vec2 fixed = formation::combine(same, {0.2, 0.5, 0.3});
  CHECK(fixed.x() == doctest::Approx(2.0));
  CHECK(fixed.y() == doctest::Approx(1.0));

  CHECK_THROWS(formation::combine(psis, {0.5, 0.5, 0.5}));
  CHECK_THROWS(formation::combine(psis, {0.5, 0.5}));
}

TEST_CASE("motion model blends toward the commanded offset") {
  const CounterRng rng(4);
  FormationConfig cfg = small_cfg(2);
  cfg.sigma_x2 = cfg.sigma_y2 = 0.0;
  cfg.v0 = 5.0;
  cfg.dt = 0.05;

  UavState me;
  me.pos = Vec2(1.0, 2.0);
  me.lambda = -1;
  const Vec2 ref(0.0, 1.0);
  const Vec2 dz(0.9, 1.0);

  // near-unit blend: pure advection
  cfg.theta_mix = 1.0 - 1e-12;
  Vec2 next = formation::step_motion(me, false, ref, dz, cfg, rng, 0);
  CHECK(next.x() == doctest::Approx(me.pos.x()).epsilon(1e-9));
  CHECK(next.y() == doctest::Approx(me.pos.y() - 0.25).epsilon(1e-9));

  // near-zero blend: jump to the commanded offset
  cfg.theta_mix = 1e-12;
  next = formation::step_motion(me, false, ref, dz, cfg, rng, 0);
  CHECK(next.x() == doctest::Approx(ref.x() + me.lambda * dz.x()).epsilon(1e-9));
  CHECK(next.y() == doctest::Approx(ref.y() + dz.y() - 0.25).epsilon(1e-9));

  // leader advection
  cfg.theta_mix = 0.5;
  next = formation::step_motion(me, true, std::nullopt, dz, cfg, rng, 0);
  CHECK(next.x() == me.pos.x());
  CHECK(next.y() == doctest::Approx(me.pos.y() - 0.25));

  // follower without a reference is a contract violation
  CHECK_THROWS_AS(
      formation::step_motion(me, false, std::nullopt, dz, cfg, rng, 0),
      std::logic_error);
}

TEST_CASE("initialization respects the layout recipe") {
  const aero::AeroParams p;
  FormationConfig cfg = small_cfg(19);
  cfg.center = Vec2(20.0, 50.0);
  const auto st = formation::init_formation(cfg, p, 9);
  REQUIRE(st.size() == 19);
  for (const auto& s : st) {
    CHECK(std::abs(s.pos.x() - 20.0) <= 19.0 * p.beta / 4.0 + 1e-12);
    CHECK(s.pos.y() >= 50.0 - 1e-12);
    CHECK(s.pos.y() <= 50.0 + 19.0 * p.beta / 2.0 + 1e-12);
    CHECK((s.lambda == 1 || s.lambda == -1));
    CHECK(s.est == Vec2(p.beta, p.beta));
    CHECK(s.u_max == 0.0);
  }
  for (std::size_t i = 0; i < st.size(); ++i)
    for (std::size_t j = i + 1; j < st.size(); ++j)
      CHECK((st[i].pos - st[j].pos).norm() >= 0.2 * p.beta);
}

TEST_CASE("single UAV formation advects") {
  const aero::AeroParams p;
  FormationConfig cfg = small_cfg(1);
  cfg.sigma_x2 = cfg.sigma_y2 = cfg.sigma_obs2 = 0.0;
  std::vector<UavState> init(1);
  init[0].pos = Vec2(3.0, 7.0);
  const auto trace = formation::run_formation(cfg, p, init, 10, 1);
  REQUIRE(trace.n_slots() == 10);
  for (int n = 0; n < 10; ++n) {
    const auto& s = trace.slots[static_cast<std::size_t>(n)].states[0];
    CHECK(s.pos.x() == doctest::Approx(3.0));
    CHECK(s.pos.y() == doctest::Approx(7.0 - 0.25 * n));
  }
}

TEST_CASE("traces are deterministic and identical across execution modes") {
  const aero::AeroParams p;
  FormationConfig cfg = small_cfg(9);
  cfg.center = Vec2(100.0, 50.0);
  const auto init = formation::init_formation(cfg, p, 13);

  const auto t1 = formation::run_formation(cfg, p, init, 60, 13, true);
  const auto t2 = formation::run_formation(cfg, p, init, 60, 13, true);
  const auto t3 = formation::run_formation(cfg, p, init, 60, 13, false);

  REQUIRE(t1.n_slots() == t2.n_slots());
  REQUIRE(t1.n_slots() == t3.n_slots());
  for (int n = 0; n < t1.n_slots(); ++n) {
    const auto& a = t1.slots[static_cast<std::size_t>(n)];
    const auto& b = t2.slots[static_cast<std::size_t>(n)];
    const auto& c = t3.slots[static_cast<std::size_t>(n)];
    CHECK(a.leader == b.leader);
    CHECK(a.leader == c.leader);
    for (std::size_t i = 0; i < a.states.size(); ++i) {
      CHECK(a.states[i].pos == b.states[i].pos);
      CHECK(a.states[i].pos == c.states[i].pos);
      CHECK(a.states[i].est == c.states[i].est);
      CHECK(a.u_tot[i] == c.u_tot[i]);
    }
  }
}

TEST_CASE("per-slot invariants over a seeded run") {
  const aero::AeroParams p;
  FormationConfig cfg = small_cfg(9);
  cfg.center = Vec2(100.0, 50.0);
  const auto init = formation::init_formation(cfg, p, 5);
  const auto trace = formation::run_formation(cfg, p, init, 80, 5);

  std::vector<double> prev_umax(9, -1e300);
  for (const auto& snap : trace.slots) {
    // elected leader has the globally smallest y
    double min_y = 1e300;
    for (const auto& s : snap.states) min_y = std::min(min_y, s.pos.y());
    CHECK(snap.states[static_cast<std::size_t>(snap.leader)].pos.y() ==
          doctest::Approx(min_y));
    // every non-leader found a reference
    for (std::size_t i = 0; i < snap.states.size(); ++i) {
      if (static_cast<int>(i) == snap.leader) continue;
      CHECK(snap.ref[i] >= 0);
    }
    // u_max never decreases
    for (std::size_t i = 0; i < snap.states.size(); ++i) {
      CHECK(snap.states[i].u_max >= prev_umax[i] - 1e-15);
      prev_umax[i] = snap.states[i].u_max;
    }
  }
}

TEST_CASE("noise-free follower error is eventually non-increasing") {
  const aero::AeroParams p;
  FormationConfig cfg = small_cfg(2);
  cfg.sigma_x2 = cfg.sigma_y2 = cfg.sigma_obs2 = 0.0;
  std::vector<UavState> init(2);
  init[0].id = 0;
  init[0].pos = Vec2(0.0, 0.0);
  init[1].id = 1;
  init[1].pos = Vec2(0.7, 1.6);
  init[1].lambda = 1;
  init[1].est = Vec2(p.beta, p.beta);

  const auto trace = formation::run_formation(cfg, p, init, 240, 2);
  const auto opt = aero::argmax_avg_upwash(p);

  std::vector<double> err;
  for (const auto& snap : trace.slots) {
    const Vec2 off = snap.states[1].pos - snap.states[0].pos;
    err.push_back(std::min((off - opt.pos).norm(),
                           (off - Vec2(-opt.pos.x(), opt.pos.y())).norm()));
  }
  // window-averaged error after the transient
  const int w = 20;
  double prev = 1e300;
  for (std::size_t start = 40; start + w <= err.size(); start += w) {
    double mean = 0.0;
    for (int i = 0; i < w; ++i) mean += err[start + i];
    mean /= w;
    CHECK(mean <= prev + 1e-9);
    prev = mean;
  }
}

TEST_CASE("v-shape score is zero on a perfect V and positive on a cloud") {
  const aero::AeroParams p;
  const auto opt = aero::argmax_avg_upwash(p);
  std::vector<UavState> v;
  UavState apex;
  apex.id = 0;
  apex.pos = Vec2(0, 0);
  v.push_back(apex);
  for (int i = 1; i <= 3; ++i) {
    UavState l, r;
    l.id = 2 * i - 1;
    l.pos = Vec2(-opt.pos.x() * i, opt.pos.y() * i);
    r.id = 2 * i;
    r.pos = Vec2(opt.pos.x() * i, opt.pos.y() * i);
    v.push_back(l);
    v.push_back(r);
  }
  CHECK(formation::v_shape_score(v, opt.pos, 1.0 / 3.0) ==
        doctest::Approx(0.0).epsilon(1e-9));

  const CounterRng rng(31);
  std::vector<UavState> cloud;
  for (int i = 0; i < 9; ++i) {
    UavState s;
    s.id = i;
    s.pos = Vec2(rng.uniform(-4.0, 4.0, 0, i), rng.uniform(0.0, 4.0, 1, i));
    cloud.push_back(s);
  }
  CHECK(formation::v_shape_score(cloud, opt.pos, 1.0 / 3.0) > 0.0);
}

TEST_CASE("nine UAVs settle into a V within five simulated seconds") {
  const aero::AeroParams p;
  FormationConfig cfg = small_cfg(9);
  cfg.center = Vec2(100.0, 50.0);
  const auto opt = aero::argmax_avg_upwash(p);
  const auto init = formation::init_formation(cfg, p, 42);
  const auto trace = formation::run_formation(cfg, p, init, 100, 42);
  const double score = formation::v_shape_score(
      trace.slots.back().states, opt.pos, cfg.kappa);
  CHECK(score <= 0.15);
}
