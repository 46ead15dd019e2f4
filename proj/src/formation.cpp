#include "lawn/formation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lawn::formation {

namespace {

// rng channels
enum : uint64_t {
  kInitX = 1,
  kInitY = 2,
  kInitLambda = 3,
  kObsNoise = 4,
  kMotionX = 5,
  kMotionY = 6,
};

std::vector<RelOffset> offsets_of_others(int me,
                                         const std::vector<UavState>& states,
                                         const Vec2& origin) {
  std::vector<RelOffset> out;
  out.reserve(states.size() - 1);
  for (const auto& s : states) {
    if (s.id == me) continue;
    out.push_back({s.pos.x() - origin.x(), s.pos.y() - origin.y()});
  }
  return out;
}

}  // namespace

void FormationConfig::validate() const {
  if (m < 1) throw std::invalid_argument("formation: m must be >= 1");
  if (!(kappa > 0.0 && kappa < 1.0))
    throw std::invalid_argument("formation: kappa must be in (0,1)");
  if (!(theta_mix > 0.0 && theta_mix < 1.0))
    throw std::invalid_argument("formation: theta_mix must be in (0,1)");
  if (!(step > 0.0)) throw std::invalid_argument("formation: step must be > 0");
  if (!(v0 > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("formation: v0 and dt must be > 0");
  if (sigma_x2 < 0.0 || sigma_y2 < 0.0 || sigma_obs2 < 0.0)
    throw std::invalid_argument("formation: noise variances must be >= 0");
  double sum = 0.0;
  for (double w : comb_weights) {
    if (w < 0.0)
      throw std::invalid_argument("formation: combine weights must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("formation: combine weights must sum to 1");
  if (!lambdas.empty() && static_cast<int>(lambdas.size()) != m)
    throw std::invalid_argument("formation: lambdas must have m entries");
  for (int l : lambdas)
    if (l != 1 && l != -1)
      throw std::invalid_argument("formation: lambda entries must be ±1");
}

int select_leader(const std::vector<UavState>& states) {
  if (states.empty())
    throw std::invalid_argument("select_leader: empty formation");
  int best = 0;
  for (int i = 1; i < static_cast<int>(states.size()); ++i) {
    if (states[i].pos.y() < states[best].pos.y() ||
        (states[i].pos.y() == states[best].pos.y() &&
         states[i].id < states[best].id))
      best = i;
  }
  return best;
}

std::optional<int> find_reference(int me, const std::vector<UavState>& states,
                                  double kappa) {
  const Vec2& zm = states[me].pos;
  std::optional<int> best;
  double best_d = 0.0;
  for (int i = 0; i < static_cast<int>(states.size()); ++i) {
    if (i == me) continue;
    const double dy = zm.y() - states[i].pos.y();
    if (!(dy > 0.0)) continue;  // candidates strictly ahead only
    const double dx = zm.x() - states[i].pos.x();
    const double d = dx * dx + kappa * dy * dy;
    if (!best || d < best_d ||
        (d == best_d && states[i].id < states[*best].id)) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

std::vector<int> neighbor_set(int me, const std::vector<UavState>& states) {
  const int n = static_cast<int>(states.size());
  if (n <= 3) {
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  std::vector<int> others;
  others.reserve(n - 1);
  for (int i = 0; i < n; ++i)
    if (i != me) others.push_back(i);
  std::stable_sort(others.begin(), others.end(), [&](int a, int b) {
    const double da = (states[a].pos - states[me].pos).squaredNorm();
    const double db = (states[b].pos - states[me].pos).squaredNorm();
    if (da != db) return da < db;
    return states[a].id < states[b].id;
  });
  return {me, others[0], others[1]};
}

Observation observe_upwash(int me, std::vector<UavState>& states,
                           const AeroParams& p, const FormationConfig& cfg,
                           const CounterRng& rng, int slot) {
  const int leader = select_leader(states);
  if (me == leader)
    throw std::logic_error("observe_upwash: the leader has no upwash model");

  std::vector<Vec2> positions(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) positions[i] = states[i].pos;

  Observation obs;
  obs.u_tot = aero::total_upwash(static_cast<std::size_t>(me), positions, p);

  const auto ref = find_reference(me, states, cfg.kappa);
  const Vec2 origin = ref ? states[*ref].pos : states[me].pos;
  const RelOffset my_off{states[me].pos.x() - origin.x(),
                         states[me].pos.y() - origin.y()};
  obs.f = aero::upwash_gradient(my_off, states[me].lambda,
                                offsets_of_others(states[me].id, states, origin),
                                p);

  // memory update uses the true value; the observation carries the noise
  states[me].u_max = std::max(states[me].u_max, obs.u_tot);

  const double noise =
      cfg.sigma_obs2 > 0.0
          ? rng.normal(0.0, std::sqrt(cfg.sigma_obs2), kObsNoise,
                       static_cast<uint64_t>(slot), static_cast<uint64_t>(me))
          : 0.0;
  obs.d = states[me].u_max - obs.u_tot + obs.f.dot(states[me].est) + noise;
  return obs;
}

Vec2 adapt(const UavState& me, bool is_leader, const Observation& obs,
           const FormationConfig& cfg) {
  if (is_leader) return me.est;
  const double innovation = obs.d - obs.f.dot(me.est);
  return me.est + cfg.step * obs.f * innovation;
}

Vec2 combine(const std::vector<Vec2>& psis,
             const std::vector<double>& weights) {
  if (psis.size() != weights.size())
    throw std::invalid_argument("combine: weights do not match neighbor set");
  double sum = 0.0;
  for (double w : weights) sum += w;
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("combine: weights must sum to 1");
  Vec2 out = Vec2::Zero();
  for (std::size_t i = 0; i < psis.size(); ++i) out += weights[i] * psis[i];
  return out;
}

Vec2 step_motion(const UavState& me, bool is_leader,
                 const std::optional<Vec2>& ref_pos, const Vec2& dz_star,
                 const FormationConfig& cfg, const CounterRng& rng, int slot) {
  const double vx =
      cfg.sigma_x2 > 0.0
          ? rng.normal(0.0, std::sqrt(cfg.sigma_x2), kMotionX,
                       static_cast<uint64_t>(slot), static_cast<uint64_t>(me.id))
          : 0.0;
  const double vy =
      cfg.sigma_y2 > 0.0
          ? rng.normal(0.0, std::sqrt(cfg.sigma_y2), kMotionY,
                       static_cast<uint64_t>(slot), static_cast<uint64_t>(me.id))
          : 0.0;
  if (is_leader)
    return Vec2(me.pos.x() + vx, me.pos.y() - cfg.v0 * cfg.dt + vy);

  if (!ref_pos)
    throw std::logic_error("step_motion: follower without a reference");
  const double t = cfg.theta_mix;
  const double x_target = ref_pos->x() + me.lambda * dz_star.x();
  const double y_target = ref_pos->y() + dz_star.y();
  return Vec2(t * me.pos.x() + (1.0 - t) * x_target + vx,
              t * me.pos.y() + (1.0 - t) * y_target - cfg.v0 * cfg.dt + vy);
}

std::vector<UavState> init_formation(const FormationConfig& cfg,
                                     const AeroParams& p, uint64_t seed) {
  cfg.validate();
  p.validate();
  const CounterRng rng(seed);
  const double half_x = cfg.m * p.beta / 4.0;
  const double span_y = cfg.m * p.beta / 2.0;
  const double min_sep = 0.2 * p.beta;

  std::vector<UavState> states(cfg.m);
  for (int i = 0; i < cfg.m; ++i) {
    states[i].id = i;
    states[i].lambda = cfg.lambdas.empty()
                           ? rng.sign(kInitLambda, static_cast<uint64_t>(i))
                           : cfg.lambdas[i];
    states[i].est = Vec2(p.beta, p.beta);
    states[i].u_max = 0.0;
    for (uint64_t attempt = 0;; ++attempt) {
      const double x = cfg.center.x() +
                       rng.uniform(-half_x, half_x, kInitX,
                                   static_cast<uint64_t>(i), attempt);
      const double y = cfg.center.y() +
                       rng.uniform(0.0, span_y, kInitY,
                                   static_cast<uint64_t>(i), attempt);
      bool clear = true;
      for (int j = 0; j < i; ++j)
        if ((states[j].pos - Vec2(x, y)).norm() < min_sep) {
          clear = false;
          break;
        }
      if (clear) {
        states[i].pos = Vec2(x, y);
        break;
      }
      if (attempt > 10000)
        throw std::runtime_error(
            "init_formation: cannot place UAVs without collisions");
    }
  }
  return states;
}

FormationTrace run_formation(const FormationConfig& cfg, const AeroParams& p,
                             std::vector<UavState> init, int n_slots,
                             uint64_t seed, bool parallel) {
  cfg.validate();
  p.validate();
  const int m = static_cast<int>(init.size());
  if (m != cfg.m)
    throw std::invalid_argument("run_formation: init size does not match cfg");
  const CounterRng rng(seed);

  FormationTrace trace;
  trace.slots.reserve(static_cast<std::size_t>(n_slots));
  std::vector<UavState> states = std::move(init);

  std::vector<int> refs(m);
  std::vector<double> u_tot(m);
  std::vector<Vec2> psi(m);
  std::vector<Vec2> next_pos(m);
  std::vector<Vec2> dz_next(m);

  for (int slot = 0; slot < n_slots; ++slot) {
    const int leader = select_leader(states);
    std::vector<Vec2> positions(m);
    for (int i = 0; i < m; ++i) positions[i] = states[i].pos;

    // pass 1: per-UAV reference, observation, adapt (independent given
    // the slot-start state; rng draws are keyed, not sequential)
#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < m; ++i) {
      if (i == leader) {
        u_tot[i] =
            aero::total_upwash(static_cast<std::size_t>(i), positions, p);
        refs[i] = -1;
        states[i].u_max = std::max(states[i].u_max, u_tot[i]);
        psi[i] = states[i].est;
        continue;
      }
      const auto ref = find_reference(i, states, cfg.kappa);
      refs[i] = ref ? *ref : -1;
      const Observation obs = observe_upwash(i, states, p, cfg, rng, slot);
      u_tot[i] = obs.u_tot;
      psi[i] = adapt(states[i], false, obs, cfg);
    }

    // record the slot before moving
    SlotSnapshot snap;
    snap.states = states;
    snap.leader = leader;
    snap.ref = refs;
    snap.u_tot = u_tot;
    trace.slots.push_back(std::move(snap));

    double upwash_sum = 0.0;
    int followers = 0;
    for (int i = 0; i < m; ++i) {
      if (i == leader) continue;
      upwash_sum += u_tot[i];
      ++followers;
    }
    trace.mean_follower_upwash.push_back(
        followers > 0 ? upwash_sum / followers : 0.0);

    // pass 2: combine over neighbors, then move
#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < m; ++i) {
      const std::vector<int> nbrs = neighbor_set(i, states);
      std::vector<Vec2> psis(nbrs.size());
      for (std::size_t t = 0; t < nbrs.size(); ++t) psis[t] = psi[nbrs[t]];
      std::vector<double> weights;
      if (static_cast<int>(nbrs.size()) == 3 && cfg.comb_weights.size() == 3)
        weights = cfg.comb_weights;
      else
        weights.assign(nbrs.size(), 1.0 / static_cast<double>(nbrs.size()));
      dz_next[i] = combine(psis, weights);

      // an exact y tie with the leader leaves a follower referenceless
      // for the slot; it advects like the leader until the tie breaks
      const bool advect_only = (i == leader) || refs[i] < 0;
      std::optional<Vec2> ref_pos;
      if (!advect_only) ref_pos = states[refs[i]].pos;
      next_pos[i] = step_motion(states[i], advect_only, ref_pos, dz_next[i],
                                cfg, rng, slot);
    }

    for (int i = 0; i < m; ++i) {
      if (!next_pos[i].allFinite()) {
        std::ostringstream msg;
        msg << "run_formation: diverged at slot " << slot << ", uav " << i;
        throw std::runtime_error(msg.str());
      }
      states[i].pos = next_pos[i];
      states[i].est = dz_next[i];
    }
  }
  return trace;
}

double v_shape_score(const std::vector<UavState>& states, const AeroParams& p,
                     double kappa) {
  const auto opt = aero::argmax_avg_upwash(p);
  return v_shape_score(states, opt.pos, kappa);
}

double v_shape_score(const std::vector<UavState>& states,
                     const Vec2& optimum_offset, double kappa) {
  if (states.size() < 2)
    throw std::invalid_argument("v_shape_score: need at least 2 UAVs");
  const int leader = select_leader(states);
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < static_cast<int>(states.size()); ++i) {
    if (i == leader) continue;
    const auto ref = find_reference(i, states, kappa);
    if (!ref) continue;
    const Vec2 off = states[i].pos - states[*ref].pos;
    const double d_left =
        (off - Vec2(optimum_offset.x(), optimum_offset.y())).norm();
    const double d_right =
        (off - Vec2(-optimum_offset.x(), optimum_offset.y())).norm();
    sum += std::min(d_left, d_right);
    ++count;
  }
  return count > 0 ? sum / count : 0.0;
}

}  // namespace lawn::formation
