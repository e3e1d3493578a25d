#pragma once

#include "scone/domains.hpp"

namespace scone {

struct RewardConfig {
    double delta = 0.0;  // verbosity penalty
    double lambda = 0.1; // entropy regularization coefficient
    int horizon = 5;     // max actions per instruction (M)
};

// Tuned per-domain defaults: Alchemy (0.15, 0.1, 7), Scene (0.2, 0.07, 5),
// Tangrams (0.0, 0.1, 5).
RewardConfig default_reward_config(DomainKind kind);

// Problem reward P. STOP cases take precedence over the s == s' case:
//   1.0          a = STOP and s' = goal
//  -1.0          a = STOP and s' != goal
//  -1.0 - delta  s = s' (invalid non-STOP action)
//  -delta        otherwise
double problem_reward(const State& s, const Action& a, const State& s_next,
                      const State& goal, double delta);

// P plus the potential-based shaping term phi(s') - phi(s), with
// phi(s) = -distance(s, goal).
double shaped_reward(const State& s, const Action& a, const State& s_next,
                     const State& goal, const Domain& domain, double delta);

} // namespace scone
