#include "scone/reward.hpp"

namespace scone {

RewardConfig default_reward_config(DomainKind kind) {
    switch (kind) {
        case DomainKind::alchemy: return {0.15, 0.1, 7};
        case DomainKind::scene: return {0.2, 0.07, 5};
        case DomainKind::tangrams: return {0.0, 0.1, 5};
    }
    throw std::invalid_argument("bad domain kind");
}

double problem_reward(const State& s, const Action& a, const State& s_next,
                      const State& goal, double delta) {
    if (a.is_stop()) return s_next == goal ? 1.0 : -1.0;
    if (s == s_next) return -1.0 - delta;
    return -delta;
}

double shaped_reward(const State& s, const Action& a, const State& s_next,
                     const State& goal, const Domain& domain, double delta) {
    double phi_s = -static_cast<double>(domain.distance(s, goal));
    double phi_next = -static_cast<double>(domain.distance(s_next, goal));
    return problem_reward(s, a, s_next, goal, delta) + phi_next - phi_s;
}

} // namespace scone
