#include "scone/env.hpp"

namespace scone {

State apply_sequence(const State& state, std::span<const Action> actions,
                     const Domain& domain) {
    State s = state;
    for (const Action& a : actions) s = domain.apply(s, a);
    return s;
}

bool is_valid(const State& state, const Action& action, const Domain& domain) {
    return action.is_stop() || !(domain.apply(state, action) == state);
}

bool context_consistent(const AgentContext& ctx, const Domain& domain) {
    State s = ctx.initial_state;
    for (const auto& step : ctx.execution_prefix.steps) {
        if (!(step.state == s)) return false;
        s = domain.apply(s, step.action);
    }
    return s == ctx.current_state;
}

} // namespace scone
