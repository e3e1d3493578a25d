#pragma once

#include "scone/domains.hpp"

#include <span>
#include <string>
#include <vector>

namespace scone {

// Sequence of (state, action) pairs with s_{k+1} = T(s_k, a_k). A STOP, if
// present, is the final action.
struct Execution {
    struct Step {
        State state;
        Action action;
    };
    std::vector<Step> steps;

    bool stopped() const {
        return !steps.empty() && steps.back().action.is_stop();
    }
    std::size_t length() const { return steps.size(); }
};

using Tokens = std::vector<std::string>;

// Everything the agent conditions on at one decoding step.
struct AgentContext {
    Tokens current_instruction;
    std::vector<Tokens> history;
    State initial_state; // state at the start of the current instruction
    State current_state;
    Execution execution_prefix;
};

// Left fold of the domain transition; T(s, STOP) = s, so invalid actions and
// STOPs are absorbed without error.
State apply_sequence(const State& state, std::span<const Action> actions,
                     const Domain& domain);

// True iff the action is STOP or changes the state.
bool is_valid(const State& state, const Action& action, const Domain& domain);

// Replays the execution prefix from the initial state and checks it matches
// current_state.
bool context_consistent(const AgentContext& ctx, const Domain& domain);

} // namespace scone
