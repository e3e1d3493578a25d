#include <doctest.h>

#include "scone/env.hpp"
#include "fixtures.hpp"

using namespace scone;
using scone::testutil::random_state;

TEST_CASE("apply_sequence folds the transition function") {
    const Domain& d = standard_domain(DomainKind::alchemy);
    State s = d.parse_state("1:g 2:_ 3:p 4:_ 5:y 6:oo 7:r");
    std::vector<Action> seq = {d.parse_action("pop 6"), d.parse_action("pop 6"),
                               d.parse_action("push 7 o"), kStop};
    State out = apply_sequence(s, seq, d);
    CHECK(d.format_state(out) == "1:g 2:_ 3:p 4:_ 5:y 6:_ 7:ro");
    CHECK(apply_sequence(s, {}, d) == s);
}

TEST_CASE("is_valid accepts STOP and state-changing actions only") {
    const Domain& d = standard_domain(DomainKind::alchemy);
    State s = d.parse_state("1:g 2:_ 3:_ 4:_ 5:_ 6:_ 7:_");
    CHECK(is_valid(s, kStop, d));
    CHECK(is_valid(s, d.parse_action("pop 1"), d));
    CHECK_FALSE(is_valid(s, d.parse_action("pop 2"), d)); // empty beaker
    CHECK(is_valid(s, d.parse_action("push 2 b"), d));
}

TEST_CASE("context consistency replays the execution prefix") {
    const Domain& d = standard_domain(DomainKind::tangrams);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        AgentContext ctx;
        ctx.initial_state = random_state(d, rng);
        State cur = ctx.initial_state;
        std::uniform_int_distribution<std::size_t> pick(0, d.actions().size() - 1);
        for (int k = 0; k < 3; ++k) {
            Action a = d.actions()[pick(rng)];
            ctx.execution_prefix.steps.push_back({cur, a});
            cur = d.apply(cur, a);
        }
        ctx.current_state = cur;
        CHECK(context_consistent(ctx, d));
        ctx.current_state = d.apply(cur, d.parse_action("remove 1"));
        if (ctx.current_state != cur) CHECK_FALSE(context_consistent(ctx, d));
    }
}
