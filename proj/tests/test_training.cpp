#include <doctest.h>

#include "scone/training.hpp"
#include "fixtures.hpp"

#include <cmath>
#include <set>
#include <sstream>

using namespace scone;
using ad::Tape;
using ad::Var;
using scone::testutil::random_state;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.word_emb = 4;
    cfg.action_emb = 4;
    cfg.item_emb = 3;
    cfg.pos_emb = 3;
    cfg.enc_hidden = 4;
    cfg.dec_hidden = 4;
    cfg.state_hidden = 3;
    cfg.dropout = 0.0;
    return cfg;
}

Policy tiny_policy(std::uint64_t seed = 1) {
    std::shared_ptr<const Domain> domain = make_alchemy_domain(2);
    Vocabulary vocab = Vocabulary::from_tokens(
        {"<unk>", "<delim1>", "<delim2>", "pop", "push", "beaker", "one",
         "two", "red", "green", "then"});
    return Policy(domain, vocab, tiny_config(), seed);
}

InstructionExample tiny_example(const Policy& policy) {
    InstructionExample ex;
    ex.instruction = {"pop", "beaker", "one"};
    ex.start = policy.domain().parse_state("1:g 2:b");
    ex.goal = policy.domain().parse_state("1:_ 2:b");
    return ex;
}

// Miniature interaction set over the 2-beaker domain.
std::vector<InteractionRecord> tiny_records(const Domain& d, int count) {
    std::vector<InteractionRecord> out;
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> pick(1, d.actions().size() - 1);
    for (int i = 0; i < count; ++i) {
        InteractionRecord rec;
        rec.id = "tiny-" + std::to_string(i);
        rec.initial_state = random_state(d, rng);
        State s = rec.initial_state;
        for (int t = 0; t < 2; ++t) {
            Action a = d.actions()[pick(rng)];
            State next = d.apply(s, a);
            InteractionRecord::Turn turn;
            turn.instruction = {d.format_action(a) == "stop" ? "pop" : "push", "beaker"};
            turn.post_state = next;
            rec.turns.push_back(std::move(turn));
            s = next;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

} // namespace

TEST_CASE("single-step objective gradient matches finite differences") {
    // 5-action bandit built directly on the tape: J = sum_a R_a pi_a + lambda H
    std::vector<double> rewards = {1.0, -0.3, 0.2, -1.0, 0.5};
    for (double lambda : {0.0, 0.1}) {
        ad::Parameter theta("theta",
                            ad::Tensor::vector({0.4, -0.2, 0.0, 0.8, -0.5}));
        auto forward = [&](Tape& t) {
            Var pi = t.softmax(t.param(theta));
            Var j = t.dot_const(pi, rewards);
            if (lambda != 0.0) j = t.add(j, t.scale(t.entropy(pi), lambda));
            return j;
        };
        Tape tape;
        tape.backward(forward(tape));
        const double h = 1e-6;
        for (std::size_t i = 0; i < 5; ++i) {
            double saved = theta.value[i];
            theta.value[i] = saved + h;
            Tape tp;
            double fp = tp.value(forward(tp)).data[0];
            theta.value[i] = saved - h;
            Tape tm;
            double fm = tm.value(forward(tm)).data[0];
            theta.value[i] = saved;
            double numeric = (fp - fm) / (2.0 * h);
            CHECK(std::abs(numeric - theta.grad[i]) < 1e-4);
        }
    }
    // constant rewards, no entropy: the gradient vanishes
    ad::Parameter theta("theta", ad::Tensor::vector({0.4, -0.2, 0.0, 0.8, -0.5}));
    Tape t;
    Var pi = t.softmax(t.param(theta));
    t.backward(t.dot_const(pi, {0.7, 0.7, 0.7, 0.7, 0.7}));
    double norm = 0.0;
    for (double g : theta.grad.data) norm += g * g;
    CHECK(std::sqrt(norm) < 1e-10);
}

TEST_CASE("reward query counts per visited state") {
    Policy policy = tiny_policy(3);
    InstructionExample ex = tiny_example(policy);
    RewardConfig reward{0.15, 0.1, 5};
    const long n_actions = static_cast<long>(policy.domain().actions().size());

    std::mt19937_64 rng(7);
    TrainStats st_sestra;
    Tape t1;
    sestra_objective(policy, t1, ex, reward, rng, &st_sestra);
    CHECK(st_sestra.visited_states >= 1);
    // every action's reward observed at every visited state
    CHECK(st_sestra.reward_queries == st_sestra.visited_states * n_actions);

    TrainStats st_cb;
    Tape t2;
    contextual_bandit_objective(policy, t2, ex, reward, rng, &st_cb);
    CHECK(st_cb.reward_queries == st_cb.visited_states); // exactly one per state

    TrainStats st_pg;
    Tape t3;
    policy_gradient_objective(policy, t3, ex, reward, rng, false, &st_pg);
    CHECK(st_pg.reward_queries == st_pg.visited_states);
}

TEST_CASE("objectives backpropagate without error and move parameters") {
    Policy policy = tiny_policy(5);
    InstructionExample ex = tiny_example(policy);
    RewardConfig reward{0.15, 0.1, 5};
    std::mt19937_64 rng(11);
    for (int which = 0; which < 3; ++which) {
        policy.params().zero_grad();
        Tape tape;
        Var obj;
        if (which == 0) obj = sestra_objective(policy, tape, ex, reward, rng);
        if (which == 1) obj = policy_gradient_objective(policy, tape, ex, reward, rng, false);
        if (which == 2) obj = contextual_bandit_objective(policy, tape, ex, reward, rng);
        tape.backward(obj);
        double norm = 0.0;
        for (auto& [name, p] : policy.params()) {
            for (double g : p->grad.data) norm += g * g;
        }
        CHECK(norm > 0.0);
    }
}

TEST_CASE("patience grows geometrically on improvement") {
    PatienceState st;
    st.remaining = 50.0;
    auto out = patience_step(st, 0.5, 50.0, 1.005);
    CHECK(out.improved);
    CHECK(st.remaining == doctest::Approx(50.25).epsilon(1e-12));
    out = patience_step(st, 0.4, 50.0, 1.005); // worse: decrement
    CHECK_FALSE(out.improved);
    CHECK(st.remaining == doctest::Approx(49.25).epsilon(1e-12));
    out = patience_step(st, 0.6, 50.0, 1.005); // second improvement
    CHECK(st.remaining == doctest::Approx(50.0 * 1.005 * 1.005).epsilon(1e-12));

    PatienceState st2;
    st2.remaining = 0.5;
    patience_step(st2, 0.0, 0.5, 1.0); // improves, resets to 0.5
    auto stop = patience_step(st2, -0.5, 0.5, 1.0);
    CHECK(stop.stop); // 0.5 - 1 <= 0
}

TEST_CASE("validation split is deterministic and interaction-level") {
    const Domain& d = standard_domain(DomainKind::tangrams);
    auto records = tiny_records(d, 50);
    auto [train1, val1] = split_validation(records, 0.1, 7);
    auto [train2, val2] = split_validation(records, 0.1, 7);
    CHECK(val1.size() == 5);
    CHECK(train1.size() == 45);
    REQUIRE(val2.size() == val1.size());
    for (std::size_t i = 0; i < val1.size(); ++i) CHECK(val1[i].id == val2[i].id);

    std::set<std::string> train_ids, val_ids;
    for (const auto& r : train1) train_ids.insert(r.id);
    for (const auto& r : val1) val_ids.insert(r.id);
    CHECK(train_ids.size() + val_ids.size() == records.size());
    for (const auto& id : val_ids) CHECK_FALSE(train_ids.contains(id));

    auto [train3, val3] = split_validation(records, 0.1, 8);
    bool different = false;
    for (std::size_t i = 0; i < val1.size(); ++i) {
        if (val3[i].id != val1[i].id) different = true;
    }
    CHECK(different);
    CHECK_THROWS(split_validation(records, 0.0, 1));
}

TEST_CASE("breadth-first demonstrations reach the goal optimally") {
    std::mt19937_64 rng(21);
    for (auto kind : {DomainKind::alchemy, DomainKind::tangrams}) {
        auto domain = kind == DomainKind::alchemy ? make_alchemy_domain(2)
                                                  : make_tangrams_domain(3);
        for (int trial = 0; trial < 50; ++trial) {
            State start = kind == DomainKind::alchemy
                              ? State(testutil::random_alchemy(2, 1, rng))
                              : State(testutil::random_tangrams(3, rng));
            State goal = kind == DomainKind::alchemy
                             ? State(testutil::random_alchemy(2, 1, rng))
                             : State(testutil::random_tangrams(3, rng));
            auto demo = generate_demonstration(start, goal, *domain);
            REQUIRE(demo.has_value());
            CHECK(demo->back().is_stop());
            CHECK(apply_sequence(start, *demo, *domain) == goal);
            // no shorter than the non-STOP action count implied by distance
            long moves = static_cast<long>(demo->size()) - 1;
            CHECK(moves * 2 >= domain->distance(start, goal)); // cost <= 2/action
            for (std::size_t k = 0; k + 1 < demo->size(); ++k) {
                CHECK_FALSE((*demo)[k].is_stop());
            }
        }
    }
    // start == goal gives the bare STOP
    auto d = make_alchemy_domain(2);
    State s = d->parse_state("1:g 2:_");
    auto demo = generate_demonstration(s, s, *d);
    REQUIRE(demo.has_value());
    CHECK(*demo == std::vector<Action>{kStop});
    // node cap failure path
    State far = d->parse_state("1:bbbb 2:gggg");
    CHECK_FALSE(generate_demonstration(s, far, *d, 3).has_value());
}

TEST_CASE("supervised loss is positive and shrinks under adam") {
    Policy policy = tiny_policy(31);
    InstructionExample ex = tiny_example(policy);
    auto demo = generate_demonstration(ex.start, ex.goal, policy.domain());
    REQUIRE(demo.has_value());
    std::mt19937_64 rng(1);
    double first = 0.0;
    double last = 0.0;
    for (int step = 0; step < 40; ++step) {
        policy.params().zero_grad();
        Tape tape;
        Var loss = supervised_loss(policy, tape, ex, *demo, rng);
        double v = tape.scalar(loss);
        if (step == 0) first = v;
        last = v;
        tape.backward(loss);
        ad::adam_descend(policy.params(), 0.01);
    }
    CHECK(first > 0.0);
    CHECK(last < first * 0.5);
}

TEST_CASE("train runs, logs JSON lines, and restores the best checkpoint") {
    Policy policy = tiny_policy(41);
    auto records = tiny_records(policy.domain(), 20);
    TrainConfig cfg;
    cfg.algorithm = Algorithm::contextual_bandit;
    cfg.max_epochs = 3;
    cfg.batch_size = 5;
    cfg.validation_fraction = 0.2;
    cfg.reward = RewardConfig{0.15, 0.1, 4};
    cfg.seed = 2;
    std::ostringstream log;
    TrainStats stats;
    TrainResult result = train(policy, records, cfg, &stats, &log);
    CHECK(result.log.size() == 3);
    CHECK(result.best_epoch >= 1);
    CHECK(stats.examples > 0);
    std::istringstream lines(log.str());
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) {
        CHECK(line.find("\"epoch\":") != std::string::npos);
        ++n;
    }
    CHECK(n == 3);
}

TEST_CASE("training is bit-deterministic given seed, config, and data") {
    auto run = [&]() {
        Policy policy = tiny_policy(43);
        auto records = tiny_records(policy.domain(), 12);
        TrainConfig cfg;
        cfg.algorithm = Algorithm::sestra;
        cfg.max_epochs = 2;
        cfg.batch_size = 4;
        cfg.validation_fraction = 0.2;
        cfg.reward = RewardConfig{0.15, 0.1, 4};
        cfg.seed = 5;
        train(policy, records, cfg);
        return ad::params_to_string(policy.params(), "{}");
    };
    CHECK(run() == run());
}

TEST_CASE("train config json round trip") {
    TrainConfig cfg;
    cfg.algorithm = Algorithm::policy_gradient;
    cfg.learning_rate = 0.002;
    cfg.reward = RewardConfig{0.2, 0.07, 5};
    cfg.pg_whole_episode = true;
    TrainConfig back = train_config_from_json(train_config_to_json(cfg));
    CHECK(back.algorithm == Algorithm::policy_gradient);
    CHECK(back.learning_rate == 0.002);
    CHECK(back.reward.delta == 0.2);
    CHECK(back.reward.lambda == 0.07);
    CHECK(back.reward.horizon == 5);
    CHECK(back.pg_whole_episode);
    CHECK(to_string(algorithm_from_string("sestra")) == "sestra");
    CHECK_THROWS(algorithm_from_string("nope"));
}
