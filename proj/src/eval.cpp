#include "scone/eval.hpp"

#include <stdexcept>

#include <json.hpp>

namespace scone {

namespace {

// Total shaped reward of an executed rollout, with the horizon-failure
// override: reaching M without STOP forces problem reward -1.0 on the last
// step (shaping kept).
double total_shaped_reward(const RolloutResult& rollout, const State& goal,
                           const Domain& domain, const RewardConfig& cfg) {
    double total = 0.0;
    const auto& steps = rollout.execution.steps;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const State& s = steps[k].state;
        const Action& a = steps[k].action;
        State s_next = domain.apply(s, a);
        double r = shaped_reward(s, a, s_next, goal, domain, cfg.delta);
        if (rollout.hit_horizon && k + 1 == steps.size()) {
            double phi = static_cast<double>(domain.distance(s, goal)) -
                         static_cast<double>(domain.distance(s_next, goal));
            r = -1.0 + phi;
        }
        total += r;
    }
    return total;
}

} // namespace

EvalReport evaluate(Policy& policy, const std::vector<InteractionRecord>& records,
                    const RewardConfig& reward) {
    const Domain& domain = policy.domain();
    EvalReport report;
    std::mt19937_64 rng(0); // greedy decoding draws nothing
    double reward_sum = 0.0;
    int reward_count = 0;

    for (const auto& rec : records) {
        EvalReport::InteractionOutcome outcome;
        outcome.id = rec.id;

        // Inst: each turn from its annotated start state.
        State start = rec.initial_state;
        std::vector<Tokens> history;
        for (std::size_t i = 0; i < rec.turns.size(); ++i) {
            InstructionExample ex;
            ex.instruction = rec.turns[i].instruction;
            ex.start = start;
            ex.history = history;
            ex.goal = rec.turns[i].post_state;
            ad::Tape tape;
            auto rollout = run_rollout(policy, tape, ex, reward.horizon,
                                       DecodeMode::greedy, rng, false);
            bool ok = rollout.final_state == ex.goal;
            outcome.instructions.push_back(ok);
            report.inst_total += 1;
            report.inst_correct += ok ? 1 : 0;
            reward_sum += total_shaped_reward(rollout, ex.goal, domain, reward);
            reward_count += 1;
            history.push_back(rec.turns[i].instruction);
            start = rec.turns[i].post_state;
        }

        // 3utts / 5utts: chain predicted final states from the interaction start.
        State chained = rec.initial_state;
        std::vector<Tokens> chain_history;
        for (std::size_t i = 0; i < rec.turns.size(); ++i) {
            InstructionExample ex;
            ex.instruction = rec.turns[i].instruction;
            ex.start = chained;
            ex.history = chain_history;
            ex.goal = rec.turns[i].post_state;
            ad::Tape tape;
            auto rollout = run_rollout(policy, tape, ex, reward.horizon,
                                       DecodeMode::greedy, rng, false);
            chained = rollout.final_state;
            chain_history.push_back(rec.turns[i].instruction);
            if (i + 1 == 3 && rec.turns.size() >= 3) {
                outcome.three_utts = chained == rec.turns[2].post_state;
                report.three_total += 1;
                report.three_correct += outcome.three_utts ? 1 : 0;
            }
        }
        if (!rec.turns.empty()) {
            outcome.five_utts = chained == rec.turns.back().post_state;
            report.five_total += 1;
            report.five_correct += outcome.five_utts ? 1 : 0;
        }
        report.interactions.push_back(std::move(outcome));
    }

    auto frac = [](int num, int den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; };
    report.inst_accuracy = frac(report.inst_correct, report.inst_total);
    report.three_utt_accuracy = frac(report.three_correct, report.three_total);
    report.five_utt_accuracy = frac(report.five_correct, report.five_total);
    report.mean_instruction_reward =
        reward_count == 0 ? 0.0 : reward_sum / reward_count;
    return report;
}

std::string eval_report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["inst"] = {{"accuracy", report.inst_accuracy},
                 {"correct", report.inst_correct},
                 {"total", report.inst_total}};
    j["3utts"] = {{"accuracy", report.three_utt_accuracy},
                  {"correct", report.three_correct},
                  {"total", report.three_total}};
    j["5utts"] = {{"accuracy", report.five_utt_accuracy},
                  {"correct", report.five_correct},
                  {"total", report.five_total}};
    j["mean_instruction_reward"] = report.mean_instruction_reward;
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    for (const auto& o : report.interactions) {
        per.push_back({{"id", o.id},
                       {"instructions", o.instructions},
                       {"3utts", o.three_utts},
                       {"5utts", o.five_utts}});
    }
    j["interactions"] = std::move(per);
    return j.dump(1);
}

std::string dump_attention_json(Policy& policy, const InteractionRecord& record,
                                int turn_index, int horizon) {
    if (turn_index < 0 || turn_index >= static_cast<int>(record.turns.size())) {
        throw std::out_of_range("turn index out of range");
    }
    const Domain& domain = policy.domain();
    InstructionExample ex;
    ex.instruction = record.turns[turn_index].instruction;
    ex.goal = record.turns[turn_index].post_state;
    ex.start = turn_index == 0 ? record.initial_state
                               : record.turns[turn_index - 1].post_state;
    for (int i = 0; i < turn_index; ++i) ex.history.push_back(record.turns[i].instruction);

    std::mt19937_64 rng(0);
    ad::Tape tape;
    auto rollout = run_rollout(policy, tape, ex, horizon, DecodeMode::greedy, rng, false);

    auto head_json = [](const AttentionHead& h) {
        return nlohmann::ordered_json{{"labels", h.labels}, {"weights", h.weights}};
    };
    nlohmann::ordered_json j;
    j["interaction"] = record.id;
    j["turn"] = turn_index;
    j["instruction"] = ex.instruction;
    nlohmann::ordered_json steps = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < rollout.execution.steps.size(); ++k) {
        const auto& attn = rollout.attention[k];
        nlohmann::ordered_json step;
        step["action"] = domain.format_action(rollout.execution.steps[k].action);
        step["state"] = domain.format_state(rollout.execution.steps[k].state);
        nlohmann::ordered_json heads;
        heads["current_instruction"] = head_json(attn.current_instruction);
        if (attn.previous_instructions) {
            heads["previous_instructions"] = head_json(*attn.previous_instructions);
        }
        heads["initial_state_1"] = head_json(attn.initial_state_1);
        heads["initial_state_2"] = head_json(attn.initial_state_2);
        heads["current_state_1"] = head_json(attn.current_state_1);
        heads["current_state_2"] = head_json(attn.current_state_2);
        step["heads"] = std::move(heads);
        steps.push_back(std::move(step));
    }
    j["steps"] = std::move(steps);
    j["final_state"] = domain.format_state(rollout.final_state);
    return j.dump(1);
}

} // namespace scone
