#pragma once

#include "scone/data.hpp"
#include "scone/policy.hpp"
#include "scone/reward.hpp"

#include <string>
#include <vector>

namespace scone {

// Exact-match task completion: Inst decodes each instruction greedily from
// its annotated start state; 3utts/5utts chain predicted final states through
// the first three / all turns of each interaction.
struct EvalReport {
    struct InteractionOutcome {
        std::string id;
        std::vector<bool> instructions; // per-turn Inst outcomes
        bool three_utts = false;
        bool five_utts = false;
    };
    std::vector<InteractionOutcome> interactions;

    int inst_correct = 0, inst_total = 0;
    int three_correct = 0, three_total = 0;
    int five_correct = 0, five_total = 0;
    double inst_accuracy = 0.0;
    double three_utt_accuracy = 0.0;
    double five_utt_accuracy = 0.0;

    // Mean total shaped reward of the greedy per-instruction rollouts; the
    // early-stopping signal.
    double mean_instruction_reward = 0.0;
};

EvalReport evaluate(Policy& policy, const std::vector<InteractionRecord>& records,
                    const RewardConfig& reward);

std::string eval_report_to_json(const EvalReport& report);

// Greedy rollout of one turn with all six attention heads exported per step.
std::string dump_attention_json(Policy& policy, const InteractionRecord& record,
                                int turn_index, int horizon);

} // namespace scone
