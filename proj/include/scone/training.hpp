#pragma once

#include "scone/data.hpp"
#include "scone/eval.hpp"
#include "scone/policy.hpp"
#include "scone/reward.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace scone {

enum class Algorithm { sestra, policy_gradient, contextual_bandit, supervised };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view name);

struct TrainConfig {
    Algorithm algorithm = Algorithm::sestra;
    double learning_rate = 0.001;
    int batch_size = 20;
    int max_epochs = 200;
    double validation_fraction = 0.07;
    RewardConfig reward;
    std::uint64_t seed = 1;
    double initial_patience = 50.0;
    double patience_growth = 1.005; // patience resets to initial * growth^x
    long demo_node_cap = 1'000'000; // BFS budget per demonstration
    // PolicyGradient return: reward-to-go (default) or the whole-episode sum
    // at every step; both are readings of "cumulative episodic reward".
    bool pg_whole_episode = false;
};

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& json_text);

// Early stopping: patience resets to initial * growth^x on the x-th
// improvement, drops by one per non-improving epoch.
struct PatienceState {
    int improvements = 0;
    double remaining = 50.0;
    double best_metric = -1e300;
};

struct PatienceOutcome {
    bool improved = false;
    bool stop = false;
};

PatienceOutcome patience_step(PatienceState& state, double metric,
                              double initial_patience, double growth);

// Interaction-level split; whole interactions never straddle the boundary.
std::pair<std::vector<InteractionRecord>, std::vector<InteractionRecord>>
split_validation(const std::vector<InteractionRecord>& records, double fraction,
                 std::uint64_t seed);

// Shortest action sequence from start to goal by breadth-first search in
// canonical action order, STOP appended. nullopt if the node cap is hit.
std::optional<std::vector<Action>> generate_demonstration(const State& start,
                                                          const State& goal,
                                                          const Domain& domain,
                                                          long node_cap = 1'000'000);

struct TrainStats {
    long visited_states = 0;
    long reward_queries = 0;
    long examples = 0;
};

// Per-example objectives. Each samples/forces a rollout on the given tape and
// returns a scalar node: an objective to ASCEND for the RL algorithms, a loss
// to DESCEND for supervised. The caller runs backward() and the optimizer.
ad::Var sestra_objective(Policy& policy, ad::Tape& tape,
                         const InstructionExample& example,
                         const RewardConfig& reward, std::mt19937_64& rng,
                         TrainStats* stats = nullptr,
                         double* sampled_reward = nullptr);
ad::Var policy_gradient_objective(Policy& policy, ad::Tape& tape,
                                  const InstructionExample& example,
                                  const RewardConfig& reward,
                                  std::mt19937_64& rng, bool whole_episode,
                                  TrainStats* stats = nullptr,
                                  double* sampled_reward = nullptr);
ad::Var contextual_bandit_objective(Policy& policy, ad::Tape& tape,
                                    const InstructionExample& example,
                                    const RewardConfig& reward,
                                    std::mt19937_64& rng,
                                    TrainStats* stats = nullptr,
                                    double* sampled_reward = nullptr);
ad::Var supervised_loss(Policy& policy, ad::Tape& tape,
                        const InstructionExample& example,
                        const std::vector<Action>& demonstration,
                        std::mt19937_64& rng);

// Per-step shaped rewards of a sampled execution, horizon override applied.
std::vector<double> execution_rewards(const RolloutResult& rollout,
                                      const State& goal, const Domain& domain,
                                      const RewardConfig& reward);

struct EpochLog {
    int epoch = 0;
    double train_reward = 0.0;
    double val_reward = 0.0;
    double val_inst = 0.0;
    double val_3utts = 0.0;
    double val_5utts = 0.0;
    double patience = 0.0;
    double wall_seconds = 0.0;
};

std::string epoch_log_to_json(const EpochLog& log);

struct TrainResult {
    std::vector<EpochLog> log;
    int best_epoch = -1;        // by validation 5utts accuracy
    double best_five_utts = 0.0;
    long skipped_demos = 0;     // supervised: examples with no demonstration
};

// Full training loop with validation split, early stopping, and best-model
// selection. On return the policy holds the selected parameters.
// `log_stream`, when set, receives one JSON line per epoch.
TrainResult train(Policy& policy, const std::vector<InteractionRecord>& records,
                  const TrainConfig& config, TrainStats* stats = nullptr,
                  std::ostream* log_stream = nullptr);

} // namespace scone
