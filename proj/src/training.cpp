#include "scone/training.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <ostream>
#include <queue>
#include <unordered_map>

#include <json.hpp>

namespace scone {

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::sestra: return "sestra";
        case Algorithm::policy_gradient: return "policy_gradient";
        case Algorithm::contextual_bandit: return "contextual_bandit";
        case Algorithm::supervised: return "supervised";
    }
    throw std::logic_error("unreachable");
}

Algorithm algorithm_from_string(std::string_view name) {
    if (name == "sestra") return Algorithm::sestra;
    if (name == "policy_gradient") return Algorithm::policy_gradient;
    if (name == "contextual_bandit") return Algorithm::contextual_bandit;
    if (name == "supervised") return Algorithm::supervised;
    throw std::invalid_argument("unknown algorithm: " + std::string(name));
}

std::string train_config_to_json(const TrainConfig& cfg) {
    nlohmann::ordered_json j;
    j["algorithm"] = to_string(cfg.algorithm);
    j["learning_rate"] = cfg.learning_rate;
    j["batch_size"] = cfg.batch_size;
    j["max_epochs"] = cfg.max_epochs;
    j["validation_fraction"] = cfg.validation_fraction;
    j["reward"] = {{"delta", cfg.reward.delta},
                   {"lambda", cfg.reward.lambda},
                   {"horizon", cfg.reward.horizon}};
    j["seed"] = cfg.seed;
    j["initial_patience"] = cfg.initial_patience;
    j["patience_growth"] = cfg.patience_growth;
    j["demo_node_cap"] = cfg.demo_node_cap;
    j["pg_whole_episode"] = cfg.pg_whole_episode;
    return j.dump();
}

TrainConfig train_config_from_json(const std::string& json_text) {
    auto j = nlohmann::json::parse(json_text);
    TrainConfig cfg;
    if (j.contains("algorithm")) {
        cfg.algorithm = algorithm_from_string(j["algorithm"].get<std::string>());
    }
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
    cfg.validation_fraction = j.value("validation_fraction", cfg.validation_fraction);
    if (j.contains("reward")) {
        cfg.reward.delta = j["reward"].value("delta", cfg.reward.delta);
        cfg.reward.lambda = j["reward"].value("lambda", cfg.reward.lambda);
        cfg.reward.horizon = j["reward"].value("horizon", cfg.reward.horizon);
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.initial_patience = j.value("initial_patience", cfg.initial_patience);
    cfg.patience_growth = j.value("patience_growth", cfg.patience_growth);
    cfg.demo_node_cap = j.value("demo_node_cap", cfg.demo_node_cap);
    cfg.pg_whole_episode = j.value("pg_whole_episode", cfg.pg_whole_episode);
    return cfg;
}

PatienceOutcome patience_step(PatienceState& state, double metric,
                              double initial_patience, double growth) {
    PatienceOutcome out;
    if (metric > state.best_metric) {
        state.best_metric = metric;
        state.improvements += 1;
        state.remaining = initial_patience *
                          std::pow(growth, static_cast<double>(state.improvements));
        out.improved = true;
    } else {
        state.remaining -= 1.0;
    }
    out.stop = state.remaining <= 0.0;
    return out;
}

std::pair<std::vector<InteractionRecord>, std::vector<InteractionRecord>>
split_validation(const std::vector<InteractionRecord>& records, double fraction,
                 std::uint64_t seed) {
    if (fraction <= 0.0 || fraction >= 1.0) {
        throw std::invalid_argument("validation fraction must be in (0, 1)");
    }
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_val = static_cast<std::size_t>(
        static_cast<double>(records.size()) * fraction);
    std::vector<std::size_t> val_idx(order.begin(), order.begin() + n_val);
    std::vector<std::size_t> train_idx(order.begin() + n_val, order.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::pair<std::vector<InteractionRecord>, std::vector<InteractionRecord>> out;
    for (auto i : train_idx) out.first.push_back(records[i]);
    for (auto i : val_idx) out.second.push_back(records[i]);
    return out;
}

std::optional<std::vector<Action>> generate_demonstration(const State& start,
                                                          const State& goal,
                                                          const Domain& domain,
                                                          long node_cap) {
    if (start == goal) return std::vector<Action>{kStop};
    struct Entry {
        State state;
        long parent;
        Action action;
    };
    std::vector<Entry> entries;
    std::unordered_map<std::string, long> seen;
    entries.push_back({start, -1, kStop});
    seen.emplace(domain.format_state(start), 0);
    std::queue<long> frontier;
    frontier.push(0);
    long expanded = 0;
    while (!frontier.empty()) {
        long cur = frontier.front();
        frontier.pop();
        if (++expanded > node_cap) return std::nullopt;
        for (const Action& a : domain.actions()) {
            if (a.is_stop()) continue;
            State next = domain.apply(entries[cur].state, a);
            if (next == entries[cur].state) continue;
            std::string key = domain.format_state(next);
            if (seen.contains(key)) continue;
            long id = static_cast<long>(entries.size());
            entries.push_back({next, cur, a});
            seen.emplace(std::move(key), id);
            if (next == goal) {
                std::vector<Action> plan;
                for (long n = id; n > 0; n = entries[n].parent) {
                    plan.push_back(entries[n].action);
                }
                std::reverse(plan.begin(), plan.end());
                plan.push_back(kStop);
                return plan;
            }
            frontier.push(id);
        }
    }
    return std::nullopt;
}

std::vector<double> execution_rewards(const RolloutResult& rollout,
                                      const State& goal, const Domain& domain,
                                      const RewardConfig& reward) {
    std::vector<double> out;
    const auto& steps = rollout.execution.steps;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const State& s = steps[k].state;
        const Action& a = steps[k].action;
        State s_next = domain.apply(s, a);
        double r = shaped_reward(s, a, s_next, goal, domain, reward.delta);
        if (rollout.hit_horizon && k + 1 == steps.size()) {
            // Horizon failure: problem reward forced to -1.0, shaping kept.
            double shaping = static_cast<double>(domain.distance(s, goal)) -
                             static_cast<double>(domain.distance(s_next, goal));
            r = -1.0 + shaping;
        }
        out.push_back(r);
    }
    return out;
}

ad::Var sestra_objective(Policy& policy, ad::Tape& tape,
                         const InstructionExample& example,
                         const RewardConfig& reward, std::mt19937_64& rng,
                         TrainStats* stats, double* sampled_reward) {
    const Domain& domain = policy.domain();
    auto rollout = run_rollout(policy, tape, example, reward.horizon,
                               DecodeMode::sample, rng, true);
    const auto& steps = rollout.execution.steps;
    const std::size_t k = steps.size();

    ad::Var total;
    for (std::size_t kp = 0; kp < k; ++kp) {
        const State& s = steps[kp].state;
        std::vector<double> rewards;
        rewards.reserve(domain.actions().size());
        for (const Action& a : domain.actions()) {
            State s_next = domain.apply(s, a);
            rewards.push_back(shaped_reward(s, a, s_next, example.goal, domain,
                                            reward.delta));
        }
        if (rollout.hit_horizon && kp + 1 == k) {
            // Override the sampled final action's problem reward with -1.0.
            const Action& a = steps[kp].action;
            State s_next = domain.apply(s, a);
            double shaping = static_cast<double>(domain.distance(s, example.goal)) -
                             static_cast<double>(domain.distance(s_next, example.goal));
            rewards[static_cast<std::size_t>(rollout.chosen_indices[kp])] =
                -1.0 + shaping;
        }
        ad::Var dist = rollout.step_distributions[kp];
        ad::Var term = tape.dot_const(dist, std::move(rewards));
        if (reward.lambda != 0.0) {
            term = tape.add(term, tape.scale(tape.entropy(dist), reward.lambda));
        }
        total = total.valid() ? tape.add(total, term) : term;
        if (stats) {
            stats->visited_states += 1;
            stats->reward_queries += static_cast<long>(domain.actions().size());
        }
    }
    if (stats) stats->examples += 1;
    if (sampled_reward) {
        auto rs = execution_rewards(rollout, example.goal, domain, reward);
        *sampled_reward = std::accumulate(rs.begin(), rs.end(), 0.0);
    }
    return tape.scale(total, 1.0 / static_cast<double>(k));
}

ad::Var policy_gradient_objective(Policy& policy, ad::Tape& tape,
                                  const InstructionExample& example,
                                  const RewardConfig& reward,
                                  std::mt19937_64& rng, bool whole_episode,
                                  TrainStats* stats, double* sampled_reward) {
    const Domain& domain = policy.domain();
    auto rollout = run_rollout(policy, tape, example, reward.horizon,
                               DecodeMode::sample, rng, true);
    const std::size_t k = rollout.execution.steps.size();
    auto rewards = execution_rewards(rollout, example.goal, domain, reward);
    double episode_sum = std::accumulate(rewards.begin(), rewards.end(), 0.0);

    // Undiscounted returns: reward-to-go per step, or the episode sum.
    std::vector<double> returns(k);
    double tail = 0.0;
    for (std::size_t kp = k; kp-- > 0;) {
        tail += rewards[kp];
        returns[kp] = whole_episode ? episode_sum : tail;
    }

    ad::Var total;
    for (std::size_t kp = 0; kp < k; ++kp) {
        ad::Var logp = tape.log_(tape.pick(
            rollout.step_distributions[kp],
            static_cast<std::size_t>(rollout.chosen_indices[kp])));
        ad::Var term = tape.scale(logp, returns[kp]);
        total = total.valid() ? tape.add(total, term) : term;
        if (stats) {
            stats->visited_states += 1;
            stats->reward_queries += 1;
        }
    }
    if (stats) stats->examples += 1;
    if (sampled_reward) *sampled_reward = episode_sum;
    return tape.scale(total, 1.0 / static_cast<double>(k));
}

ad::Var contextual_bandit_objective(Policy& policy, ad::Tape& tape,
                                    const InstructionExample& example,
                                    const RewardConfig& reward,
                                    std::mt19937_64& rng, TrainStats* stats,
                                    double* sampled_reward) {
    const Domain& domain = policy.domain();
    auto rollout = run_rollout(policy, tape, example, reward.horizon,
                               DecodeMode::sample, rng, true);
    const std::size_t k = rollout.execution.steps.size();
    auto rewards = execution_rewards(rollout, example.goal, domain, reward);

    ad::Var total;
    for (std::size_t kp = 0; kp < k; ++kp) {
        ad::Var dist = rollout.step_distributions[kp];
        ad::Var logp = tape.log_(tape.pick(
            dist, static_cast<std::size_t>(rollout.chosen_indices[kp])));
        ad::Var term = tape.scale(logp, rewards[kp]);
        if (reward.lambda != 0.0) {
            term = tape.add(term, tape.scale(tape.entropy(dist), reward.lambda));
        }
        total = total.valid() ? tape.add(total, term) : term;
        if (stats) {
            stats->visited_states += 1;
            stats->reward_queries += 1;
        }
    }
    if (stats) stats->examples += 1;
    if (sampled_reward) {
        *sampled_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0);
    }
    return tape.scale(total, 1.0 / static_cast<double>(k));
}

ad::Var supervised_loss(Policy& policy, ad::Tape& tape,
                        const InstructionExample& example,
                        const std::vector<Action>& demonstration,
                        std::mt19937_64& rng) {
    if (demonstration.empty()) throw std::invalid_argument("empty demonstration");
    const Domain& domain = policy.domain();
    Policy::Decoder decoder(policy, tape, example.history, example.instruction,
                            example.start, true, rng);
    State s = example.start;
    ad::Var total;
    for (const Action& a : demonstration) {
        auto step = decoder.step(s);
        std::size_t idx = static_cast<std::size_t>(domain.action_index(a));
        ad::Var nll = tape.neg(tape.log_(tape.pick(step.distribution, idx)));
        total = total.valid() ? tape.add(total, nll) : nll;
        s = domain.apply(s, a);
        decoder.advance(a);
    }
    return total;
}

std::string epoch_log_to_json(const EpochLog& log) {
    nlohmann::ordered_json j;
    j["epoch"] = log.epoch;
    j["train_reward"] = log.train_reward;
    j["val_reward"] = log.val_reward;
    j["val_inst"] = log.val_inst;
    j["val_3utts"] = log.val_3utts;
    j["val_5utts"] = log.val_5utts;
    j["patience"] = log.patience;
    j["wall_seconds"] = log.wall_seconds;
    return j.dump();
}

TrainResult train(Policy& policy, const std::vector<InteractionRecord>& records,
                  const TrainConfig& config, TrainStats* stats,
                  std::ostream* log_stream) {
    auto [train_records, val_records] =
        split_validation(records, config.validation_fraction, config.seed);
    auto examples = make_examples(train_records);
    if (examples.empty()) throw std::invalid_argument("no training examples");

    TrainResult result;
    const Domain& domain = policy.domain();

    // Supervised: demonstrations generated once up front.
    std::vector<std::vector<Action>> demos;
    if (config.algorithm == Algorithm::supervised) {
        std::vector<InstructionExample> kept;
        for (const auto& ex : examples) {
            auto demo = generate_demonstration(ex.start, ex.goal, domain,
                                               config.demo_node_cap);
            if (!demo) {
                result.skipped_demos += 1;
                continue;
            }
            kept.push_back(ex);
            demos.push_back(std::move(*demo));
        }
        examples = std::move(kept);
        if (examples.empty()) throw std::runtime_error("no demonstrable examples");
    }

    std::mt19937_64 rng(config.seed);
    PatienceState patience;
    patience.remaining = config.initial_patience;
    std::string best_blob;
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), rng);
        policy.params().zero_grad();
        int in_batch = 0;
        double train_metric = 0.0;

        for (std::size_t oi : order) {
            const InstructionExample& ex = examples[oi];
            ad::Tape tape;
            double sampled = 0.0;
            ad::Var objective;
            switch (config.algorithm) {
                case Algorithm::sestra:
                    objective = sestra_objective(policy, tape, ex, config.reward,
                                                 rng, stats, &sampled);
                    break;
                case Algorithm::policy_gradient:
                    objective = policy_gradient_objective(
                        policy, tape, ex, config.reward, rng,
                        config.pg_whole_episode, stats, &sampled);
                    break;
                case Algorithm::contextual_bandit:
                    objective = contextual_bandit_objective(
                        policy, tape, ex, config.reward, rng, stats, &sampled);
                    break;
                case Algorithm::supervised: {
                    objective = supervised_loss(policy, tape, ex, demos[oi], rng);
                    sampled = -tape.scalar(objective);
                    break;
                }
            }
            train_metric += sampled;
            tape.backward(objective);
            if (++in_batch == config.batch_size) {
                if (config.algorithm == Algorithm::supervised) {
                    ad::adam_descend(policy.params(), config.learning_rate);
                } else {
                    ad::rmsprop_ascend(policy.params(), config.learning_rate);
                }
                policy.params().zero_grad();
                in_batch = 0;
            }
        }
        if (in_batch > 0) {
            if (config.algorithm == Algorithm::supervised) {
                ad::adam_descend(policy.params(), config.learning_rate);
            } else {
                ad::rmsprop_ascend(policy.params(), config.learning_rate);
            }
            policy.params().zero_grad();
        }

        EvalReport val = evaluate(policy, val_records, config.reward);
        double stop_metric = config.algorithm == Algorithm::supervised
                                 ? val.inst_accuracy
                                 : val.mean_instruction_reward;
        auto outcome = patience_step(patience, stop_metric,
                                     config.initial_patience,
                                     config.patience_growth);
        if (result.best_epoch < 0 || val.five_utt_accuracy > result.best_five_utts) {
            result.best_epoch = epoch;
            result.best_five_utts = val.five_utt_accuracy;
            best_blob = ad::params_to_string(policy.params(), policy.manifest_json());
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_reward = train_metric / static_cast<double>(examples.size());
        log.val_reward = val.mean_instruction_reward;
        log.val_inst = val.inst_accuracy;
        log.val_3utts = val.three_utt_accuracy;
        log.val_5utts = val.five_utt_accuracy;
        log.patience = patience.remaining;
        log.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        result.log.push_back(log);
        if (log_stream) *log_stream << epoch_log_to_json(log) << "\n";

        if (outcome.stop) break;
    }

    if (!best_blob.empty()) {
        ad::load_params_from_string(policy.params(), best_blob);
    }
    return result;
}

} // namespace scone
