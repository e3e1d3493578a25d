#pragma once

#include "scone/data.hpp"
#include "scone/domains.hpp"
#include "scone/env.hpp"
#include "scone/nn.hpp"

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace scone {

struct ModelConfig {
    int word_emb = 50;
    int action_emb = 50; // per action component; embedded action is 3x this
    int item_emb = 10;   // colors / shapes
    int pos_emb = 10;
    int enc_hidden = 100; // instruction encoder, per direction
    int dec_hidden = 100;
    int state_hidden = 20; // world-state encoder (Alchemy 20, Scene 5)
    double dropout = 0.1;
};

ModelConfig default_model_config(DomainKind kind);
std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& json_text);

struct AttentionHead {
    std::vector<std::string> labels;
    std::vector<double> weights;
};

// One decode step's attention: current instruction, previous instructions
// (absent on the first instruction), and two heads over each of the initial
// and current states.
struct AttentionRecord {
    AttentionHead current_instruction;
    std::optional<AttentionHead> previous_instructions;
    AttentionHead initial_state_1;
    AttentionHead initial_state_2;
    AttentionHead current_state_1;
    AttentionHead current_state_2;
};

enum class DecodeMode { greedy, sample };

// The attention encoder-decoder policy over one domain's action space.
class Policy {
public:
    Policy(std::shared_ptr<const Domain> domain, Vocabulary vocab,
           ModelConfig config, std::uint64_t seed);

    const Domain& domain() const { return *domain_; }
    const Vocabulary& vocab() const { return vocab_; }
    const ModelConfig& config() const { return config_; }
    ad::ParamStore& params() { return params_; }
    const ad::ParamStore& params() const { return params_; }

    // Width of the decoder input h_k (W^d is square of this size).
    int decoder_input_size() const { return dec_input_; }
    int state_vector_size() const { return state_vec_; }

    struct EncodedInstructions {
        std::vector<ad::Var> current;
        std::vector<ad::Var> previous;
        std::vector<std::string> current_labels;
        std::vector<std::string> previous_labels;
    };
    EncodedInstructions encode_instructions(ad::Tape& tape,
                                            const std::vector<Tokens>& history,
                                            const Tokens& current, bool training,
                                            std::mt19937_64& rng);

    struct StateEncoding {
        std::vector<ad::Var> keys;
        std::vector<std::string> labels;
    };
    StateEncoding encode_state(ad::Tape& tape, const State& s, bool training,
                               std::mt19937_64& rng);

    // Stateful decoder for one instruction. Call step() to get the action
    // distribution, then advance() with the chosen action.
    class Decoder {
    public:
        Decoder(Policy& policy, ad::Tape& tape, const std::vector<Tokens>& history,
                const Tokens& current, const State& initial_state, bool training,
                std::mt19937_64& rng);

        struct StepResult {
            ad::Var distribution; // over the canonical action list
            AttentionRecord attention;
        };
        StepResult step(const State& current_state);
        void advance(const Action& taken);

    private:
        ad::Var state_attention(ad::Var query, const StateEncoding& enc,
                                ad::Parameter& w, AttentionHead& head_out);

        Policy& policy_;
        ad::Tape& tape_;
        bool training_;
        std::mt19937_64& rng_;
        EncodedInstructions enc_;
        StateEncoding init_enc_;
        ad::Var dec_h_, dec_c_;
        std::optional<Action> prev_action_; // nullopt until advance(): BEG
        std::optional<State> cached_state_;
        StateEncoding cached_state_enc_;
    };

    void save(const std::string& path) const;
    static Policy load(const std::string& path);

    std::string manifest_json() const;

private:
    friend class Decoder;

    void build_params(std::uint64_t seed);

    std::shared_ptr<const Domain> domain_;
    Vocabulary vocab_;
    ModelConfig config_;
    ad::ParamStore params_;
    ad::LstmCell enc_fwd_, enc_bwd_, dec_cell_;
    ad::LstmCell state_cell_, state_cell_bwd_; // Alchemy / Scene encoders
    int state_vec_ = 0;
    int dec_input_ = 0;
    // per-action component indices into the score tables, canonical order
    std::vector<std::size_t> score_type_idx_, score_arg1_idx_, score_arg2_idx_;
};

struct RolloutResult {
    Execution execution;
    State final_state;
    std::vector<ad::Var> step_distributions;
    std::vector<int> chosen_indices; // into Domain::actions()
    std::vector<AttentionRecord> attention;
    bool hit_horizon = false; // reached M actions without STOP
};

RolloutResult run_rollout(Policy& policy, ad::Tape& tape,
                          const InstructionExample& example, int horizon,
                          DecodeMode mode, std::mt19937_64& rng, bool training);

} // namespace scone
