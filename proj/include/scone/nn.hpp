#pragma once

#include "scone/tape.hpp"

#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace scone::ad {

// Glorot uniform init on [-sqrt(6/(rows+cols)), sqrt(6/(rows+cols))].
Tensor glorot_init(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

// Ordered collection of named parameters. Iteration order is name order,
// which makes serialization and optimizer sweeps deterministic.
class ParamStore {
public:
    Parameter& add(const std::string& name, Tensor init);
    Parameter& add_glorot(const std::string& name, std::size_t rows,
                          std::size_t cols, std::mt19937_64& rng);
    Parameter& add_zeros(const std::string& name, std::vector<std::size_t> shape);

    Parameter& at(const std::string& name);
    const Parameter& at(const std::string& name) const;
    bool contains(const std::string& name) const;

    void zero_grad();
    std::size_t total_values() const;

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }
    std::size_t size() const { return params_.size(); }

private:
    std::map<std::string, std::unique_ptr<Parameter>> params_;
};

// Single-layer LSTM cell. Gate order in the stacked weights: input, forget,
// candidate, output. Biases start at zero.
struct LstmCell {
    Parameter* w_x = nullptr; // (4H x X)
    Parameter* w_h = nullptr; // (4H x H)
    Parameter* bias = nullptr; // (4H)
    std::size_t hidden = 0;

    static LstmCell create(ParamStore& store, const std::string& prefix,
                           std::size_t input, std::size_t hidden,
                           std::mt19937_64& rng);
    static LstmCell lookup(ParamStore& store, const std::string& prefix,
                           std::size_t hidden);

    struct State {
        Var h;
        Var c;
    };
    State initial(Tape& tape) const;
    State step(Tape& tape, Var x, State prev) const;
};

struct OptimizerConfig {
    double rmsprop_decay = 0.9;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double epsilon = 1e-8;
};

// theta += lr * g / sqrt(E[g^2]); gradient ascent for reward maximization.
void rmsprop_ascend(ParamStore& params, double learning_rate,
                    const OptimizerConfig& cfg = {});
// theta -= lr * m_hat / (sqrt(v_hat) + eps); descent for NLL minimization.
void adam_descend(ParamStore& params, double learning_rate,
                  const OptimizerConfig& cfg = {});

// Versioned named-tensor container. Values are serialized as hexfloat
// strings, so save/load round trips are bit-exact and the output bytes are
// stable across runs. `manifest` carries arbitrary config JSON text.
void save_params(const ParamStore& params, const std::string& manifest_json,
                 const std::string& path);
std::string load_params(ParamStore& params, const std::string& path);
// Serialize to an in-memory string (same bytes as the file contents).
std::string params_to_string(const ParamStore& params,
                             const std::string& manifest_json);
// Restore from a container string; returns the manifest JSON text.
std::string load_params_from_string(ParamStore& params, const std::string& blob);

} // namespace scone::ad
