#include "scone/nn.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace scone::ad {

Tensor glorot_init(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("glorot_init: zero dimension");
    double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-bound, bound);
    Tensor t = Tensor::zeros({rows, cols});
    for (double& x : t.data) x = u(rng);
    return t;
}

Parameter& ParamStore::add(const std::string& name, Tensor init) {
    if (params_.contains(name)) throw std::invalid_argument("duplicate parameter: " + name);
    auto p = std::make_unique<Parameter>(name, std::move(init));
    Parameter& ref = *p;
    params_.emplace(name, std::move(p));
    return ref;
}

Parameter& ParamStore::add_glorot(const std::string& name, std::size_t rows,
                                  std::size_t cols, std::mt19937_64& rng) {
    return add(name, glorot_init(rows, cols, rng));
}

Parameter& ParamStore::add_zeros(const std::string& name, std::vector<std::size_t> shape) {
    return add(name, Tensor::zeros(std::move(shape)));
}

Parameter& ParamStore::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("no such parameter: " + name);
    return *it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("no such parameter: " + name);
    return *it->second;
}

bool ParamStore::contains(const std::string& name) const {
    return params_.contains(name);
}

void ParamStore::zero_grad() {
    for (auto& [name, p] : params_) p->zero_grad();
}

std::size_t ParamStore::total_values() const {
    std::size_t n = 0;
    for (const auto& [name, p] : params_) n += p->value.size();
    return n;
}

LstmCell LstmCell::create(ParamStore& store, const std::string& prefix,
                          std::size_t input, std::size_t hidden,
                          std::mt19937_64& rng) {
    LstmCell cell;
    cell.hidden = hidden;
    cell.w_x = &store.add_glorot(prefix + ".w_x", 4 * hidden, input, rng);
    cell.w_h = &store.add_glorot(prefix + ".w_h", 4 * hidden, hidden, rng);
    cell.bias = &store.add_zeros(prefix + ".b", {4 * hidden});
    return cell;
}

LstmCell LstmCell::lookup(ParamStore& store, const std::string& prefix,
                          std::size_t hidden) {
    LstmCell cell;
    cell.hidden = hidden;
    cell.w_x = &store.at(prefix + ".w_x");
    cell.w_h = &store.at(prefix + ".w_h");
    cell.bias = &store.at(prefix + ".b");
    return cell;
}

LstmCell::State LstmCell::initial(Tape& tape) const {
    return {tape.zeros(hidden), tape.zeros(hidden)};
}

LstmCell::State LstmCell::step(Tape& tape, Var x, State prev) const {
    Var g = tape.add(tape.add(tape.matvec(tape.param(*w_x), x),
                              tape.matvec(tape.param(*w_h), prev.h)),
                     tape.param(*bias));
    Var i = tape.sigmoid_(tape.slice(g, 0, hidden));
    Var f = tape.sigmoid_(tape.slice(g, hidden, hidden));
    Var cand = tape.tanh_(tape.slice(g, 2 * hidden, hidden));
    Var o = tape.sigmoid_(tape.slice(g, 3 * hidden, hidden));
    Var c = tape.add(tape.mul(f, prev.c), tape.mul(i, cand));
    Var h = tape.mul(o, tape.tanh_(c));
    return {h, c};
}

namespace {

void check_grad_finite(const Parameter& p) {
    for (double g : p.grad.data) {
        if (!std::isfinite(g)) {
            throw std::runtime_error("non-finite gradient for " + p.name);
        }
    }
}

void ensure_slot(Tensor& slot, const Tensor& like) {
    if (slot.shape != like.shape) slot = Tensor::zeros(like.shape);
}

std::string hexfloat(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

} // namespace

void rmsprop_ascend(ParamStore& params, double learning_rate,
                    const OptimizerConfig& cfg) {
    for (auto& [name, pp] : params) {
        Parameter& p = *pp;
        check_grad_finite(p);
        ensure_slot(p.slot_v, p.value);
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            double g = p.grad[i];
            p.slot_v[i] = cfg.rmsprop_decay * p.slot_v[i] +
                          (1.0 - cfg.rmsprop_decay) * g * g;
            p.value[i] += learning_rate * g / (std::sqrt(p.slot_v[i]) + cfg.epsilon);
        }
        p.steps += 1;
    }
}

void adam_descend(ParamStore& params, double learning_rate,
                  const OptimizerConfig& cfg) {
    for (auto& [name, pp] : params) {
        Parameter& p = *pp;
        check_grad_finite(p);
        ensure_slot(p.slot_m, p.value);
        ensure_slot(p.slot_v, p.value);
        p.steps += 1;
        double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(p.steps));
        double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(p.steps));
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            double g = p.grad[i];
            p.slot_m[i] = cfg.adam_beta1 * p.slot_m[i] + (1.0 - cfg.adam_beta1) * g;
            p.slot_v[i] = cfg.adam_beta2 * p.slot_v[i] + (1.0 - cfg.adam_beta2) * g * g;
            double m_hat = p.slot_m[i] / bc1;
            double v_hat = p.slot_v[i] / bc2;
            p.value[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
}

std::string params_to_string(const ParamStore& params,
                             const std::string& manifest_json) {
    nlohmann::ordered_json doc;
    doc["format"] = "scone-params";
    doc["version"] = 1;
    doc["manifest"] = manifest_json.empty()
        ? nlohmann::ordered_json::object()
        : nlohmann::ordered_json::parse(manifest_json);
    nlohmann::ordered_json tensors = nlohmann::ordered_json::object();
    for (const auto& [name, p] : params) {
        nlohmann::ordered_json t;
        t["shape"] = p->value.shape;
        nlohmann::ordered_json vals = nlohmann::ordered_json::array();
        for (double v : p->value.data) vals.push_back(hexfloat(v));
        t["data"] = std::move(vals);
        tensors[name] = std::move(t);
    }
    doc["tensors"] = std::move(tensors);
    return doc.dump(1);
}

void save_params(const ParamStore& params, const std::string& manifest_json,
                 const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << params_to_string(params, manifest_json);
}

std::string load_params(ParamStore& params, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_params_from_string(params, buf.str());
}

std::string load_params_from_string(ParamStore& params, const std::string& blob) {
    nlohmann::json doc = nlohmann::json::parse(blob);
    if (doc.value("format", "") != "scone-params" || doc.value("version", 0) != 1) {
        throw std::runtime_error("unrecognized parameter container");
    }
    for (auto& [name, t] : doc.at("tensors").items()) {
        std::vector<std::size_t> shape = t.at("shape").get<std::vector<std::size_t>>();
        std::vector<double> data;
        data.reserve(t.at("data").size());
        for (const auto& s : t.at("data")) {
            data.push_back(std::strtod(s.get<std::string>().c_str(), nullptr));
        }
        Tensor tensor{std::move(shape), std::move(data)};
        if (params.contains(name)) {
            Parameter& p = params.at(name);
            if (p.value.shape != tensor.shape) {
                throw std::runtime_error("shape mismatch loading " + name);
            }
            p.value = std::move(tensor);
        } else {
            params.add(name, std::move(tensor));
        }
    }
    return doc.at("manifest").dump();
}

} // namespace scone::ad
