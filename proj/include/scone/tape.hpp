#pragma once

#include "scone/tensor.hpp"

#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>

namespace scone::ad {

// A learned tensor with its gradient accumulator and optimizer slots.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor slot_m; // RMSProp running average / Adam first moment
    Tensor slot_v; // Adam second moment
    long steps = 0;

    explicit Parameter(std::string name_, Tensor value_)
        : name(std::move(name_)),
          value(std::move(value_)),
          grad(Tensor::zeros(value.shape)) {}

    void zero_grad() { grad.fill(0.0); }
};

class Tape;

// Handle to a node on a tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape over tensor-valued primitives. Single-threaded; one tape
// per forward pass. backward() runs one reverse sweep and accumulates
// gradients of parameter leaves into Parameter::grad.
class Tape {
public:
    Var leaf(Tensor value);
    Var zeros(std::size_t n);
    // Leaf bound to a parameter; repeated calls for the same parameter on one
    // tape return the same node.
    Var param(Parameter& p);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b); // elementwise
    Var scale(Var a, double c);
    Var add_const(Var a, double c);
    Var neg(Var a) { return scale(a, -1.0); }

    // y = W x, W is (m x n), x is (n)
    Var matvec(Var w, Var x);
    // row r of a matrix node (embedding lookup)
    Var row(Var m, std::size_t r);
    Var slice(Var a, std::size_t start, std::size_t len);
    Var concat(std::span<const Var> parts);

    Var tanh_(Var a);
    Var sigmoid_(Var a);
    Var log_(Var a);

    // s[i] = keys[i] . q
    Var dots(std::span<const Var> keys, Var q);
    // z = sum_i alpha[i] * keys[i]
    Var weighted_sum(std::span<const Var> keys, Var alpha);
    // out[i] = a[idx[i]]
    Var gather(Var a, std::vector<std::size_t> idx);
    Var pick(Var a, std::size_t i) { return gather(a, {i}); }

    // scalar: p . r for a constant vector r
    Var dot_const(Var p, std::vector<double> r);
    Var sum(Var a);
    // numerically stable softmax (max subtraction)
    Var softmax(Var a);
    // scalar: -sum p log p, probabilities clamped at 1e-12 before log
    Var entropy(Var p);

    // Inverted dropout; draws one mask from rng. Identity when rate == 0.
    Var dropout(Var a, double rate, std::mt19937_64& rng);

    void backward(Var loss);

    const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
    const Tensor& grad(Var v) const { return nodes_.at(v.id).grad; }
    double scalar(Var v) const;
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void()> backprop; // null for leaves
        Parameter* bound = nullptr;
    };

    Var push(Tensor value, std::function<void()> backprop = nullptr);
    Tensor& grad_mut(Var v) { return nodes_[v.id].grad; }

    std::vector<Node> nodes_;
    std::map<Parameter*, Var> param_nodes_;
};

} // namespace scone::ad
