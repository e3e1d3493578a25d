#include "scone/tape.hpp"

#include <algorithm>
#include <cmath>

namespace scone::ad {

namespace {

void check_finite(const Tensor& t, const char* what) {
    for (double v : t.data) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(std::string("non-finite value in ") + what);
        }
    }
}

} // namespace

Var Tape::push(Tensor value, std::function<void()> backprop) {
    Node n;
    n.grad = Tensor::zeros(value.shape);
    n.value = std::move(value);
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value) { return push(std::move(value)); }

Var Tape::zeros(std::size_t n) { return push(Tensor::zeros({n})); }

Var Tape::param(Parameter& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return it->second;
    Var v = push(p.value);
    nodes_[v.id].bound = &p;
    param_nodes_.emplace(&p, v);
    return v;
}

Var Tape::add(Var a, Var b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (!va.same_shape(vb)) throw std::invalid_argument("add: shape mismatch");
    Tensor out = va;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, a, b] {
        const Tensor& g = grad(v);
        Tensor& ga = grad_mut(a);
        Tensor& gb = grad_mut(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] += g[i];
        }
    };
    return v;
}

Var Tape::sub(Var a, Var b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (!va.same_shape(vb)) throw std::invalid_argument("sub: shape mismatch");
    Tensor out = va;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, a, b] {
        const Tensor& g = grad(v);
        Tensor& ga = grad_mut(a);
        Tensor& gb = grad_mut(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] -= g[i];
        }
    };
    return v;
}

Var Tape::mul(Var a, Var b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (!va.same_shape(vb)) throw std::invalid_argument("mul: shape mismatch");
    Tensor out = va;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, a, b] {
        const Tensor& g = grad(v);
        const Tensor& va2 = value(a);
        const Tensor& vb2 = value(b);
        Tensor& ga = grad_mut(a);
        Tensor& gb = grad_mut(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * vb2[i];
            gb[i] += g[i] * va2[i];
        }
    };
    return v;
}

Var Tape::scale(Var a, double c) {
    Tensor out = value(a);
    for (double& x : out.data) x *= c;
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, a, c] {
        const Tensor& g = grad(v);
        Tensor& ga = grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
    };
    return v;
}

Var Tape::add_const(Var a, double c) {
    Tensor out = value(a);
    for (double& x : out.data) x += c;
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, a] {
        const Tensor& g = grad(v);
        Tensor& ga = grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    };
    return v;
}

Var Tape::matvec(Var w, Var x) {
    const Tensor& vw = value(w);
    const Tensor& vx = value(x);
    if (vw.shape.size() != 2 || vx.shape.size() != 1 || vw.cols() != vx.size()) {
        throw std::invalid_argument("matvec: shape mismatch");
    }
    std::size_t m = vw.rows();
    std::size_t n = vw.cols();
    Tensor out = Tensor::zeros({m});
    for (std::size_t r = 0; r < m; ++r) {
        double acc = 0.0;
        const double* wr = vw.data.data() + r * n;
        for (std::size_t c = 0; c < n; ++c) acc += wr[c] * vx[c];
        out[r] = acc;
    }
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, w, x, m, n] {
        const Tensor& g = grad(v);
        const Tensor& vw2 = value(w);
        const Tensor& vx2 = value(x);
        Tensor& gw = grad_mut(w);
        Tensor& gx = grad_mut(x);
        for (std::size_t r = 0; r < m; ++r) {
            double gr = g[r];
            double* gwr = gw.data.data() + r * n;
            const double* wr = vw2.data.data() + r * n;
            for (std::size_t c = 0; c < n; ++c) {
                gwr[c] += gr * vx2[c];
                gx[c] += gr * wr[c];
            }
        }
    };
    return v;
}

Var Tape::row(Var m, std::size_t r) {
    const Tensor& vm = value(m);
    if (vm.shape.size() != 2 || r >= vm.rows()) {
        throw std::invalid_argument("row: bad index");
    }
    std::size_t n = vm.cols();
    Tensor out{{n}, std::vector<double>(vm.data.begin() + r * n,
                                        vm.data.begin() + (r + 1) * n)};
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, m, r, n] {
        const Tensor& g = grad(v);
        Tensor& gm = grad_mut(m);
        for (std::size_t c = 0; c < n; ++c) gm[r * n + c] += g[c];
    };
    return v;
}

Var Tape::slice(Var a, std::size_t start, std::size_t len) {
    const Tensor& va = value(a);
    if (start + len > va.size()) throw std::invalid_argument("slice: out of range");
    Tensor out{{len}, std::vector<double>(va.data.begin() + start,
                                          va.data.begin() + start + len)};
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, a, start, len] {
        const Tensor& g = grad(v);
        Tensor& ga = grad_mut(a);
        for (std::size_t i = 0; i < len; ++i) ga[start + i] += g[i];
    };
    return v;
}

Var Tape::concat(std::span<const Var> parts) {
    std::size_t total = 0;
    for (Var p : parts) total += value(p).size();
    Tensor out = Tensor::zeros({total});
    std::size_t off = 0;
    for (Var p : parts) {
        const Tensor& vp = value(p);
        std::copy(vp.data.begin(), vp.data.end(), out.data.begin() + off);
        off += vp.size();
    }
    std::vector<Var> ps(parts.begin(), parts.end());
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, ps = std::move(ps)] {
        const Tensor& g = grad(v);
        std::size_t off2 = 0;
        for (Var p : ps) {
            Tensor& gp = grad_mut(p);
            for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[off2 + i];
            off2 += gp.size();
        }
    };
    return v;
}

Var Tape::tanh_(Var a) {
    Tensor out = value(a);
    for (double& x : out.data) x = std::tanh(x);
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, a] {
        const Tensor& g = grad(v);
        const Tensor& y = value(v);
        Tensor& ga = grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * (1.0 - y[i] * y[i]);
        }
    };
    return v;
}

Var Tape::sigmoid_(Var a) {
    Tensor out = value(a);
    for (double& x : out.data) x = 1.0 / (1.0 + std::exp(-x));
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, a] {
        const Tensor& g = grad(v);
        const Tensor& y = value(v);
        Tensor& ga = grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * y[i] * (1.0 - y[i]);
        }
    };
    return v;
}

Var Tape::log_(Var a) {
    Tensor out = value(a);
    for (double& x : out.data) x = std::log(std::max(x, 1e-12));
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, a] {
        const Tensor& g = grad(v);
        const Tensor& va = value(a);
        Tensor& ga = grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] / std::max(va[i], 1e-12);
        }
    };
    return v;
}

Var Tape::dots(std::span<const Var> keys, Var q) {
    if (keys.empty()) throw std::invalid_argument("dots: empty key set");
    std::size_t n = keys.size();
    const Tensor& vq = value(q);
    Tensor out = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i) {
        const Tensor& k = value(keys[i]);
        if (!k.same_shape(vq)) throw std::invalid_argument("dots: shape mismatch");
        double acc = 0.0;
        for (std::size_t j = 0; j < k.size(); ++j) acc += k[j] * vq[j];
        out[i] = acc;
    }
    std::vector<Var> ks(keys.begin(), keys.end());
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, ks = std::move(ks), q] {
        const Tensor& g = grad(v);
        const Tensor& vq2 = value(q);
        Tensor& gq = grad_mut(q);
        for (std::size_t i = 0; i < ks.size(); ++i) {
            const Tensor& k = value(ks[i]);
            Tensor& gk = grad_mut(ks[i]);
            for (std::size_t j = 0; j < k.size(); ++j) {
                gk[j] += g[i] * vq2[j];
                gq[j] += g[i] * k[j];
            }
        }
    };
    return v;
}

Var Tape::weighted_sum(std::span<const Var> keys, Var alpha) {
    if (keys.empty()) throw std::invalid_argument("weighted_sum: empty key set");
    const Tensor& va = value(alpha);
    if (va.size() != keys.size()) {
        throw std::invalid_argument("weighted_sum: weight count mismatch");
    }
    std::size_t d = value(keys[0]).size();
    Tensor out = Tensor::zeros({d});
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const Tensor& k = value(keys[i]);
        for (std::size_t j = 0; j < d; ++j) out[j] += va[i] * k[j];
    }
    std::vector<Var> ks(keys.begin(), keys.end());
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, ks = std::move(ks), alpha, d] {
        const Tensor& g = grad(v);
        const Tensor& va2 = value(alpha);
        Tensor& ga = grad_mut(alpha);
        for (std::size_t i = 0; i < ks.size(); ++i) {
            const Tensor& k = value(ks[i]);
            Tensor& gk = grad_mut(ks[i]);
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                acc += g[j] * k[j];
                gk[j] += g[j] * va2[i];
            }
            ga[i] += acc;
        }
    };
    return v;
}

Var Tape::gather(Var a, std::vector<std::size_t> idx) {
    const Tensor& va = value(a);
    Tensor out = Tensor::zeros({idx.size()});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= va.size()) throw std::invalid_argument("gather: out of range");
        out[i] = va[idx[i]];
    }
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, a, idx = std::move(idx)] {
        const Tensor& g = grad(v);
        Tensor& ga = grad_mut(a);
        for (std::size_t i = 0; i < idx.size(); ++i) ga[idx[i]] += g[i];
    };
    return v;
}

Var Tape::dot_const(Var p, std::vector<double> r) {
    const Tensor& vp = value(p);
    if (vp.size() != r.size()) throw std::invalid_argument("dot_const: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) acc += vp[i] * r[i];
    Var v = push(Tensor::vector({acc}));
    nodes_[v.id].backprop = [this, v, p, r = std::move(r)] {
        double g = grad(v)[0];
        Tensor& gp = grad_mut(p);
        for (std::size_t i = 0; i < r.size(); ++i) gp[i] += g * r[i];
    };
    return v;
}

Var Tape::sum(Var a) {
    const Tensor& va = value(a);
    double acc = 0.0;
    for (double x : va.data) acc += x;
    Var v = push(Tensor::vector({acc}));
    nodes_[v.id].backprop = [this, v, a] {
        double g = grad(v)[0];
        Tensor& ga = grad_mut(a);
        for (double& x : ga.data) x += g;
    };
    return v;
}

Var Tape::softmax(Var a) {
    const Tensor& va = value(a);
    if (va.size() == 0) throw std::invalid_argument("softmax: empty input");
    double mx = *std::max_element(va.data.begin(), va.data.end());
    Tensor out = va;
    double z = 0.0;
    for (double& x : out.data) {
        x = std::exp(x - mx);
        z += x;
    }
    for (double& x : out.data) x /= z;
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, a] {
        const Tensor& g = grad(v);
        const Tensor& y = value(v);
        Tensor& ga = grad_mut(a);
        double dot = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += y[i] * (g[i] - dot);
        }
    };
    return v;
}

Var Tape::entropy(Var p) {
    const Tensor& vp = value(p);
    double sum_p = 0.0;
    double h = 0.0;
    for (double x : vp.data) {
        sum_p += x;
        if (x > 0.0) h -= x * std::log(std::max(x, 1e-12));
    }
    if (std::abs(sum_p - 1.0) > 1e-6) {
        throw std::invalid_argument("entropy: input not normalized");
    }
    Var v = push(Tensor::vector({h}));
    nodes_[v.id].backprop = [this, v, p] {
        double g = grad(v)[0];
        const Tensor& vp2 = value(p);
        Tensor& gp = grad_mut(p);
        for (std::size_t i = 0; i < gp.size(); ++i) {
            gp[i] += g * (-(std::log(std::max(vp2[i], 1e-12)) + 1.0));
        }
    };
    return v;
}

Var Tape::dropout(Var a, double rate, std::mt19937_64& rng) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: bad rate");
    if (rate == 0.0) return a;
    const Tensor& va = value(a);
    std::vector<double> mask(va.size());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double keep = 1.0 - rate;
    for (double& m : mask) m = (u(rng) < rate) ? 0.0 : 1.0 / keep;
    Tensor out = va;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    Var v = push(std::move(out));
    nodes_[v.id].backprop = [this, v, a, mask = std::move(mask)] {
        const Tensor& g = grad(v);
        Tensor& ga = grad_mut(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
    };
    return v;
}

double Tape::scalar(Var v) const {
    const Tensor& t = value(v);
    if (t.size() != 1) throw std::invalid_argument("scalar: not a scalar node");
    return t[0];
}

void Tape::backward(Var loss) {
    const Tensor& t = value(loss);
    if (t.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
    grad_mut(loss)[0] = 1.0;
    for (int i = loss.id; i >= 0; --i) {
        if (nodes_[i].backprop) nodes_[i].backprop();
    }
    for (auto& [p, v] : param_nodes_) {
        const Tensor& g = grad(v);
        check_finite(g, p->name.c_str());
        for (std::size_t i = 0; i < g.size(); ++i) p->grad[i] += g[i];
    }
}

} // namespace scone::ad
