#include "scone/policy.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace scone {

using ad::Tape;
using ad::Var;

ModelConfig default_model_config(DomainKind kind) {
    ModelConfig cfg;
    switch (kind) {
        case DomainKind::alchemy: cfg.state_hidden = 20; break;
        case DomainKind::scene: cfg.state_hidden = 5; break;
        case DomainKind::tangrams: cfg.state_hidden = 0; break; // no state RNN
    }
    return cfg;
}

std::string model_config_to_json(const ModelConfig& cfg) {
    nlohmann::ordered_json j;
    j["word_emb"] = cfg.word_emb;
    j["action_emb"] = cfg.action_emb;
    j["item_emb"] = cfg.item_emb;
    j["pos_emb"] = cfg.pos_emb;
    j["enc_hidden"] = cfg.enc_hidden;
    j["dec_hidden"] = cfg.dec_hidden;
    j["state_hidden"] = cfg.state_hidden;
    j["dropout"] = cfg.dropout;
    return j.dump();
}

ModelConfig model_config_from_json(const std::string& json_text) {
    auto j = nlohmann::json::parse(json_text);
    ModelConfig cfg;
    cfg.word_emb = j.value("word_emb", cfg.word_emb);
    cfg.action_emb = j.value("action_emb", cfg.action_emb);
    cfg.item_emb = j.value("item_emb", cfg.item_emb);
    cfg.pos_emb = j.value("pos_emb", cfg.pos_emb);
    cfg.enc_hidden = j.value("enc_hidden", cfg.enc_hidden);
    cfg.dec_hidden = j.value("dec_hidden", cfg.dec_hidden);
    cfg.state_hidden = j.value("state_hidden", cfg.state_hidden);
    cfg.dropout = j.value("dropout", cfg.dropout);
    return cfg;
}

Policy::Policy(std::shared_ptr<const Domain> domain, Vocabulary vocab,
               ModelConfig config, std::uint64_t seed)
    : domain_(std::move(domain)), vocab_(std::move(vocab)), config_(config) {
    if (!domain_) throw std::invalid_argument("Policy: null domain");
    build_params(seed);
}

void Policy::build_params(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Domain& d = *domain_;
    const ModelConfig& cfg = config_;
    const int n_types = d.num_action_types();
    const int n_arg1 = d.positions() + 1; // NULL + positions
    const int n_arg2 = static_cast<int>(d.alphabet().size()) + 1;

    switch (d.kind()) {
        case DomainKind::alchemy:
            state_vec_ = cfg.state_hidden + cfg.pos_emb;
            break;
        case DomainKind::scene:
            state_vec_ = 2 * cfg.state_hidden + 2 * cfg.item_emb + cfg.pos_emb;
            break;
        case DomainKind::tangrams:
            state_vec_ = cfg.pos_emb + cfg.item_emb;
            break;
    }
    const int enc2 = 2 * cfg.enc_hidden;
    dec_input_ = 2 * enc2 + 2 * (2 * state_vec_) + 3 * cfg.action_emb;

    params_.add_glorot("word_emb", vocab_.size(), cfg.word_emb, rng);
    enc_fwd_ = ad::LstmCell::create(params_, "enc_fwd", cfg.word_emb, cfg.enc_hidden, rng);
    enc_bwd_ = ad::LstmCell::create(params_, "enc_bwd", cfg.word_emb, cfg.enc_hidden, rng);
    dec_cell_ = ad::LstmCell::create(params_, "dec", dec_input_, cfg.dec_hidden, rng);

    params_.add_glorot("attn.w_c", enc2, cfg.dec_hidden, rng);
    params_.add_glorot("attn.w_p", enc2, cfg.dec_hidden + enc2, rng);
    params_.add_glorot("attn.w_s_init_1", state_vec_, cfg.dec_hidden + enc2, rng);
    params_.add_glorot("attn.w_s_init_2", state_vec_, cfg.dec_hidden + enc2, rng);
    params_.add_glorot("attn.w_s_cur_1", state_vec_, cfg.dec_hidden + enc2, rng);
    params_.add_glorot("attn.w_s_cur_2", state_vec_, cfg.dec_hidden + enc2, rng);

    params_.add_glorot("dec_in.w", dec_input_, dec_input_, rng); // square
    params_.add_zeros("dec_in.b", {static_cast<std::size_t>(dec_input_)});
    params_.add_glorot("out.w_a", cfg.dec_hidden, cfg.dec_hidden, rng); // square
    params_.add_glorot("out.b_type", n_types, cfg.dec_hidden, rng);
    params_.add_glorot("out.b_arg1", n_arg1, cfg.dec_hidden, rng);
    params_.add_glorot("out.b_arg2", n_arg2, cfg.dec_hidden, rng);

    // Last type row is the reserved BEG embedding; it is never scored.
    params_.add_glorot("act_emb.type", n_types + 1, cfg.action_emb, rng);
    params_.add_glorot("act_emb.arg1", n_arg1, cfg.action_emb, rng);
    params_.add_glorot("act_emb.arg2", n_arg2, cfg.action_emb, rng);

    const int n_alpha = static_cast<int>(d.alphabet().size());
    switch (d.kind()) {
        case DomainKind::alchemy:
            params_.add_glorot("st.color_emb", n_alpha, cfg.item_emb, rng);
            params_.add_glorot("st.pos_emb", d.positions(), cfg.pos_emb, rng);
            state_cell_ = ad::LstmCell::create(params_, "st.beaker", cfg.item_emb,
                                               cfg.state_hidden, rng);
            break;
        case DomainKind::scene:
            // Row 0 embeds the NULL marker.
            params_.add_glorot("st.color_emb", n_alpha + 1, cfg.item_emb, rng);
            params_.add_glorot("st.pos_emb", d.positions(), cfg.pos_emb, rng);
            state_cell_ = ad::LstmCell::create(
                params_, "st.fwd", 2 * cfg.item_emb + cfg.pos_emb, cfg.state_hidden, rng);
            state_cell_bwd_ = ad::LstmCell::create(
                params_, "st.bwd", 2 * cfg.item_emb + cfg.pos_emb, cfg.state_hidden, rng);
            break;
        case DomainKind::tangrams:
            params_.add_glorot("st.shape_emb", n_alpha, cfg.item_emb, rng);
            params_.add_glorot("st.pos_emb", d.positions(), cfg.pos_emb, rng);
            params_.add_glorot("st.h_null", 1, state_vec_, rng);
            break;
    }

    score_type_idx_.clear();
    score_arg1_idx_.clear();
    score_arg2_idx_.clear();
    for (const Action& a : d.actions()) {
        score_type_idx_.push_back(static_cast<std::size_t>(a.type));
        score_arg1_idx_.push_back(static_cast<std::size_t>(a.arg1));
        score_arg2_idx_.push_back(static_cast<std::size_t>(a.arg2));
    }
}

Policy::EncodedInstructions Policy::encode_instructions(
    Tape& tape, const std::vector<Tokens>& history, const Tokens& current,
    bool training, std::mt19937_64& rng) {
    if (current.empty()) throw std::invalid_argument("empty current instruction");

    // Previous instructions joined by DELIM1, then one DELIM2, then the
    // current instruction. First instructions get no history window at all.
    std::vector<int> ids;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (i) {
            ids.push_back(Vocabulary::kDelim1);
            labels.push_back(vocab_.token(Vocabulary::kDelim1));
        }
        for (const auto& tok : history[i]) {
            ids.push_back(vocab_.lookup(tok));
            labels.push_back(tok);
        }
    }
    if (!history.empty()) {
        ids.push_back(Vocabulary::kDelim2);
        labels.push_back(vocab_.token(Vocabulary::kDelim2));
    }
    const std::size_t current_start = ids.size();
    for (const auto& tok : current) {
        ids.push_back(vocab_.lookup(tok));
        labels.push_back(tok);
    }

    Var emb_table = tape.param(params_.at("word_emb"));
    std::vector<Var> inputs;
    inputs.reserve(ids.size());
    for (int id : ids) inputs.push_back(tape.row(emb_table, static_cast<std::size_t>(id)));

    std::vector<Var> fwd(ids.size()), bwd(ids.size());
    auto fs = enc_fwd_.initial(tape);
    for (std::size_t j = 0; j < ids.size(); ++j) {
        fs = enc_fwd_.step(tape, inputs[j], fs);
        fwd[j] = fs.h;
    }
    auto bs = enc_bwd_.initial(tape);
    for (std::size_t j = ids.size(); j-- > 0;) {
        bs = enc_bwd_.step(tape, inputs[j], bs);
        bwd[j] = bs.h;
    }

    EncodedInstructions out;
    const double rate = training ? config_.dropout : 0.0;
    for (std::size_t j = 0; j < ids.size(); ++j) {
        std::array<Var, 2> parts{fwd[j], bwd[j]};
        Var key = tape.concat(parts);
        if (j < current_start) {
            // dropout on attention keys, current-utterance keys excepted
            if (rate > 0.0) key = tape.dropout(key, rate, rng);
            out.previous.push_back(key);
            out.previous_labels.push_back(labels[j]);
        } else {
            out.current.push_back(key);
            out.current_labels.push_back(labels[j]);
        }
    }
    return out;
}

Policy::StateEncoding Policy::encode_state(Tape& tape, const State& s,
                                           bool training,
                                           std::mt19937_64& rng) {
    StateEncoding out;
    const double rate = training ? config_.dropout : 0.0;
    auto drop = [&](Var v) { return rate > 0.0 ? tape.dropout(v, rate, rng) : v; };
    const Domain& d = *domain_;

    switch (d.kind()) {
        case DomainKind::alchemy: {
            const auto& st = std::get<AlchemyState>(s);
            Var colors = tape.param(params_.at("st.color_emb"));
            Var positions = tape.param(params_.at("st.pos_emb"));
            for (int i = 0; i < d.positions(); ++i) {
                auto cell_state = state_cell_.initial(tape);
                for (char c : st.beakers[i]) {
                    std::size_t ci = d.alphabet().find(c);
                    cell_state = state_cell_.step(tape, tape.row(colors, ci), cell_state);
                }
                std::array<Var, 2> parts{cell_state.h,
                                         tape.row(positions, static_cast<std::size_t>(i))};
                out.keys.push_back(drop(tape.concat(parts)));
                out.labels.push_back(std::to_string(i + 1) + ":" +
                                     (st.beakers[i].empty() ? "_" : st.beakers[i]));
            }
            break;
        }
        case DomainKind::scene: {
            const auto& st = std::get<SceneState>(s);
            Var colors = tape.param(params_.at("st.color_emb"));
            Var positions = tape.param(params_.at("st.pos_emb"));
            auto color_row = [&](char c) {
                std::size_t id = c == '_' ? 0 : d.alphabet().find(c) + 1;
                return tape.row(colors, id);
            };
            std::vector<Var> phi;
            for (int i = 0; i < d.positions(); ++i) {
                std::array<Var, 3> parts{color_row(st.positions[i].shirt),
                                         color_row(st.positions[i].hat),
                                         tape.row(positions, static_cast<std::size_t>(i))};
                phi.push_back(tape.concat(parts));
            }
            std::vector<Var> fwd(phi.size()), bwd(phi.size());
            auto fs = state_cell_.initial(tape);
            for (std::size_t i = 0; i < phi.size(); ++i) {
                fs = state_cell_.step(tape, phi[i], fs);
                fwd[i] = fs.h;
            }
            auto bs = state_cell_bwd_.initial(tape);
            for (std::size_t i = phi.size(); i-- > 0;) {
                bs = state_cell_bwd_.step(tape, phi[i], bs);
                bwd[i] = bs.h;
            }
            for (int i = 0; i < d.positions(); ++i) {
                std::array<Var, 3> parts{fwd[i], bwd[i], phi[i]};
                out.keys.push_back(drop(tape.concat(parts)));
                out.labels.push_back(std::to_string(i + 1) + ":" +
                                     std::string{st.positions[i].shirt,
                                                 st.positions[i].hat});
            }
            break;
        }
        case DomainKind::tangrams: {
            const auto& st = std::get<TangramsState>(s);
            if (st.figures.empty()) {
                out.keys.push_back(drop(tape.row(tape.param(params_.at("st.h_null")), 0)));
                out.labels.push_back("empty");
                break;
            }
            Var shapes = tape.param(params_.at("st.shape_emb"));
            Var positions = tape.param(params_.at("st.pos_emb"));
            for (std::size_t i = 0; i < st.figures.size(); ++i) {
                std::size_t si = d.alphabet().find(st.figures[i]);
                std::array<Var, 2> parts{tape.row(positions, i), tape.row(shapes, si)};
                out.keys.push_back(drop(tape.concat(parts)));
                out.labels.push_back(std::to_string(i + 1) + ":" +
                                     std::string(1, st.figures[i]));
            }
            break;
        }
    }
    return out;
}

Policy::Decoder::Decoder(Policy& policy, Tape& tape,
                         const std::vector<Tokens>& history, const Tokens& current,
                         const State& initial_state, bool training,
                         std::mt19937_64& rng)
    : policy_(policy), tape_(tape), training_(training), rng_(rng) {
    enc_ = policy.encode_instructions(tape, history, current, training, rng);
    init_enc_ = policy.encode_state(tape, initial_state, training, rng);
    // Zero state, then one update with a zero input; attention starts after.
    auto st = policy.dec_cell_.initial(tape);
    st = policy.dec_cell_.step(tape, tape.zeros(policy.dec_input_), st);
    dec_h_ = st.h;
    dec_c_ = st.c;
}

Var Policy::Decoder::state_attention(Var query, const StateEncoding& enc,
                                     ad::Parameter& w, AttentionHead& head_out) {
    Tape& t = tape_;
    Var u = t.matvec(t.param(w), query);
    if (training_ && policy_.config_.dropout > 0.0) {
        u = t.dropout(u, policy_.config_.dropout, rng_);
    }
    Var alpha = t.softmax(t.dots(enc.keys, u));
    head_out.labels = enc.labels;
    head_out.weights = t.value(alpha).data;
    return t.weighted_sum(enc.keys, alpha);
}

Policy::Decoder::StepResult Policy::Decoder::step(const State& current_state) {
    Tape& t = tape_;
    Policy& p = policy_;
    const ModelConfig& cfg = p.config_;

    if (!cached_state_ || !(*cached_state_ == current_state)) {
        cached_state_enc_ = p.encode_state(t, current_state, training_, rng_);
        cached_state_ = current_state;
    }

    StepResult res;

    // z^c over the current instruction, query h^d_{k-1}
    StateEncoding cur_instr{enc_.current, enc_.current_labels};
    Var z_c = state_attention(dec_h_, cur_instr, p.params_.at("attn.w_c"),
                              res.attention.current_instruction);

    std::array<Var, 2> q2_parts{dec_h_, z_c};
    Var q2 = t.concat(q2_parts);

    // z^p over previous instructions; zero vector when the history is empty
    Var z_p;
    if (enc_.previous.empty()) {
        z_p = t.zeros(static_cast<std::size_t>(2 * cfg.enc_hidden));
    } else {
        StateEncoding prev_instr{enc_.previous, enc_.previous_labels};
        AttentionHead head;
        z_p = state_attention(q2, prev_instr, p.params_.at("attn.w_p"), head);
        res.attention.previous_instructions = std::move(head);
    }

    // Two heads over each of the initial and current states.
    Var z_s_init_1 = state_attention(q2, init_enc_, p.params_.at("attn.w_s_init_1"),
                                     res.attention.initial_state_1);
    Var z_s_init_2 = state_attention(q2, init_enc_, p.params_.at("attn.w_s_init_2"),
                                     res.attention.initial_state_2);
    Var z_s_cur_1 = state_attention(q2, cached_state_enc_,
                                    p.params_.at("attn.w_s_cur_1"),
                                    res.attention.current_state_1);
    Var z_s_cur_2 = state_attention(q2, cached_state_enc_,
                                    p.params_.at("attn.w_s_cur_2"),
                                    res.attention.current_state_2);
    std::array<Var, 2> init_parts{z_s_init_1, z_s_init_2};
    std::array<Var, 2> cur_parts{z_s_cur_1, z_s_cur_2};
    Var z_s_init = t.concat(init_parts);
    Var z_s_cur = t.concat(cur_parts);

    // Previous-action embedding; BEG uses the reserved last type row.
    Var type_table = t.param(p.params_.at("act_emb.type"));
    Var arg1_table = t.param(p.params_.at("act_emb.arg1"));
    Var arg2_table = t.param(p.params_.at("act_emb.arg2"));
    std::size_t type_row = prev_action_
        ? static_cast<std::size_t>(prev_action_->type)
        : static_cast<std::size_t>(p.domain_->num_action_types());
    std::size_t arg1_row = prev_action_ ? static_cast<std::size_t>(prev_action_->arg1) : 0;
    std::size_t arg2_row = prev_action_ ? static_cast<std::size_t>(prev_action_->arg2) : 0;
    std::array<Var, 3> emb_parts{t.row(type_table, type_row),
                                 t.row(arg1_table, arg1_row),
                                 t.row(arg2_table, arg2_row)};
    Var a_emb = t.concat(emb_parts);

    std::array<Var, 5> in_parts{z_c, z_p, z_s_init, z_s_cur, a_emb};
    Var x = t.concat(in_parts);
    Var h_k = t.tanh_(t.add(t.matvec(t.param(p.params_.at("dec_in.w")), x),
                            t.param(p.params_.at("dec_in.b"))));
    if (training_ && cfg.dropout > 0.0) h_k = t.dropout(h_k, cfg.dropout, rng_);

    auto st = p.dec_cell_.step(t, h_k, {dec_h_, dec_c_});
    dec_h_ = st.h;
    dec_c_ = st.c;

    Var h_a = t.tanh_(t.matvec(t.param(p.params_.at("out.w_a")), dec_h_));
    Var s_type = t.matvec(t.param(p.params_.at("out.b_type")), h_a);
    Var s_arg1 = t.matvec(t.param(p.params_.at("out.b_arg1")), h_a);
    Var s_arg2 = t.matvec(t.param(p.params_.at("out.b_arg2")), h_a);
    Var scores = t.add(t.add(t.gather(s_type, p.score_type_idx_),
                             t.gather(s_arg1, p.score_arg1_idx_)),
                       t.gather(s_arg2, p.score_arg2_idx_));
    res.distribution = t.softmax(scores);
    return res;
}

void Policy::Decoder::advance(const Action& taken) { prev_action_ = taken; }

std::string Policy::manifest_json() const {
    nlohmann::ordered_json j;
    j["domain"] = {{"kind", domain_->name()}, {"positions", domain_->positions()}};
    j["model"] = nlohmann::ordered_json::parse(model_config_to_json(config_));
    j["vocab"] = vocab_.tokens();
    return j.dump();
}

void Policy::save(const std::string& path) const {
    ad::save_params(params_, manifest_json(), path);
}

Policy Policy::load(const std::string& path) {
    ad::ParamStore probe;
    std::string manifest = ad::load_params(probe, path);
    auto j = nlohmann::json::parse(manifest);
    DomainKind kind = domain_kind_from_string(j.at("domain").at("kind").get<std::string>());
    int positions = j.at("domain").at("positions").get<int>();
    std::shared_ptr<const Domain> domain;
    switch (kind) {
        case DomainKind::alchemy: domain = make_alchemy_domain(positions); break;
        case DomainKind::scene: domain = make_scene_domain(positions); break;
        case DomainKind::tangrams: domain = make_tangrams_domain(positions); break;
    }
    Vocabulary vocab = Vocabulary::from_tokens(
        j.at("vocab").get<std::vector<std::string>>());
    ModelConfig cfg = model_config_from_json(j.at("model").dump());
    Policy policy(std::move(domain), std::move(vocab), cfg, 0);
    ad::load_params(policy.params_, path);
    return policy;
}

RolloutResult run_rollout(Policy& policy, Tape& tape,
                          const InstructionExample& example, int horizon,
                          DecodeMode mode, std::mt19937_64& rng, bool training) {
    if (horizon < 1) throw std::invalid_argument("rollout: horizon must be >= 1");
    const Domain& domain = policy.domain();
    Policy::Decoder decoder(policy, tape, example.history, example.instruction,
                            example.start, training, rng);
    RolloutResult res;
    State s = example.start;
    for (int k = 0; k < horizon; ++k) {
        auto step = decoder.step(s);
        const auto& p = tape.value(step.distribution).data;
        std::size_t idx = 0;
        if (mode == DecodeMode::greedy) {
            idx = static_cast<std::size_t>(
                std::max_element(p.begin(), p.end()) - p.begin());
        } else {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            double r = u(rng);
            double cum = 0.0;
            idx = p.size() - 1;
            for (std::size_t i = 0; i < p.size(); ++i) {
                cum += p[i];
                if (r < cum) {
                    idx = i;
                    break;
                }
            }
        }
        Action a = domain.actions()[idx];
        res.execution.steps.push_back({s, a});
        res.step_distributions.push_back(step.distribution);
        res.chosen_indices.push_back(static_cast<int>(idx));
        res.attention.push_back(std::move(step.attention));
        if (a.is_stop()) break;
        s = domain.apply(s, a);
        decoder.advance(a);
    }
    res.final_state = s;
    res.hit_horizon = !res.execution.stopped();
    return res;
}

} // namespace scone
