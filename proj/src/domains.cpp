#include "scone/domains.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace scone {

namespace {

// Six SCONE color codes, frozen from the dataset files.
const std::string kColors = "bgopry";
// Five tangram figure identifiers.
const std::string kShapes = "01234";

std::vector<std::string> split_ws(std::string_view text) {
    std::vector<std::string> out;
    std::istringstream in{std::string(text)};
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

[[noreturn]] void bad_state(const std::string& domain, std::string_view text) {
    throw std::invalid_argument("bad " + domain + " state string: \"" +
                                std::string(text) + "\"");
}

// Unit-cost Levenshtein distance.
long levenshtein(const std::string& a, const std::string& b) {
    std::vector<long> prev(b.size() + 1);
    std::vector<long> cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<long>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<long>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            long sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// Edit distance with substitution cost 2 (Tangrams).
long edit_distance_sub2(const std::string& a, const std::string& b) {
    std::vector<long> prev(b.size() + 1);
    std::vector<long> cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<long>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<long>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            long sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 2);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

} // namespace

std::string to_string(DomainKind kind) {
    switch (kind) {
        case DomainKind::alchemy: return "alchemy";
        case DomainKind::scene: return "scene";
        case DomainKind::tangrams: return "tangrams";
    }
    throw std::logic_error("unreachable");
}

DomainKind domain_kind_from_string(std::string_view name) {
    if (name == "alchemy") return DomainKind::alchemy;
    if (name == "scene") return DomainKind::scene;
    if (name == "tangrams") return DomainKind::tangrams;
    throw std::invalid_argument("unknown domain: " + std::string(name));
}

void Domain::build_action_space() {
    actions_.clear();
    actions_.push_back(kStop);
    for (int t = 1; t < num_action_types(); ++t) {
        int arity = type_arity(t);
        for (int a1 = 1; a1 <= positions(); ++a1) {
            if (arity == 1) {
                actions_.push_back(Action{t, a1, 0});
            } else {
                for (int a2 = 1; a2 <= static_cast<int>(alphabet().size()); ++a2) {
                    actions_.push_back(Action{t, a1, a2});
                }
            }
        }
    }
}

int Domain::action_index(const Action& a) const {
    auto it = std::find(actions_.begin(), actions_.end(), a);
    if (it == actions_.end()) {
        throw std::invalid_argument("action not in " + name() + " action space");
    }
    return static_cast<int>(it - actions_.begin());
}

Action Domain::make_action(int type, int arg1, int arg2) const {
    if (type < 0 || type >= num_action_types()) {
        throw std::invalid_argument("bad action type for " + name());
    }
    int arity = type == 0 ? 0 : type_arity(type);
    bool ok = true;
    if (arity == 0) {
        ok = arg1 == 0 && arg2 == 0;
    } else if (arity == 1) {
        ok = arg1 >= 1 && arg1 <= positions() && arg2 == 0;
    } else {
        ok = arg1 >= 1 && arg1 <= positions() && arg2 >= 1 &&
             arg2 <= static_cast<int>(alphabet().size());
    }
    if (!ok) throw std::invalid_argument("bad action arguments for " + name());
    return Action{type, arg1, arg2};
}

Action Domain::parse_action(std::string_view text) const {
    auto toks = split_ws(text);
    if (toks.empty()) throw std::invalid_argument("empty action string");
    int type = -1;
    for (int t = 0; t < num_action_types(); ++t) {
        if (toks[0] == type_name(t)) {
            type = t;
            break;
        }
    }
    if (type < 0) throw std::invalid_argument("unknown action type: " + toks[0]);
    int arity = type == 0 ? 0 : type_arity(type);
    if (static_cast<int>(toks.size()) != 1 + arity) {
        throw std::invalid_argument("bad argument count for " + toks[0]);
    }
    int arg1 = 0;
    int arg2 = 0;
    if (arity >= 1) arg1 = std::stoi(toks[1]);
    if (arity >= 2) {
        if (toks[2].size() != 1) throw std::invalid_argument("bad symbol: " + toks[2]);
        auto pos = alphabet().find(toks[2][0]);
        if (pos == std::string::npos) {
            throw std::invalid_argument("symbol not in alphabet: " + toks[2]);
        }
        arg2 = static_cast<int>(pos) + 1;
    }
    return make_action(type, arg1, arg2);
}

std::string Domain::format_action(const Action& a) const {
    std::string out = type_name(a.type);
    if (a.arg1 != 0) out += " " + std::to_string(a.arg1);
    if (a.arg2 != 0) out += std::string(" ") + alphabet()[a.arg2 - 1];
    return out;
}

namespace {

class AlchemyDomain final : public Domain {
public:
    explicit AlchemyDomain(int beakers) : beakers_(beakers) {
        if (beakers < 1) throw std::invalid_argument("alchemy: need >= 1 beaker");
        build_action_space();
    }

    DomainKind kind() const override { return DomainKind::alchemy; }
    int positions() const override { return beakers_; }
    const std::string& alphabet() const override { return kColors; }
    int num_action_types() const override { return 3; } // STOP, pop, push

    std::string type_name(int type) const override {
        switch (type) {
            case 0: return "stop";
            case 1: return "pop";
            case 2: return "push";
        }
        throw std::invalid_argument("bad alchemy action type");
    }

    State apply(const State& s, const Action& a) const override {
        const auto& st = std::get<AlchemyState>(s);
        if (a.is_stop()) return s;
        if (a.type == 1) { // pop
            if (st.beakers[a.arg1 - 1].empty()) return s;
            AlchemyState out = st;
            out.beakers[a.arg1 - 1].pop_back();
            return out;
        }
        // push: always applicable, no capacity cap
        AlchemyState out = st;
        out.beakers[a.arg1 - 1].push_back(kColors[a.arg2 - 1]);
        return out;
    }

    long distance(const State& a, const State& b) const override {
        const auto& sa = std::get<AlchemyState>(a);
        const auto& sb = std::get<AlchemyState>(b);
        long total = 0;
        for (int i = 0; i < beakers_; ++i) {
            total += levenshtein(sa.beakers[i], sb.beakers[i]);
        }
        return total;
    }

    State parse_state(std::string_view text) const override {
        auto toks = split_ws(text);
        if (static_cast<int>(toks.size()) != beakers_) bad_state("alchemy", text);
        AlchemyState st;
        st.beakers.resize(beakers_);
        for (int i = 0; i < beakers_; ++i) {
            const std::string& tok = toks[i];
            auto colon = tok.find(':');
            if (colon == std::string::npos ||
                tok.substr(0, colon) != std::to_string(i + 1)) {
                bad_state("alchemy", text);
            }
            std::string units = tok.substr(colon + 1);
            if (units == "_") units.clear();
            for (char c : units) {
                if (kColors.find(c) == std::string::npos) bad_state("alchemy", text);
            }
            st.beakers[i] = units;
        }
        return st;
    }

    std::string format_state(const State& s) const override {
        const auto& st = std::get<AlchemyState>(s);
        std::string out;
        for (int i = 0; i < beakers_; ++i) {
            if (i) out += ' ';
            out += std::to_string(i + 1) + ":";
            out += st.beakers[i].empty() ? "_" : st.beakers[i];
        }
        return out;
    }

    State empty_state() const override {
        AlchemyState st;
        st.beakers.resize(beakers_);
        return st;
    }

protected:
    int type_arity(int type) const override { return type == 1 ? 1 : 2; }

private:
    int beakers_;
};

class SceneDomain final : public Domain {
public:
    explicit SceneDomain(int positions) : positions_(positions) {
        if (positions < 1) throw std::invalid_argument("scene: need >= 1 position");
        build_action_space();
        build_slot_distances();
    }

    DomainKind kind() const override { return DomainKind::scene; }
    int positions() const override { return positions_; }
    const std::string& alphabet() const override { return kColors; }
    // STOP, add_person, add_hat, remove_person, remove_hat
    int num_action_types() const override { return 5; }

    std::string type_name(int type) const override {
        switch (type) {
            case 0: return "stop";
            case 1: return "add_person";
            case 2: return "add_hat";
            case 3: return "remove_person";
            case 4: return "remove_hat";
        }
        throw std::invalid_argument("bad scene action type");
    }

    State apply(const State& s, const Action& a) const override {
        const auto& st = std::get<SceneState>(s);
        if (a.is_stop()) return s;
        ScenePosition p = st.positions[a.arg1 - 1];
        switch (a.type) {
            case 1: // add_person: only onto an empty shirt slot
                if (p.shirt != '_') return s;
                p.shirt = kColors[a.arg2 - 1];
                break;
            case 2: // add_hat: only onto an empty hat slot
                if (p.hat != '_') return s;
                p.hat = kColors[a.arg2 - 1];
                break;
            case 3: // remove_person: clears the shirt slot only
                if (p.shirt == '_') return s;
                p.shirt = '_';
                break;
            case 4:
                if (p.hat == '_') return s;
                p.hat = '_';
                break;
        }
        SceneState out = st;
        out.positions[a.arg1 - 1] = p;
        return out;
    }

    long distance(const State& a, const State& b) const override {
        const auto& sa = std::get<SceneState>(a);
        const auto& sb = std::get<SceneState>(b);
        long total = 0;
        for (int i = 0; i < positions_; ++i) {
            total += slot_dist_[slot_id(sa.positions[i])][slot_id(sb.positions[i])];
        }
        return total;
    }

    State parse_state(std::string_view text) const override {
        auto toks = split_ws(text);
        if (static_cast<int>(toks.size()) != positions_) bad_state("scene", text);
        SceneState st;
        st.positions.resize(positions_);
        for (int i = 0; i < positions_; ++i) {
            const std::string& tok = toks[i];
            auto colon = tok.find(':');
            if (colon == std::string::npos ||
                tok.substr(0, colon) != std::to_string(i + 1) ||
                tok.size() != colon + 3) {
                bad_state("scene", text);
            }
            char shirt = tok[colon + 1];
            char hat = tok[colon + 2];
            if ((shirt != '_' && kColors.find(shirt) == std::string::npos) ||
                (hat != '_' && kColors.find(hat) == std::string::npos)) {
                bad_state("scene", text);
            }
            st.positions[i] = ScenePosition{shirt, hat};
        }
        return st;
    }

    std::string format_state(const State& s) const override {
        const auto& st = std::get<SceneState>(s);
        std::string out;
        for (int i = 0; i < positions_; ++i) {
            if (i) out += ' ';
            out += std::to_string(i + 1) + ":";
            out += st.positions[i].shirt;
            out += st.positions[i].hat;
        }
        return out;
    }

    State empty_state() const override {
        SceneState st;
        st.positions.resize(positions_);
        return st;
    }

protected:
    int type_arity(int type) const override { return type <= 2 ? 2 : 1; }

private:
    static int slot_id(ScenePosition p) {
        auto code = [](char c) {
            return c == '_' ? 0 : static_cast<int>(kColors.find(c)) + 1;
        };
        return code(p.shirt) * 7 + code(p.hat);
    }

    static ScenePosition slot_from_id(int id) {
        auto ch = [](int v) { return v == 0 ? '_' : kColors[v - 1]; };
        return ScenePosition{ch(id / 7), ch(id % 7)};
    }

    // Per-slot distances by breadth-first search over the single-position
    // action semantics, so distance can never disagree with apply().
    void build_slot_distances() {
        for (int start = 0; start < 49; ++start) {
            auto& row = slot_dist_[start];
            row.fill(-1);
            row[start] = 0;
            std::queue<int> frontier;
            frontier.push(start);
            while (!frontier.empty()) {
                int cur = frontier.front();
                frontier.pop();
                ScenePosition p = slot_from_id(cur);
                std::vector<ScenePosition> next;
                if (p.shirt == '_') {
                    for (char c : kColors) next.push_back({c, p.hat});
                } else {
                    next.push_back({'_', p.hat});
                }
                if (p.hat == '_') {
                    for (char c : kColors) next.push_back({p.shirt, c});
                } else {
                    next.push_back({p.shirt, '_'});
                }
                for (ScenePosition q : next) {
                    int id = slot_id(q);
                    if (row[id] < 0) {
                        row[id] = row[cur] + 1;
                        frontier.push(id);
                    }
                }
            }
        }
    }

    int positions_;
    std::array<std::array<int, 49>, 49> slot_dist_{};
};

class TangramsDomain final : public Domain {
public:
    explicit TangramsDomain(int max_positions) : max_positions_(max_positions) {
        if (max_positions < 1 || max_positions > static_cast<int>(kShapes.size())) {
            throw std::invalid_argument("tangrams: bad max length");
        }
        build_action_space();
    }

    DomainKind kind() const override { return DomainKind::tangrams; }
    int positions() const override { return max_positions_; }
    const std::string& alphabet() const override { return kShapes; }
    int num_action_types() const override { return 3; } // STOP, insert, remove

    std::string type_name(int type) const override {
        switch (type) {
            case 0: return "stop";
            case 1: return "insert";
            case 2: return "remove";
        }
        throw std::invalid_argument("bad tangrams action type");
    }

    State apply(const State& s, const Action& a) const override {
        const auto& st = std::get<TangramsState>(s);
        int n = static_cast<int>(st.figures.size());
        if (a.is_stop()) return s;
        if (a.type == 1) { // insert
            char shape = kShapes[a.arg2 - 1];
            if (a.arg1 > n + 1 || n >= max_positions_ ||
                st.figures.find(shape) != std::string::npos) {
                return s;
            }
            TangramsState out = st;
            out.figures.insert(out.figures.begin() + (a.arg1 - 1), shape);
            return out;
        }
        // remove
        if (a.arg1 > n) return s;
        TangramsState out = st;
        out.figures.erase(out.figures.begin() + (a.arg1 - 1));
        return out;
    }

    long distance(const State& a, const State& b) const override {
        return edit_distance_sub2(std::get<TangramsState>(a).figures,
                                  std::get<TangramsState>(b).figures);
    }

    State parse_state(std::string_view text) const override {
        auto toks = split_ws(text);
        if (static_cast<int>(toks.size()) > max_positions_) bad_state("tangrams", text);
        TangramsState st;
        for (std::size_t i = 0; i < toks.size(); ++i) {
            const std::string& tok = toks[i];
            auto colon = tok.find(':');
            if (colon == std::string::npos ||
                tok.substr(0, colon) != std::to_string(i + 1) ||
                tok.size() != colon + 2) {
                bad_state("tangrams", text);
            }
            char shape = tok[colon + 1];
            if (kShapes.find(shape) == std::string::npos ||
                st.figures.find(shape) != std::string::npos) {
                bad_state("tangrams", text);
            }
            st.figures += shape;
        }
        return st;
    }

    std::string format_state(const State& s) const override {
        const auto& st = std::get<TangramsState>(s);
        std::string out;
        for (std::size_t i = 0; i < st.figures.size(); ++i) {
            if (i) out += ' ';
            out += std::to_string(i + 1) + ":";
            out += st.figures[i];
        }
        return out;
    }

    State empty_state() const override { return TangramsState{}; }

protected:
    int type_arity(int type) const override { return type == 1 ? 2 : 1; }

private:
    int max_positions_;
};

} // namespace

std::unique_ptr<Domain> make_alchemy_domain(int beakers) {
    return std::make_unique<AlchemyDomain>(beakers);
}

std::unique_ptr<Domain> make_scene_domain(int positions) {
    return std::make_unique<SceneDomain>(positions);
}

std::unique_ptr<Domain> make_tangrams_domain(int max_positions) {
    return std::make_unique<TangramsDomain>(max_positions);
}

std::unique_ptr<Domain> make_domain(DomainKind kind) {
    switch (kind) {
        case DomainKind::alchemy: return make_alchemy_domain();
        case DomainKind::scene: return make_scene_domain();
        case DomainKind::tangrams: return make_tangrams_domain();
    }
    throw std::logic_error("unreachable");
}

const Domain& standard_domain(DomainKind kind) {
    static const auto alchemy = make_alchemy_domain();
    static const auto scene = make_scene_domain();
    static const auto tangrams = make_tangrams_domain();
    switch (kind) {
        case DomainKind::alchemy: return *alchemy;
        case DomainKind::scene: return *scene;
        case DomainKind::tangrams: return *tangrams;
    }
    throw std::logic_error("unreachable");
}

} // namespace scone
