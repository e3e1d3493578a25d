#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace scone {

enum class DomainKind { alchemy, scene, tangrams };

std::string to_string(DomainKind kind);
DomainKind domain_kind_from_string(std::string_view name);

// Factored action: type(arg1, arg2). Type 0 is always STOP; argument 0 is
// the NULL placeholder. Construct through Domain::make_action, which
// enforces the per-domain argument ranges.
struct Action {
    int type = 0;
    int arg1 = 0;
    int arg2 = 0;

    bool is_stop() const { return type == 0; }
    auto operator<=>(const Action&) const = default;
};

inline constexpr Action kStop{};

// Beakers are stacks of color units, bottom first.
struct AlchemyState {
    std::vector<std::string> beakers;
    bool operator==(const AlchemyState&) const = default;
};

// '_' marks an empty shirt or hat slot.
struct ScenePosition {
    char shirt = '_';
    char hat = '_';
    bool operator==(const ScenePosition&) const = default;
};

struct SceneState {
    std::vector<ScenePosition> positions;
    bool operator==(const SceneState&) const = default;
};

// Ordered figure list; all figures distinct.
struct TangramsState {
    std::string figures;
    bool operator==(const TangramsState&) const = default;
};

using State = std::variant<AlchemyState, SceneState, TangramsState>;

// One domain: action space, deterministic transition with the
// identity-on-invalid convention, goal distance, and the state-string
// grammar shared with the dataset files.
class Domain {
public:
    virtual ~Domain() = default;

    virtual DomainKind kind() const = 0;
    std::string name() const { return to_string(kind()); }

    // Number of argument-1 slots (beakers / positions), argument-2 alphabet.
    virtual int positions() const = 0;
    virtual const std::string& alphabet() const = 0;
    virtual int num_action_types() const = 0; // including STOP
    virtual std::string type_name(int type) const = 0;

    // Canonical order: STOP first, then type, then arg1, then arg2.
    const std::vector<Action>& actions() const { return actions_; }
    int action_index(const Action& a) const;
    Action make_action(int type, int arg1, int arg2) const;
    Action parse_action(std::string_view text) const;
    std::string format_action(const Action& a) const;

    virtual State apply(const State& s, const Action& a) const = 0;
    virtual long distance(const State& a, const State& b) const = 0;
    virtual State parse_state(std::string_view text) const = 0;
    virtual std::string format_state(const State& s) const = 0;
    virtual State empty_state() const = 0;

protected:
    // Arity per type: how many of (arg1, arg2) the type uses.
    virtual int type_arity(int type) const = 0;
    void build_action_space();

    std::vector<Action> actions_;
};

std::unique_ptr<Domain> make_alchemy_domain(int beakers = 7);
std::unique_ptr<Domain> make_scene_domain(int positions = 10);
std::unique_ptr<Domain> make_tangrams_domain(int max_positions = 5);
std::unique_ptr<Domain> make_domain(DomainKind kind);

// The full-size domain for each kind, created once.
const Domain& standard_domain(DomainKind kind);

} // namespace scone
