#pragma once

#include "scone/domains.hpp"
#include "scone/env.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace scone {

// One SCONE interaction: an initial state and a chain of (instruction,
// post-state) turns. The post-state of turn i is the start state of turn i+1.
struct InteractionRecord {
    std::string id;
    State initial_state;
    struct Turn {
        Tokens instruction;
        State post_state;
    };
    std::vector<Turn> turns;
};

// Per-instruction training/eval record.
struct InstructionExample {
    Tokens instruction;
    State start;
    std::vector<Tokens> history;
    State goal;
    std::string interaction_id;
    int turn_index = 0; // 0-based
};

// Tab-separated lines: id, state_0, utt_1, state_1, ..., utt_n, state_n.
// Tokenization is whitespace split plus lowercasing. Malformed lines raise
// with the 1-based line number.
std::vector<InteractionRecord> parse_scone_file(const std::string& path,
                                                const Domain& domain);
std::vector<InteractionRecord> parse_scone_lines(
    const std::vector<std::string>& lines, const Domain& domain);
std::string format_scone_line(const InteractionRecord& record,
                              const Domain& domain);

std::vector<InstructionExample> make_examples(
    const std::vector<InteractionRecord>& records);

// Token table with reserved UNK / DELIM1 / DELIM2 entries. Remaining ids are
// assigned by frequency (descending), ties broken lexicographically.
class Vocabulary {
public:
    static constexpr int kUnk = 0;
    static constexpr int kDelim1 = 1; // separates previous instructions
    static constexpr int kDelim2 = 2; // separates history from current

    Vocabulary();

    int lookup(const std::string& token) const; // kUnk for unknown tokens
    int size() const { return static_cast<int>(id_to_token_.size()); }
    const std::string& token(int id) const { return id_to_token_.at(id); }
    const std::vector<std::string>& tokens() const { return id_to_token_; }

    static Vocabulary build(const std::vector<InstructionExample>& examples,
                            int min_count = 2);
    static Vocabulary from_tokens(const std::vector<std::string>& ordered);

private:
    std::map<std::string, int> token_to_id_;
    std::vector<std::string> id_to_token_;
};

} // namespace scone
