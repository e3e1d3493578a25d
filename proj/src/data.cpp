#include "scone/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scone {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, '\t')) out.push_back(field);
    return out;
}

Tokens tokenize(const std::string& text) {
    Tokens out;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) {
        for (char& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out.push_back(tok);
    }
    return out;
}

std::string join(const Tokens& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

} // namespace

std::vector<InteractionRecord> parse_scone_lines(
    const std::vector<std::string>& lines, const Domain& domain) {
    std::vector<InteractionRecord> records;
    records.reserve(lines.size());
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const std::string& line = lines[ln];
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() < 4 || fields.size() % 2 != 0) {
            throw std::runtime_error("line " + std::to_string(ln + 1) +
                                     ": expected id, state, then utterance/state pairs");
        }
        InteractionRecord rec;
        rec.id = fields[0];
        try {
            rec.initial_state = domain.parse_state(fields[1]);
            for (std::size_t f = 2; f + 1 < fields.size(); f += 2) {
                InteractionRecord::Turn turn;
                turn.instruction = tokenize(fields[f]);
                turn.post_state = domain.parse_state(fields[f + 1]);
                if (turn.instruction.empty()) {
                    throw std::invalid_argument("empty instruction");
                }
                rec.turns.push_back(std::move(turn));
            }
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("line " + std::to_string(ln + 1) + ": " + e.what());
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<InteractionRecord> parse_scone_file(const std::string& path,
                                                const Domain& domain) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return parse_scone_lines(lines, domain);
}

std::string format_scone_line(const InteractionRecord& record,
                              const Domain& domain) {
    std::string out = record.id + "\t" + domain.format_state(record.initial_state);
    for (const auto& turn : record.turns) {
        out += "\t" + join(turn.instruction) + "\t" + domain.format_state(turn.post_state);
    }
    return out;
}

std::vector<InstructionExample> make_examples(
    const std::vector<InteractionRecord>& records) {
    std::vector<InstructionExample> out;
    for (const auto& rec : records) {
        State start = rec.initial_state;
        std::vector<Tokens> history;
        for (std::size_t i = 0; i < rec.turns.size(); ++i) {
            InstructionExample ex;
            ex.instruction = rec.turns[i].instruction;
            ex.start = start;
            ex.history = history;
            ex.goal = rec.turns[i].post_state;
            ex.interaction_id = rec.id;
            ex.turn_index = static_cast<int>(i);
            out.push_back(std::move(ex));
            history.push_back(rec.turns[i].instruction);
            start = rec.turns[i].post_state;
        }
    }
    return out;
}

Vocabulary::Vocabulary() {
    id_to_token_ = {"<unk>", "<delim1>", "<delim2>"};
    for (int i = 0; i < 3; ++i) token_to_id_[id_to_token_[i]] = i;
}

int Vocabulary::lookup(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

Vocabulary Vocabulary::build(const std::vector<InstructionExample>& examples,
                             int min_count) {
    std::map<std::string, long> counts;
    for (const auto& ex : examples) {
        for (const auto& tok : ex.instruction) counts[tok] += 1;
    }
    std::vector<std::pair<std::string, long>> kept;
    for (const auto& [tok, n] : counts) {
        if (n >= min_count) kept.emplace_back(tok, n);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary vocab;
    for (const auto& [tok, n] : kept) {
        vocab.token_to_id_[tok] = static_cast<int>(vocab.id_to_token_.size());
        vocab.id_to_token_.push_back(tok);
    }
    return vocab;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& ordered) {
    Vocabulary vocab;
    for (const auto& tok : ordered) {
        if (vocab.token_to_id_.contains(tok)) continue;
        vocab.token_to_id_[tok] = static_cast<int>(vocab.id_to_token_.size());
        vocab.id_to_token_.push_back(tok);
    }
    return vocab;
}

} // namespace scone
