#include <doctest.h>

#include "scone/data.hpp"

using namespace scone;

namespace {

std::vector<std::string> alchemy_lines() {
    return {
        "train-1\t1:g 2:_ 3:p 4:_ 5:y 6:oo 7:r"
        "\tThrow out first beaker\t1:_ 2:_ 3:p 4:_ 5:y 6:oo 7:r"
        "\tPour sixth beaker into last one\t1:_ 2:_ 3:p 4:_ 5:y 6:_ 7:roo",
        "train-2\t1:b 2:b 3:_ 4:_ 5:_ 6:_ 7:_"
        "\tthrow out second beaker\t1:b 2:_ 3:_ 4:_ 5:_ 6:_ 7:_",
    };
}

} // namespace

TEST_CASE("parses tab-separated interactions with chained states") {
    const Domain& d = standard_domain(DomainKind::alchemy);
    auto records = parse_scone_lines(alchemy_lines(), d);
    REQUIRE(records.size() == 2);
    CHECK(records[0].id == "train-1");
    CHECK(records[0].turns.size() == 2);
    CHECK(records[1].turns.size() == 1);
    // lowercased whitespace tokenization
    CHECK(records[0].turns[0].instruction ==
          Tokens{"throw", "out", "first", "beaker"});
    CHECK(d.format_state(records[0].initial_state) == "1:g 2:_ 3:p 4:_ 5:y 6:oo 7:r");
    CHECK(d.format_state(records[0].turns[1].post_state) ==
          "1:_ 2:_ 3:p 4:_ 5:y 6:_ 7:roo");
}

TEST_CASE("format/parse line round trip") {
    const Domain& d = standard_domain(DomainKind::alchemy);
    auto records = parse_scone_lines(alchemy_lines(), d);
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::string line = format_scone_line(records[i], d);
        auto reparsed = parse_scone_lines({line}, d);
        CHECK(format_scone_line(reparsed[0], d) == line);
    }
}

TEST_CASE("malformed lines report 1-based line numbers") {
    const Domain& d = standard_domain(DomainKind::alchemy);
    auto lines = alchemy_lines();
    lines.push_back("broken\t1:g 2:_\tsome instruction\t1:g 2:_");
    try {
        parse_scone_lines(lines, d);
        FAIL("expected parse error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
    CHECK_THROWS(parse_scone_lines({"id-only"}, d));
    CHECK_THROWS(parse_scone_lines({"x\t1:g 2:_ 3:_ 4:_ 5:_ 6:_ 7:_\tno post state"}, d));
}

TEST_CASE("make_examples expands turns with history and chained starts") {
    const Domain& d = standard_domain(DomainKind::alchemy);
    auto records = parse_scone_lines(alchemy_lines(), d);
    auto examples = make_examples(records);
    REQUIRE(examples.size() == 3);
    CHECK(examples[0].history.empty());
    CHECK(examples[0].start == records[0].initial_state);
    CHECK(examples[0].goal == records[0].turns[0].post_state);
    CHECK(examples[1].history.size() == 1);
    CHECK(examples[1].history[0] == records[0].turns[0].instruction);
    CHECK(examples[1].start == records[0].turns[0].post_state);
    CHECK(examples[1].turn_index == 1);
    CHECK(examples[2].interaction_id == "train-2");
}

TEST_CASE("vocabulary reserves special tokens and applies the min count") {
    const Domain& d = standard_domain(DomainKind::alchemy);
    auto examples = make_examples(parse_scone_lines(alchemy_lines(), d));
    Vocabulary vocab = Vocabulary::build(examples, 2);
    CHECK(vocab.token(Vocabulary::kUnk) == "<unk>");
    CHECK(vocab.token(Vocabulary::kDelim1) == "<delim1>");
    CHECK(vocab.token(Vocabulary::kDelim2) == "<delim2>");
    // "throw", "out", "beaker" appear at least twice; "pour" only once
    CHECK(vocab.lookup("throw") > 2);
    CHECK(vocab.lookup("beaker") > 2);
    CHECK(vocab.lookup("pour") == Vocabulary::kUnk);
    CHECK(vocab.lookup("never-seen") == Vocabulary::kUnk);

    // deterministic rebuild
    Vocabulary again = Vocabulary::build(examples, 2);
    CHECK(again.tokens() == vocab.tokens());

    Vocabulary copy = Vocabulary::from_tokens(vocab.tokens());
    CHECK(copy.tokens() == vocab.tokens());
}
