#include "scone/eval.hpp"
#include "scone/training.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

namespace fs = std::filesystem;
using namespace scone;

namespace {

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

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

struct RunConfig {
    ModelConfig model;
    TrainConfig train;
};

RunConfig resolve_config(DomainKind kind, const std::string& config_path) {
    RunConfig cfg;
    cfg.model = default_model_config(kind);
    cfg.train.reward = default_reward_config(kind);
    if (!config_path.empty()) {
        auto j = nlohmann::json::parse(read_file(config_path));
        if (j.contains("model")) {
            auto merged = nlohmann::json::parse(model_config_to_json(cfg.model));
            merged.update(j["model"]);
            cfg.model = model_config_from_json(merged.dump());
        }
        if (j.contains("train")) {
            auto merged = nlohmann::json::parse(train_config_to_json(cfg.train));
            merged.update(j["train"], true);
            cfg.train = train_config_from_json(merged.dump());
        }
    }
    return cfg;
}

std::string run_config_json(DomainKind kind, const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["domain"] = to_string(kind);
    j["model"] = nlohmann::ordered_json::parse(model_config_to_json(cfg.model));
    j["train"] = nlohmann::ordered_json::parse(train_config_to_json(cfg.train));
    return j.dump(1);
}

int cmd_train(const std::string& domain_name, const std::string& algorithm,
              const std::string& data_path, const std::string& config_path,
              const std::vector<std::uint64_t>& seeds, const std::string& out_dir) {
    DomainKind kind = domain_kind_from_string(domain_name);
    RunConfig cfg = resolve_config(kind, config_path);
    if (!algorithm.empty()) cfg.train.algorithm = algorithm_from_string(algorithm);

    std::shared_ptr<const Domain> domain = make_domain(kind);
    auto records = parse_scone_file(data_path, *domain);

    fs::create_directories(out_dir);

    double best_five = -1.0;
    std::uint64_t best_seed = seeds.front();
    for (std::uint64_t seed : seeds) {
        TrainConfig tc = cfg.train;
        tc.seed = seed;
        fs::path run_dir = seeds.size() == 1 ? fs::path(out_dir)
                                             : fs::path(out_dir) / ("seed-" + std::to_string(seed));
        fs::create_directories(run_dir);

        RunConfig resolved = cfg;
        resolved.train = tc;
        write_file((run_dir / "config.json").string(), run_config_json(kind, resolved));

        // vocabulary from this run's training split only
        auto [train_records, val_records] =
            split_validation(records, tc.validation_fraction, tc.seed);
        Vocabulary vocab = Vocabulary::build(make_examples(train_records), 2);
        Policy policy(domain, vocab, cfg.model, seed);
        std::ofstream log((run_dir / "train_log.jsonl").string());
        std::cerr << "training seed " << seed << " (" << to_string(tc.algorithm)
                  << ", " << records.size() << " interactions)\n";
        TrainStats stats;
        TrainResult result = train(policy, records, tc, &stats, &log);
        policy.save((run_dir / "model.json").string());
        std::cerr << "seed " << seed << ": best epoch " << result.best_epoch
                  << ", validation 5utts " << result.best_five_utts
                  << ", reward queries " << stats.reward_queries << "\n";
        if (result.best_five_utts > best_five) {
            best_five = result.best_five_utts;
            best_seed = seed;
        }
    }
    if (seeds.size() > 1) {
        fs::path best = fs::path(out_dir) / ("seed-" + std::to_string(best_seed));
        fs::copy_file(best / "model.json", fs::path(out_dir) / "model.json",
                      fs::copy_options::overwrite_existing);
        fs::copy_file(best / "config.json", fs::path(out_dir) / "config.json",
                      fs::copy_options::overwrite_existing);
        std::cerr << "best seed by validation 5utts: " << best_seed << "\n";
    }
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& report_path) {
    Policy policy = Policy::load(model_path);
    RewardConfig reward = default_reward_config(policy.domain().kind());
    auto records = parse_scone_file(data_path, policy.domain());
    EvalReport report = evaluate(policy, records, reward);
    std::cout << "inst " << report.inst_accuracy << " (" << report.inst_correct
              << "/" << report.inst_total << ")\n"
              << "3utts " << report.three_utt_accuracy << " (" << report.three_correct
              << "/" << report.three_total << ")\n"
              << "5utts " << report.five_utt_accuracy << " (" << report.five_correct
              << "/" << report.five_total << ")\n"
              << "mean reward " << report.mean_instruction_reward << "\n";
    if (!report_path.empty()) write_file(report_path, eval_report_to_json(report));
    return 0;
}

int cmd_rollout(const std::string& model_path, const std::string& state_text,
                const std::string& instruction, const std::string& history_text,
                int horizon) {
    Policy policy = Policy::load(model_path);
    const Domain& d = policy.domain();
    InstructionExample ex;
    ex.start = d.parse_state(state_text);
    ex.goal = ex.start;
    ex.instruction = tokenize(instruction);
    if (ex.instruction.empty()) throw std::invalid_argument("empty instruction");
    std::istringstream hist(history_text);
    std::string part;
    while (std::getline(hist, part, '|')) {
        Tokens toks = tokenize(part);
        if (!toks.empty()) ex.history.push_back(std::move(toks));
    }
    if (horizon <= 0) horizon = default_reward_config(d.kind()).horizon;

    std::mt19937_64 rng(0);
    ad::Tape tape;
    auto rollout = run_rollout(policy, tape, ex, horizon, DecodeMode::greedy, rng, false);
    for (const auto& step : rollout.execution.steps) {
        std::cout << d.format_state(step.state) << "\t" << d.format_action(step.action)
                  << "\n";
    }
    std::cout << "final\t" << d.format_state(rollout.final_state) << "\n";
    return 0;
}

int cmd_dump_attention(const std::string& model_path, const std::string& data_path,
                       const std::string& interaction_id, int turn,
                       const std::string& out_path) {
    Policy policy = Policy::load(model_path);
    auto records = parse_scone_file(data_path, policy.domain());
    const InteractionRecord* rec = nullptr;
    for (const auto& r : records) {
        if (r.id == interaction_id) {
            rec = &r;
            break;
        }
    }
    if (!rec) throw std::invalid_argument("no interaction with id " + interaction_id);
    int horizon = default_reward_config(policy.domain().kind()).horizon;
    std::string dump = dump_attention_json(policy, *rec, turn, horizon);
    if (out_path.empty()) {
        std::cout << dump << "\n";
    } else {
        write_file(out_path, dump);
    }
    return 0;
}

int cmd_gen_demos(const std::string& domain_name, const std::string& data_path,
                  const std::string& out_path) {
    DomainKind kind = domain_kind_from_string(domain_name);
    auto domain = make_domain(kind);
    auto records = parse_scone_file(data_path, *domain);
    auto examples = make_examples(records);
    std::ostringstream out;
    long skipped = 0;
    for (const auto& ex : examples) {
        auto demo = generate_demonstration(ex.start, ex.goal, *domain);
        if (!demo) {
            ++skipped;
            continue;
        }
        out << ex.interaction_id << "\t" << ex.turn_index;
        for (const Action& a : *demo) out << "\t" << domain->format_action(a);
        out << "\n";
    }
    if (out_path.empty()) {
        std::cout << out.str();
    } else {
        write_file(out_path, out.str());
    }
    std::cerr << examples.size() - skipped << " demonstrations, " << skipped
              << " skipped\n";
    return 0;
}

int cmd_selftest() {
    // quick gradient check: attention-and-softmax composite vs finite differences
    std::mt19937_64 rng(1);
    ad::Parameter w("w", ad::glorot_init(3, 3, rng));
    ad::Parameter x("x", ad::Tensor::vector({0.3, -0.6, 0.9}));
    auto forward = [&](ad::Tape& t) {
        ad::Var p = t.softmax(t.tanh_(t.matvec(t.param(w), t.param(x))));
        return t.add(t.dot_const(p, {1.0, -1.0, 0.5}), t.scale(t.entropy(p), 0.1));
    };
    ad::Tape tape;
    tape.backward(forward(tape));
    const double h = 1e-6;
    for (ad::Parameter* p : {&w, &x}) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            double saved = p->value[i];
            p->value[i] = saved + h;
            ad::Tape tp;
            double fp = tp.value(forward(tp)).data[0];
            p->value[i] = saved - h;
            ad::Tape tm;
            double fm = tm.value(forward(tm)).data[0];
            p->value[i] = saved;
            double numeric = (fp - fm) / (2.0 * h);
            if (std::abs(numeric - p->grad[i]) > 1e-4) {
                std::cerr << "selftest: gradient mismatch in " << p->name << "\n";
                return 2;
            }
        }
    }

    // domain properties: action-space sizes and randomized transition checks
    struct Row {
        DomainKind kind;
        std::size_t expected;
    };
    std::mt19937_64 srng(2);
    for (Row row : {Row{DomainKind::alchemy, 50}, Row{DomainKind::scene, 141},
                    Row{DomainKind::tangrams, 31}}) {
        const Domain& d = standard_domain(row.kind);
        if (d.actions().size() != row.expected || !d.actions().front().is_stop()) {
            std::cerr << "selftest: bad action space for " << d.name() << "\n";
            return 2;
        }
        State s = d.empty_state();
        std::uniform_int_distribution<std::size_t> pick(0, d.actions().size() - 1);
        for (int k = 0; k < 500; ++k) {
            if (d.apply(s, kStop) != s) {
                std::cerr << "selftest: STOP must be the identity\n";
                return 2;
            }
            State next = d.apply(s, d.actions()[pick(srng)]);
            if (d.parse_state(d.format_state(next)) != next) {
                std::cerr << "selftest: state round trip failed\n";
                return 2;
            }
            s = next;
        }
    }
    std::cout << "selftest ok\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"instruction-following agent over the block-manipulation domains"};
    app.require_subcommand(1);

    std::string domain_name, algorithm, data_path, config_path, out_dir;
    std::string model_path, report_path, state_text, instruction, history_text;
    std::string interaction_id, out_path;
    std::vector<std::uint64_t> seeds{1};
    int turn = 0;
    int horizon = 0;

    auto* train = app.add_subcommand("train", "train a policy");
    train->add_option("--domain", domain_name)->required();
    train->add_option("--algorithm", algorithm);
    train->add_option("--data", data_path)->required();
    train->add_option("--config", config_path);
    train->add_option("--seed,--seeds", seeds, "one seed, or a best-of list");
    train->add_option("--out", out_dir)->required();

    auto* evaluate = app.add_subcommand("evaluate", "score a trained policy");
    evaluate->add_option("--model", model_path)->required();
    evaluate->add_option("--data", data_path)->required();
    evaluate->add_option("--report", report_path);

    auto* rollout = app.add_subcommand("rollout", "greedily execute one instruction");
    rollout->add_option("--model", model_path)->required();
    rollout->add_option("--state", state_text)->required();
    rollout->add_option("--instruction", instruction)->required();
    rollout->add_option("--history", history_text, "previous instructions, | separated");
    rollout->add_option("--horizon", horizon);

    auto* dump = app.add_subcommand("dump-attention", "export attention weights");
    dump->add_option("--model", model_path)->required();
    dump->add_option("--data", data_path)->required();
    dump->add_option("--interaction", interaction_id)->required();
    dump->add_option("--turn", turn);
    dump->add_option("--out", out_path);

    auto* demos = app.add_subcommand("gen-demos", "emit shortest demonstrations");
    demos->add_option("--domain", domain_name)->required();
    demos->add_option("--data", data_path)->required();
    demos->add_option("--out", out_path);

    app.add_subcommand("selftest", "gradient and domain property checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand("train")) {
            return cmd_train(domain_name, algorithm, data_path, config_path, seeds, out_dir);
        }
        if (app.got_subcommand("evaluate")) {
            return cmd_evaluate(model_path, data_path, report_path);
        }
        if (app.got_subcommand("rollout")) {
            return cmd_rollout(model_path, state_text, instruction, history_text, horizon);
        }
        if (app.got_subcommand("dump-attention")) {
            return cmd_dump_attention(model_path, data_path, interaction_id, turn, out_path);
        }
        if (app.got_subcommand("gen-demos")) {
            return cmd_gen_demos(domain_name, data_path, out_path);
        }
        return cmd_selftest();
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
