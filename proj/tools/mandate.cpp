// Command-line front end: synthetic data preparation, PE precomputation,
// training, evaluation, and the two ablation studies. Exit codes: 0 success,
// 1 usage error, 2 data error, 3 numeric failure.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mandate/pipeline.hpp"

namespace {

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw mandate::UsageError("cannot parse '" + item + "' as a number in list '" +
                                      s + "'");
        }
    }
    return out;
}

struct CommonFlags {
    std::string config_file;
    std::vector<std::pair<std::string, std::string>> overrides;
};

// flags > config file > defaults
mandate::RunConfig resolve_config(const CommonFlags& flags) {
    mandate::RunConfig rc;
    if (!flags.config_file.empty()) rc.load_file(flags.config_file);
    for (const auto& [k, v] : flags.overrides) rc.set(k, v);
    return rc;
}

void add_run_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_file, "flat key = value config file");
    auto track = [&flags](const std::string& key) {
        return [&flags, key](const std::string& v) { flags.overrides.emplace_back(key, v); };
    };
    cmd->add_option_function<std::string>("--data", track("data"), "dataset directory");
    cmd->add_option_function<std::string>("--out", track("out"), "output directory");
    cmd->add_option_function<std::string>("--seed", track("seed"), "root seed");
    cmd->add_option_function<std::string>("--epochs", track("epochs"), "max epochs");
    cmd->add_option_function<std::string>("--lr", track("lr"), "learning rate");
    cmd->add_option_function<std::string>("--batch-size", track("batch_size"),
                                          "training batch size");
    cmd->add_option_function<std::string>("--k", track("k"), "positional encoding hops");
    cmd->add_option_function<std::string>("--anchors", track("anchors"),
                                          "anchor set cap");
    cmd->add_option_function<std::string>("--pe", track("pe_dir"),
                                          "directory of precomputed PE caches");
    cmd->add_option_function<std::vector<std::string>>(
        "--set",
        [&flags](const std::vector<std::string>& kvs) {
            for (const std::string& kv : kvs) {
                const std::size_t eq = kv.find('=');
                if (eq == std::string::npos)
                    throw CLI::ValidationError("--set expects key=value, got '" + kv +
                                               "'");
                flags.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
            }
        },
        "override any config key, e.g. --set lambda_orth=0.2")
        ->take_all();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-scale neighborhood-aware transformer for graph fraud detection"};
    app.require_subcommand(1);

    // prepare-synthetic
    auto* prep = app.add_subcommand("prepare-synthetic",
                                    "generate a homophily-controlled synthetic dataset");
    struct {
        std::string out, homophily = "0.9", mean_degree;
        std::size_t nodes = 1000, relations = 1, feature_dim = 16;
        double fraud_rate = 0.1, feature_signal = 1.1;
        std::uint64_t seed = 7;
    } prep_args;
    prep->add_option("--out", prep_args.out, "dataset directory")->required();
    prep->add_option("--nodes", prep_args.nodes, "node count");
    prep->add_option("--relations", prep_args.relations, "relation count");
    prep->add_option("--homophily", prep_args.homophily,
                     "comma list, one value per relation");
    prep->add_option("--mean-degree", prep_args.mean_degree,
                     "comma list, one value per relation (default 6 each)");
    prep->add_option("--fraud-rate", prep_args.fraud_rate, "fraction of fraud nodes");
    prep->add_option("--feature-dim", prep_args.feature_dim, "feature width");
    prep->add_option("--feature-signal", prep_args.feature_signal,
                     "class mean separation");
    prep->add_option("--seed", prep_args.seed, "generator seed");

    // precompute-pe
    auto* pe = app.add_subcommand("precompute-pe",
                                  "compute and cache random-walk PE tables");
    mandate::PrecomputePeArgs pe_args;
    pe->add_option("--data", pe_args.data, "dataset directory")->required();
    pe->add_option("--out", pe_args.out, "cache directory")->required();
    pe->add_option("--k", pe_args.k, "hop count");
    pe->add_option("--anchors", pe_args.anchors, "anchor set cap");
    pe->add_option("--seed", pe_args.seed, "anchor sampling seed");

    // train
    auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
    CommonFlags train_flags;
    add_run_flags(train, train_flags);

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
    struct {
        std::string data, checkpoint, split = "test", out;
    } eval_args;
    eval->add_option("--data", eval_args.data, "dataset directory")->required();
    eval->add_option("--checkpoint", eval_args.checkpoint, "checkpoint.bin path")
        ->required();
    eval->add_option("--split", eval_args.split, "train|val|test");
    eval->add_option("--out", eval_args.out,
                     "metrics directory (default: checkpoint directory)");

    // ablations
    auto* abl_pe = app.add_subcommand("ablate-pe",
                                      "compare PE strategies on fixed splits");
    CommonFlags abl_pe_flags;
    add_run_flags(abl_pe, abl_pe_flags);

    auto* abl_fu = app.add_subcommand("ablate-fusion",
                                      "compare single relations against fusion");
    CommonFlags abl_fu_flags;
    add_run_flags(abl_fu, abl_fu_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (prep->parsed()) {
            mandate::PrepareSynthArgs args;
            args.out = prep_args.out;
            args.cfg.num_nodes = prep_args.nodes;
            args.cfg.num_relations = prep_args.relations;
            args.cfg.fraud_rate = prep_args.fraud_rate;
            args.cfg.feature_dim = prep_args.feature_dim;
            args.cfg.feature_signal = prep_args.feature_signal;
            args.cfg.seed = prep_args.seed;
            args.cfg.homophily = parse_double_list(prep_args.homophily);
            args.cfg.mean_degree =
                prep_args.mean_degree.empty()
                    ? std::vector<double>(prep_args.relations, 6.0)
                    : parse_double_list(prep_args.mean_degree);
            mandate::cmd_prepare_synthetic(args);
            std::cout << "dataset written to " << args.out << "\n";
        } else if (pe->parsed()) {
            mandate::cmd_precompute_pe(pe_args);
            std::cout << "PE caches written to " << pe_args.out << "\n";
        } else if (train->parsed()) {
            const mandate::RunConfig rc = resolve_config(train_flags);
            const mandate::TrainOutcome outcome = mandate::cmd_train(rc);
            std::cout << "trained " << outcome.history.epochs.size() << " epochs, best "
                      << outcome.history.best_epoch << " (val monitor "
                      << mandate::format_double(outcome.history.best_monitor) << ")\n";
            if (outcome.history.diverged) {
                std::cerr << "training diverged; kept the best finite checkpoint\n";
                return 3;
            }
        } else if (eval->parsed()) {
            const mandate::MetricsReport r = mandate::cmd_eval(
                eval_args.data, eval_args.checkpoint, eval_args.split, eval_args.out);
            std::cout << eval_args.split << " auc " << mandate::format_double(r.auc)
                      << " f1_macro " << mandate::format_double(r.f1_macro) << " gmean "
                      << mandate::format_double(r.gmean) << "\n";
        } else if (abl_pe->parsed()) {
            const auto results = mandate::cmd_ablate_pe(resolve_config(abl_pe_flags));
            for (const auto& [name, r] : results)
                std::cout << name << " auc " << mandate::format_double(r.auc) << "\n";
        } else if (abl_fu->parsed()) {
            const auto results = mandate::cmd_ablate_fusion(resolve_config(abl_fu_flags));
            for (const auto& [name, r] : results)
                std::cout << name << " auc " << mandate::format_double(r.auc) << "\n";
        }
    } catch (const mandate::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const mandate::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const mandate::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
