#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "mandate/runconfig.hpp"
#include "mandate/synth.hpp"
#include "mandate/train.hpp"

namespace mandate {

// Shared command implementations; the CLI binary and the acceptance suite
// both run experiments through these entry points.

struct PrepareSynthArgs {
    std::string out;
    SynthConfig cfg;
};

inline void cmd_prepare_synthetic(const PrepareSynthArgs& args) {
    if (args.out.empty()) throw UsageError("prepare-synthetic: --out is required");
    const MultiRelGraph g = synth_generate(args.cfg);
    save_dataset(g, args.out);
}

struct PrecomputePeArgs {
    std::string data;
    std::string out;
    std::size_t k = 2;
    std::size_t anchors = 512;
    std::uint64_t seed = 7;
};

inline std::string pe_cache_name(std::size_t relation) {
    return "pe_rel_" + std::to_string(relation) + ".bin";
}

inline void cmd_precompute_pe(const PrecomputePeArgs& args) {
    if (args.data.empty() || args.out.empty())
        throw UsageError("precompute-pe: --data and --out are required");
    if (args.k == 0) throw UsageError("precompute-pe: --k must be at least 1");
    const MultiRelGraph g = load_dataset(args.data);
    const std::uint64_t hash = content_hash(g);
    if (args.anchors > g.num_nodes)
        std::cerr << "note: anchor count " << args.anchors << " clamped to "
                  << g.num_nodes << " nodes\n";
    const std::vector<NodeId> anchors =
        select_anchors(g.num_nodes, args.anchors, args.seed);
    std::vector<NodeId> sources(g.num_nodes);
    for (std::size_t i = 0; i < g.num_nodes; ++i) sources[i] = static_cast<NodeId>(i);
    std::filesystem::create_directories(args.out);
    for (std::size_t r = 0; r < g.num_relations(); ++r) {
        const WalkOperator w = walk_operator(g.adjacencies[r]);
        const PeTable pe = pe_rows(w, sources, args.k, anchors);
        save_pe_cache(pe, hash,
                      (std::filesystem::path(args.out) / pe_cache_name(r)).string());
    }
}

namespace detail {

inline ModelConfig model_config_from(const RunConfig& rc) {
    ModelConfig mc;
    mc.hops = rc.get_size("k");
    mc.hidden = rc.get_size("hidden");
    mc.pos_dim = rc.get_size("pos_dim");
    mc.layers = rc.get_size("layers");
    mc.heads = rc.get_size("heads");
    mc.lambda_orth = rc.get_double("lambda_orth");
    mc.dropout = rc.get_double("dropout");
    mc.pe_mode = pe_mode_from_string(rc.get_str("pe_mode"));
    mc.ppr_alpha = rc.get_double("ppr_alpha");
    mc.orth_mode = orth_mode_from_string(rc.get_str("orth_mode"));
    if (mc.hops == 0) throw UsageError("config: k must be at least 1");
    if (mc.heads == 0 || mc.layers == 0)
        throw UsageError("config: layers and heads must be at least 1");
    return mc;
}

inline TrainConfig train_config_from(const RunConfig& rc) {
    TrainConfig tc;
    tc.max_epochs = rc.get_size("epochs");
    tc.patience = rc.get_size("patience");
    tc.lr = rc.get_double("lr");
    tc.batch_size = rc.get_size("batch_size");
    tc.seed = rc.get_u64("seed");
    tc.monitor = rc.get_str("monitor");
    tc.attention_cap = rc.get_size("attention_cap");
    return tc;
}

inline SplitRatios ratios_from(const RunConfig& rc) {
    SplitRatios r;
    r.train = rc.get_double("train_ratio");
    r.val = rc.get_double("val_ratio");
    r.test = rc.get_double("test_ratio");
    return r;
}

// PE tables for every relation: loaded from a cache directory when given,
// recomputed otherwise. Cached tables must match the dataset hash and carry
// at least `k` hops.
inline std::vector<PeTable> pe_for_graph(const MultiRelGraph& g, std::size_t k,
                                         std::size_t anchor_cap, std::uint64_t seed,
                                         const std::string& pe_dir) {
    const std::uint64_t hash = content_hash(g);
    std::vector<PeTable> out;
    if (!pe_dir.empty()) {
        for (std::size_t r = 0; r < g.num_relations(); ++r) {
            PeTable pe = load_pe_cache(
                (std::filesystem::path(pe_dir) / pe_cache_name(r)).string(), hash);
            if (pe.k_hops < k)
                throw DataError("PE cache for relation " + std::to_string(r) + " has " +
                                std::to_string(pe.k_hops) + " hops, config needs " +
                                std::to_string(k));
            out.push_back(pe.k_hops == k ? std::move(pe) : pe.truncated(k));
        }
        for (std::size_t r = 1; r < out.size(); ++r)
            if (out[r].anchors != out[0].anchors)
                throw DataError("PE caches disagree on the anchor set");
        return out;
    }
    const std::vector<NodeId> anchors = select_anchors(g.num_nodes, anchor_cap, seed);
    std::vector<NodeId> sources(g.num_nodes);
    for (std::size_t i = 0; i < g.num_nodes; ++i) sources[i] = static_cast<NodeId>(i);
    for (std::size_t r = 0; r < g.num_relations(); ++r)
        out.push_back(pe_rows(walk_operator(g.adjacencies[r]), sources, k, anchors));
    return out;
}

inline void write_history_csv(const TrainHistory& h, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write history: " + path);
    out << "epoch,train_loss,val_auc,val_f1_macro,val_gmean\n";
    for (const EpochRecord& r : h.epochs)
        out << r.epoch << "," << format_double(r.train_loss) << ","
            << format_double(r.val.auc) << "," << format_double(r.val.f1_macro) << ","
            << format_double(r.val.gmean) << "\n";
}

inline void write_metrics_json(const MetricsReport& r, const std::string& path) {
    nlohmann::json j;
    j["split"] = r.split;
    j["auc"] = r.auc;
    j["f1_macro"] = r.f1_macro;
    j["gmean"] = r.gmean;
    j["tp"] = r.counts.tp;
    j["fp"] = r.counts.fp;
    j["tn"] = r.counts.tn;
    j["fn"] = r.counts.fn;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write metrics: " + path);
    out << j.dump(2) << "\n";
}

inline void write_manifest(const MandateModel& model, const RunConfig& rc,
                           const MultiRelGraph& g,
                           const std::array<double, 2>& class_weights,
                           const std::string& path) {
    const ModelConfig& mc = model.config();
    nlohmann::json j;
    j["format"] = "mandate-checkpoint-v1";
    j["num_nodes"] = g.num_nodes;
    j["feature_dim"] = g.feature_dim;
    j["num_relations"] = g.num_relations();
    j["hops"] = mc.hops;
    j["hidden"] = mc.hidden;
    j["pos_dim"] = mc.pos_dim;
    j["layers"] = mc.layers;
    j["heads"] = mc.heads;
    j["lambda_orth"] = mc.lambda_orth;
    j["dropout"] = mc.dropout;
    j["pe_mode"] = to_string(mc.pe_mode);
    j["ppr_alpha"] = mc.ppr_alpha;
    j["orth_mode"] = to_string(mc.orth_mode);
    j["anchors"] = std::vector<NodeId>(model.anchors().begin(), model.anchors().end());
    j["attention_cap"] = rc.get_size("attention_cap");
    j["seed"] = rc.get_u64("seed");
    j["split"] = {{"train_ratio", rc.get_double("train_ratio")},
                  {"val_ratio", rc.get_double("val_ratio")},
                  {"test_ratio", rc.get_double("test_ratio")},
                  {"seed", rc.get_u64("seed")}};
    j["class_weights"] = class_weights;
    j["data_hash"] = std::to_string(content_hash(g));
    nlohmann::json params = nlohmann::json::array();
    for (std::size_t i = 0; i < model.params().size(); ++i) {
        const Param& p = model.params().item(i);
        params.push_back({{"name", p.name}, {"shape", p.value.shape}});
    }
    j["params"] = params;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace detail

struct TrainOutcome {
    TrainHistory history;
    std::string checkpoint_path;
    std::array<double, 2> class_weights = {1.0, 1.0};
};

inline TrainOutcome cmd_train(const RunConfig& rc) {
    const std::string data = rc.get_str("data");
    const std::string out_dir = rc.get_str("out");
    if (data.empty()) throw UsageError("train: data path is required");
    if (out_dir.empty()) throw UsageError("train: out path is required");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    const MultiRelGraph g = load_dataset(data);
    const std::uint64_t seed = rc.get_u64("seed");
    const SplitAssignment split = split_nodes(g, detail::ratios_from(rc), seed);
    std::vector<PeTable> pe = detail::pe_for_graph(
        g, rc.get_size("k"), rc.get_size("anchors"), seed, rc.get_str("pe_dir"));
    MandateModel model =
        MandateModel::build(g, detail::model_config_from(rc), seed, std::move(pe));
    const std::array<double, 2> class_weights = inverse_frequency_weights(g, split.train);

    const TrainHistory hist = train_model(model, g, split, detail::train_config_from(rc));

    rc.write_resolved((fs::path(out_dir) / "config.resolved").string());
    save_split(split, (fs::path(out_dir) / "split.json").string());
    detail::write_history_csv(hist, (fs::path(out_dir) / "history.csv").string());
    const std::string ckpt = (fs::path(out_dir) / "checkpoint.bin").string();
    save_params(model.params(), ckpt);
    detail::write_manifest(model, rc, g, class_weights,
                           (fs::path(out_dir) / "checkpoint.json").string());

    TrainOutcome outcome;
    outcome.history = hist;
    outcome.checkpoint_path = ckpt;
    outcome.class_weights = class_weights;
    return outcome;
}

// Rebuilds the model a checkpoint was trained with: architecture and anchors
// from the manifest, PE recomputed against the dataset, weights from the
// binary payload.
inline MetricsReport cmd_eval(const std::string& data, const std::string& checkpoint,
                              const std::string& split_name, const std::string& out_dir) {
    namespace fs = std::filesystem;
    const MultiRelGraph g = load_dataset(data);

    fs::path manifest_path(checkpoint);
    manifest_path.replace_extension(".json");
    std::ifstream min(manifest_path);
    if (!min) throw DataError("missing checkpoint manifest: " + manifest_path.string());
    nlohmann::json j;
    try {
        min >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest parse failure: " + std::string(e.what()));
    }

    const std::size_t ckpt_d = j.at("feature_dim").get<std::size_t>();
    if (ckpt_d != g.feature_dim)
        throw DataError("checkpoint feature_dim " + std::to_string(ckpt_d) +
                        " does not match dataset feature_dim " +
                        std::to_string(g.feature_dim));
    const std::size_t ckpt_r = j.at("num_relations").get<std::size_t>();
    if (ckpt_r != g.num_relations())
        throw DataError("checkpoint num_relations " + std::to_string(ckpt_r) +
                        " does not match dataset num_relations " +
                        std::to_string(g.num_relations()));
    if (j.at("data_hash").get<std::string>() != std::to_string(content_hash(g)))
        std::cerr << "warning: dataset content differs from the one this checkpoint "
                     "was trained on\n";

    ModelConfig mc;
    mc.hops = j.at("hops").get<std::size_t>();
    mc.hidden = j.at("hidden").get<std::size_t>();
    mc.pos_dim = j.at("pos_dim").get<std::size_t>();
    mc.layers = j.at("layers").get<std::size_t>();
    mc.heads = j.at("heads").get<std::size_t>();
    mc.lambda_orth = j.at("lambda_orth").get<double>();
    mc.dropout = j.at("dropout").get<double>();
    mc.pe_mode = pe_mode_from_string(j.at("pe_mode").get<std::string>());
    mc.ppr_alpha = j.at("ppr_alpha").get<double>();
    mc.orth_mode = orth_mode_from_string(j.at("orth_mode").get<std::string>());

    const auto anchors = j.at("anchors").get<std::vector<NodeId>>();
    for (NodeId a : anchors)
        if (a >= g.num_nodes)
            throw DataError("checkpoint anchor " + std::to_string(a) +
                            " out of range for dataset with " +
                            std::to_string(g.num_nodes) + " nodes");
    std::vector<NodeId> sources(g.num_nodes);
    for (std::size_t i = 0; i < g.num_nodes; ++i) sources[i] = static_cast<NodeId>(i);
    std::vector<PeTable> pe;
    for (std::size_t r = 0; r < g.num_relations(); ++r)
        pe.push_back(pe_rows(walk_operator(g.adjacencies[r]), sources, mc.hops, anchors));

    const std::uint64_t seed = j.at("seed").get<std::uint64_t>();
    MandateModel model = MandateModel::build(g, mc, seed, std::move(pe));
    load_params(model.params(), checkpoint);

    SplitRatios ratios;
    ratios.train = j.at("split").at("train_ratio").get<double>();
    ratios.val = j.at("split").at("val_ratio").get<double>();
    ratios.test = j.at("split").at("test_ratio").get<double>();
    const SplitAssignment split =
        split_nodes(g, ratios, j.at("split").at("seed").get<std::uint64_t>());

    const std::size_t cap = j.at("attention_cap").get<std::size_t>();
    const MetricsReport report =
        evaluate_model(model, g, split.by_name(split_name), split_name, cap);

    fs::path out = out_dir.empty() ? fs::path(checkpoint).parent_path() : fs::path(out_dir);
    if (!out.empty()) fs::create_directories(out);
    detail::write_metrics_json(report, (out / "metrics.json").string());
    return report;
}

namespace detail {

// Train+eval cycles on an already-loaded graph, averaged over a shared list
// of derived seeds so strategy comparisons are not hostage to one
// initialization. Splits and PE anchors stay fixed across runs.
inline MetricsReport run_variant(const MultiRelGraph& g, const SplitAssignment& split,
                                 const RunConfig& rc, const ModelConfig& mc) {
    const std::uint64_t root_seed = rc.get_u64("seed");
    const std::size_t reps = std::max<std::size_t>(1, rc.get_size("ablation_seeds"));
    std::vector<PeTable> pe = pe_for_graph(g, mc.hops, rc.get_size("anchors"),
                                           root_seed, rc.get_str("pe_dir"));
    MetricsReport mean;
    mean.split = "test";
    for (std::size_t i = 0; i < reps; ++i) {
        const std::uint64_t run_seed = reps == 1 ? root_seed : mix_seed(root_seed, i);
        std::vector<PeTable> pe_copy = pe;
        MandateModel model = MandateModel::build(g, mc, run_seed, std::move(pe_copy));
        TrainConfig tc = train_config_from(rc);
        tc.seed = run_seed;
        const TrainHistory hist = train_model(model, g, split, tc);
        if (hist.diverged)
            throw NumericError("ablation variant diverged; lower the learning rate");
        const MetricsReport r =
            evaluate_model(model, g, split.test, "test", tc.attention_cap);
        mean.auc += r.auc / static_cast<double>(reps);
        mean.f1_macro += r.f1_macro / static_cast<double>(reps);
        mean.gmean += r.gmean / static_cast<double>(reps);
        if (i == 0) mean.counts = r.counts;
    }
    return mean;
}

inline MultiRelGraph single_relation_view(const MultiRelGraph& g, std::size_t r) {
    MultiRelGraph v;
    v.num_nodes = g.num_nodes;
    v.feature_dim = g.feature_dim;
    v.features = g.features;
    v.labels = g.labels;
    v.adjacencies = {g.adjacencies[r]};
    v.relation_names = {g.relation_names[r]};
    return v;
}

}  // namespace detail

// PE-strategy ablation: the multi-scale default against a single-hop
// encoding and a frozen PPR weighting, with splits and seeds held fixed.
inline std::map<std::string, MetricsReport> cmd_ablate_pe(const RunConfig& rc) {
    const std::string data = rc.get_str("data");
    const std::string out_dir = rc.get_str("out");
    if (data.empty() || out_dir.empty())
        throw UsageError("ablate-pe: data and out paths are required");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    const MultiRelGraph g = load_dataset(data);
    const SplitAssignment split =
        split_nodes(g, detail::ratios_from(rc), rc.get_u64("seed"));

    std::map<std::string, MetricsReport> results;
    {
        ModelConfig mc = detail::model_config_from(rc);
        results["multi_scale"] = detail::run_variant(g, split, rc, mc);
    }
    {
        ModelConfig mc = detail::model_config_from(rc);
        mc.hops = 1;
        results["single_hop"] = detail::run_variant(g, split, rc, mc);
    }
    {
        ModelConfig mc = detail::model_config_from(rc);
        mc.pe_mode = PeMode::kFrozenPpr;
        results["frozen_ppr"] = detail::run_variant(g, split, rc, mc);
    }

    rc.write_resolved((fs::path(out_dir) / "config.resolved").string());
    std::ofstream csv(fs::path(out_dir) / "ablation.csv");
    csv << "strategy,metric,value\n";
    for (const char* strategy : {"multi_scale", "single_hop", "frozen_ppr"}) {
        const MetricsReport& r = results.at(strategy);
        csv << strategy << ",auc," << format_double(r.auc) << "\n";
        csv << strategy << ",f1_macro," << format_double(r.f1_macro) << "\n";
        csv << strategy << ",gmean," << format_double(r.gmean) << "\n";
    }
    return results;
}

// Fusion ablation: every relation on its own against the fused model, same
// splits and seeds throughout.
inline std::map<std::string, MetricsReport> cmd_ablate_fusion(const RunConfig& rc) {
    const std::string data = rc.get_str("data");
    const std::string out_dir = rc.get_str("out");
    if (data.empty() || out_dir.empty())
        throw UsageError("ablate-fusion: data and out paths are required");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    const MultiRelGraph g = load_dataset(data);
    const SplitAssignment split =
        split_nodes(g, detail::ratios_from(rc), rc.get_u64("seed"));
    const ModelConfig mc = detail::model_config_from(rc);

    std::map<std::string, MetricsReport> results;
    std::vector<std::string> order;
    // Cached PE tables describe the full graph; single-relation views have a
    // different content hash and relation numbering, so they recompute.
    RunConfig rc_view = rc;
    rc_view.set("pe_dir", "");
    for (std::size_t r = 0; r < g.num_relations(); ++r) {
        const MultiRelGraph view = detail::single_relation_view(g, r);
        const std::string name = "rel_" + std::to_string(r);
        results[name] = detail::run_variant(view, split, rc_view, mc);
        order.push_back(name);
    }
    results["fused"] = detail::run_variant(g, split, rc, mc);
    order.push_back("fused");

    rc.write_resolved((fs::path(out_dir) / "config.resolved").string());
    std::ofstream csv(fs::path(out_dir) / "ablation.csv");
    csv << "variant,auc,f1_macro,gmean\n";
    for (const std::string& name : order) {
        const MetricsReport& r = results.at(name);
        csv << name << "," << format_double(r.auc) << "," << format_double(r.f1_macro)
            << "," << format_double(r.gmean) << "\n";
    }
    return results;
}

}  // namespace mandate
