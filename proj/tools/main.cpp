#include <cmath>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "common.hpp"
#include "config.hpp"
#include "json.hpp"
#include "l3ppi/census.hpp"
#include "l3ppi/metrics.hpp"
#include "l3ppi/model_io.hpp"
#include "l3ppi/pretrain.hpp"
#include "l3ppi/synth.hpp"
#include "l3ppi/trainer.hpp"

namespace l3ppi::cli {

namespace {

// exit codes: 0 ok, 2 config error, 3 data error, 4 runtime/convergence error
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kRuntimeError = 4;

std::array<double, 3> parse_ratios(const std::string& text) {
    std::array<double, 3> out{};
    std::stringstream ss(text);
    std::string tok;
    std::size_t i = 0;
    while (std::getline(ss, tok, ',')) {
        if (i >= 3) throw ConfigError("ratios want exactly three comma-separated numbers");
        try {
            out[i++] = std::stod(tok);
        } catch (const std::exception&) {
            throw ConfigError("bad ratio value '" + tok + "'");
        }
    }
    if (i != 3) throw ConfigError("ratios want exactly three comma-separated numbers");
    return out;
}

// ---- synth ------------------------------------------------------------------

RunConfig synth_config() {
    return RunConfig({
        {"synth.n", "600", "number of proteins"},
        {"synth.alphabet", "12", "shape alphabet size"},
        {"synth.q_hit", "0.4", "edge probability for complementary pairs"},
        {"synth.q_noise", "0.002", "edge probability otherwise"},
        {"synth.sigma", "0.1", "embedding noise stddev"},
        {"synth.heldout", "200", "held-out labeled non-edge pairs"},
        {"seed", "0", "master seed"},
        {"out", "out/synth", "output directory"},
    });
}

int run_synth(const RunConfig& cfg) {
    SynthConfig sc;
    sc.n_proteins = static_cast<int>(cfg.integer("synth.n"));
    sc.alphabet = static_cast<int>(cfg.integer("synth.alphabet"));
    sc.q_hit = cfg.real("synth.q_hit");
    sc.q_noise = cfg.real("synth.q_noise");
    sc.sigma = cfg.real("synth.sigma");
    sc.n_heldout = static_cast<int>(cfg.integer("synth.heldout"));
    sc.seed = static_cast<std::uint64_t>(cfg.integer("seed"));

    SynthData data = synth_network(sc);
    const auto out_dir = resolve_out_dir(cfg.str("out"));
    save_network(data.net, (out_dir / "net.tsv").string());
    save_embeddings(data.embs, (out_dir / "emb.txt").string());

    nlohmann::json truth;
    truth["shape_id"] = data.truth.shape_id;
    truth["orientation"] = data.truth.orientation;
    nlohmann::json heldout = nlohmann::json::array();
    for (const SplitPair& p : data.heldout)
        heldout.push_back({{"u", data.net.node_id(p.u)},
                           {"v", data.net.node_id(p.v)},
                           {"complementary", p.label != 0}});
    truth["heldout_pairs"] = heldout;
    truth["nodes"] = data.net.node_count();
    truth["edges"] = data.net.edge_count();
    write_text(out_dir / "truth.json", truth.dump(2) + "\n");

    ManifestBuilder manifest("synth", cfg, sc.seed);
    manifest.write(out_dir);
    std::cout << "synth: " << data.net.node_count() << " proteins, " << data.net.edge_count()
              << " interactions -> " << out_dir.string() << "\n";
    return kOk;
}

// ---- validate-l3 ---------------------------------------------------------------

RunConfig validate_config() {
    return RunConfig({
        {"net", "", "edge-list TSV path"},
        {"net_format", "edgelist", "edgelist|string (STRING export conversion)"},
        {"mode", "binary", "binary|multilabel"},
        {"emb", "", "optional embedding file (recorded in the manifest)"},
        {"kmax", "7", "largest path length"},
        {"n_pos", "500", "sampled interacting pairs"},
        {"n_neg", "500", "sampled non-interacting pairs"},
        {"seed", "0", "master seed"},
        {"workers", "1", "census worker threads"},
        {"out", "out/validate-l3", "output directory"},
    });
}

int run_validate(const RunConfig& cfg) {
    PpiNetwork net = load_net(cfg);
    const int kmax = static_cast<int>(cfg.integer("kmax"));
    const auto seed = static_cast<std::uint64_t>(cfg.integer("seed"));
    L3Report report =
        l3_report(net, static_cast<int>(cfg.integer("n_pos")), static_cast<int>(cfg.integer("n_neg")),
                  kmax, seed, static_cast<int>(cfg.integer("workers")));

    const auto out_dir = resolve_out_dir(cfg.str("out"));
    write_text(out_dir / "census.csv", census_csv(net, report.census_rows, kmax));
    write_text(out_dir / "summary.csv", summary_csv(report));

    nlohmann::json metrics;
    for (const auto& row : report.rows) {
        nlohmann::json entry;
        entry["k"] = row.k;
        if (row.rho)
            entry["pearson"] = *row.rho;
        else
            entry["pearson"] = nullptr;
        entry["mi"] = row.mi;
        metrics["per_k"].push_back(entry);
    }
    write_text(out_dir / "metrics.json", metrics.dump(2) + "\n");

    ManifestBuilder manifest("validate-l3", cfg, seed);
    manifest.add_input("net", cfg.str("net"));
    if (cfg.has("emb")) manifest.add_input("emb", cfg.str("emb"));
    manifest.write(out_dir);
    std::cout << summary_csv(report);
    return kOk;
}

// ---- split -------------------------------------------------------------------

RunConfig split_config() {
    return RunConfig({
        {"net", "", "edge-list TSV path"},
        {"net_format", "edgelist", "edgelist|string"},
        {"mode", "binary", "binary|multilabel"},
        {"scheme", "random", "random|bfs|dfs"},
        {"t", "6", "root degree threshold (accepted roots have degree < t)"},
        {"ratios", "0.6,0.2,0.2", "train,val,test fractions"},
        {"seed", "0", "master seed"},
        {"out", "out/split", "output directory"},
    });
}

int run_split(const RunConfig& cfg) {
    PpiNetwork net = load_net(cfg);
    const auto seed = static_cast<std::uint64_t>(cfg.integer("seed"));
    const auto ratios = parse_ratios(cfg.str("ratios"));
    const SplitScheme scheme = split_scheme_from_string(cfg.str("scheme"));

    SplitSpec spec;
    if (scheme == SplitScheme::Random) {
        spec = net.mode() == NetworkMode::Binary ? binary_random_split(net, ratios, seed)
                                                 : multilabel_random_split(net, ratios, seed);
    } else {
        const auto target = static_cast<std::size_t>(
            std::llround(ratios[2] * static_cast<double>(net.edge_count())));
        spec = split_search(net, scheme, std::max<std::size_t>(target, 1),
                            static_cast<int>(cfg.integer("t")), seed);
    }

    const auto out_dir = resolve_out_dir(cfg.str("out"));
    write_split(spec, net, (out_dir / "split").string());
    ManifestBuilder manifest("split", cfg, seed);
    manifest.add_input("net", cfg.str("net"));
    manifest.write(out_dir);
    std::cout << "split: train=" << spec.train.size() << " val=" << spec.val.size()
              << " test=" << spec.test.size() << " -> " << out_dir.string() << "\n";
    return kOk;
}

// ---- pretrain -------------------------------------------------------------------

RunConfig pretrain_config() {
    return RunConfig({
        {"net", "", "edge-list TSV path"},
        {"net_format", "edgelist", "edgelist|string"},
        {"mode", "binary", "binary|multilabel"},
        {"emb", "", "embedding file"},
        {"split", "", "optional split base path; restricts visible edges to the train fold"},
        {"pretrain.neg_pairs", "-1", "sampled non-edges (-1 = one per edge)"},
        {"pretrain.cap", "100", "per-pair path cap (reservoir sampled)"},
        {"pretrain.layers", "2", "surrogate GIN layers"},
        {"pretrain.hidden", "32", "surrogate hidden width"},
        {"pretrain.dropout", "0.0", "dropout rate"},
        {"pretrain.lr", "1e-3", "learning rate"},
        {"pretrain.batch", "64", "batch size"},
        {"pretrain.epochs", "60", "training epochs"},
        {"pretrain.val_fraction", "0.1", "validation share of the path dataset"},
        {"pretrain.cache", "true", "reuse/write the dataset cache file"},
        {"seed", "0", "master seed"},
        {"workers", "1", "batch-parallel workers"},
        {"out", "out/pretrain", "output directory"},
    });
}

int run_pretrain(const RunConfig& cfg) {
    PpiNetwork full_net = load_net(cfg);
    EmbeddingTable embs = load_emb(cfg);
    const auto seed = static_cast<std::uint64_t>(cfg.integer("seed"));

    PpiNetwork net = full_net;
    std::vector<std::pair<int, int>> exclude;
    if (cfg.has("split")) {
        SplitSpec split = load_split_base(cfg, full_net);
        net = train_network(full_net, split);
        exclude = heldout_pairs(split);
    }

    int neg_pairs = static_cast<int>(cfg.integer("pretrain.neg_pairs"));
    if (neg_pairs < 0) neg_pairs = static_cast<int>(net.edge_count());
    const int cap = static_cast<int>(cfg.integer("pretrain.cap"));

    const auto out_dir = resolve_out_dir(cfg.str("out"));
    const std::string cache_path = (out_dir / "dataset.cache").string();
    PretrainDataset dataset;
    const bool use_cache = cfg.boolean("pretrain.cache");
    if (!use_cache ||
        !load_pretrain_cache(cache_path, seed, neg_pairs, cap, net.edge_count(), dataset)) {
        dataset = build_pretrain_dataset(net, embs, neg_pairs, cap, seed, exclude);
        if (use_cache)
            save_pretrain_cache(cache_path, dataset, seed, neg_pairs, cap, net.edge_count());
    }

    PretrainConfig pc;
    pc.gin.layers = static_cast<int>(cfg.integer("pretrain.layers"));
    pc.gin.hidden = static_cast<int>(cfg.integer("pretrain.hidden"));
    pc.gin.dropout = cfg.real("pretrain.dropout");
    pc.lr = cfg.real("pretrain.lr");
    pc.batch_size = static_cast<int>(cfg.integer("pretrain.batch"));
    pc.epochs = static_cast<int>(cfg.integer("pretrain.epochs"));
    pc.val_fraction = cfg.real("pretrain.val_fraction");
    pc.seed = seed;
    pc.workers = static_cast<int>(cfg.integer("workers"));

    FeatureMatrix features = embs.aligned_to(net);
    PretrainResult result = pretrain(dataset, features, pc);

    save_surrogate((out_dir / "surrogate.ckpt").string(), result.model, cfg.to_json().dump());
    write_text(out_dir / "pretrain_history.jsonl", pretrain_history_jsonl(result.history));

    ManifestBuilder manifest("pretrain", cfg, seed);
    manifest.add_input("net", cfg.str("net"));
    manifest.add_input("emb", cfg.str("emb"));
    manifest.write(out_dir);
    std::cout << "pretrain: " << dataset.samples.size() << " path samples, best val loss "
              << result.best_val_loss << " at epoch " << result.best_epoch << "\n";
    return kOk;
}

// ---- tune -------------------------------------------------------------------------

RunConfig tune_config() {
    return RunConfig({
        {"net", "", "edge-list TSV path"},
        {"net_format", "edgelist", "edgelist|string"},
        {"mode", "binary", "binary|multilabel"},
        {"emb", "", "embedding file"},
        {"split", "", "split base path (required)"},
        {"surrogate", "", "frozen surrogate checkpoint"},
        {"tune.k", "16", "prompt path budget K"},
        {"tune.gamma", "2.0", "path-number hinge width (gamma > 1)"},
        {"tune.lambda_pn", "0.3", "path-number loss weight"},
        {"tune.lr", "1e-3", "learning rate"},
        {"tune.batch", "16", "batch size"},
        {"tune.stage1_epochs", "100", "stage-1 epoch cap"},
        {"tune.stage2_epochs", "60", "stage-2 epoch cap"},
        {"tune.strategy", "P->G", "P|G|P&G|P->G|G->P|IterPG"},
        {"tune.tau0", "1.0", "initial gumbel temperature"},
        {"tune.tau_decay", "0.97", "temperature decay per gated epoch"},
        {"tune.tau_min", "0.1", "temperature floor"},
        {"tune.conv_delta", "0.05", "convergence loss-fluctuation threshold"},
        {"tune.conv_window", "10", "convergence window (epochs)"},
        {"tune.gating_layers", "1", "gating GIN layers"},
        {"tune.gating_hidden", "64", "gating hidden width"},
        {"tune.dropout", "0.0", "dropout rate"},
        {"seed", "0", "master seed"},
        {"workers", "1", "batch-parallel workers"},
        {"out", "out/tune", "output directory"},
    });
}

TuneConfig tune_params(const RunConfig& cfg) {
    TuneConfig tc;
    tc.path_budget = static_cast<int>(cfg.integer("tune.k"));
    tc.gamma = cfg.real("tune.gamma");
    tc.lambda_pn = cfg.real("tune.lambda_pn");
    tc.lr = cfg.real("tune.lr");
    tc.batch_size = static_cast<int>(cfg.integer("tune.batch"));
    tc.stage1_max_epochs = static_cast<int>(cfg.integer("tune.stage1_epochs"));
    tc.stage2_max_epochs = static_cast<int>(cfg.integer("tune.stage2_epochs"));
    tc.strategy = strategy_from_string(cfg.str("tune.strategy"));
    tc.tau0 = cfg.real("tune.tau0");
    tc.tau_decay = cfg.real("tune.tau_decay");
    tc.tau_min = cfg.real("tune.tau_min");
    tc.convergence_delta = cfg.real("tune.conv_delta");
    tc.convergence_window = static_cast<int>(cfg.integer("tune.conv_window"));
    tc.dropout = cfg.real("tune.dropout");
    tc.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
    tc.workers = static_cast<int>(cfg.integer("workers"));
    return tc;
}

int run_tune(const RunConfig& cfg) {
    PpiNetwork net = load_net(cfg);
    EmbeddingTable embs = load_emb(cfg);
    SplitSpec split = load_split_base(cfg, net);
    if (!cfg.has("surrogate")) throw ConfigError("missing required key 'surrogate'");
    SurrogateModel surrogate = load_surrogate(cfg.str("surrogate"));

    const TuneConfig tc = tune_params(cfg);
    const SeedStreams seeds{tc.seed};
    Rng init_rng = make_rng(derive_seed(seeds.init(), "tune"));

    PromptModel initial;
    initial.surrogate = std::move(surrogate);
    initial.bank = make_prompt_bank(tc.path_budget, embs.dim(), init_rng);
    GinConfig gating_cfg{static_cast<int>(cfg.integer("tune.gating_layers")),
                         static_cast<int>(cfg.integer("tune.gating_hidden")), tc.dropout};
    initial.gating = make_gating(embs.dim(), gating_cfg, init_rng);

    const int n_types =
        net.mode() == NetworkMode::Multilabel ? static_cast<int>(net.type_names().size()) : 0;
    FeatureMatrix features = embs.aligned_to(net);
    TuneResult result = tune(split.train, split.val, initial, features, n_types, tc);

    const auto out_dir = resolve_out_dir(cfg.str("out"));
    save_prompt_model((out_dir / "bundle.ckpt").string(), result.model, cfg.to_json().dump());
    write_text(out_dir / "history.jsonl", history_jsonl(result.history));

    ManifestBuilder manifest("tune", cfg, tc.seed);
    manifest.add_input("net", cfg.str("net"));
    manifest.add_input("emb", cfg.str("emb"));
    manifest.add_input("surrogate", cfg.str("surrogate"));
    manifest.write(out_dir);
    std::cout << "tune: strategy " << to_string(tc.strategy) << ", best val F1 "
              << result.best_val_f1 << " (stage " << result.best_stage << ", epoch "
              << result.best_epoch << ")\n";
    return kOk;
}

// ---- eval ---------------------------------------------------------------------------

RunConfig eval_config() {
    return RunConfig({
        {"net", "", "edge-list TSV path"},
        {"net_format", "edgelist", "edgelist|string"},
        {"mode", "binary", "binary|multilabel"},
        {"emb", "", "embedding file"},
        {"split", "", "split base path"},
        {"bundle", "", "trained head bundle checkpoint"},
        {"eval.threshold", "0.5", "decision threshold"},
        {"eval.scatter", "true", "emit inferred-vs-actual scatter for the test fold"},
        {"seed", "0", "master seed (recorded; evaluation is deterministic)"},
        {"workers", "1", "evaluation worker threads"},
        {"out", "out/eval", "output directory"},
    });
}

nlohmann::json category_json(const std::optional<CategoryMetrics>& cm) {
    if (!cm) return nullptr;
    return {{"pairs", cm->pairs},
            {"f1", cm->f1},
            {"tp", cm->confusion.tp},
            {"fp", cm->confusion.fp},
            {"fn", cm->confusion.fn},
            {"tn", cm->confusion.tn}};
}

int run_eval(const RunConfig& cfg) {
    PpiNetwork net = load_net(cfg);
    EmbeddingTable embs = load_emb(cfg);
    SplitSpec split = load_split_base(cfg, net);
    if (!cfg.has("bundle")) throw ConfigError("missing required key 'bundle'");
    PromptModel model = load_prompt_model(cfg.str("bundle"));

    const int n_types =
        net.mode() == NetworkMode::Multilabel ? static_cast<int>(net.type_names().size()) : 0;
    FeatureMatrix features = embs.aligned_to(net);
    const int workers = static_cast<int>(cfg.integer("workers"));
    EvalMetrics metrics = eval_split(model, split, features, net.node_count(), n_types,
                                     cfg.real("eval.threshold"), workers);

    nlohmann::json j;
    j["overall_micro_f1"] = metrics.overall_f1;
    j["test_pairs"] = metrics.test_pairs;
    j["confusion"] = {{"tp", metrics.confusion.tp},
                      {"fp", metrics.confusion.fp},
                      {"fn", metrics.confusion.fn},
                      {"tn", metrics.confusion.tn}};
    j["bs"] = category_json(metrics.bs);
    j["es"] = category_json(metrics.es);
    j["ns"] = category_json(metrics.ns);

    const auto out_dir = resolve_out_dir(cfg.str("out"));
    if (cfg.boolean("eval.scatter") && split.test.size() >= 2) {
        // actual counts live in the full network, as in the paper's comparison
        InferredVsActualResult scatter =
            inferred_vs_actual(model, net, split.test, features, workers);
        write_text(out_dir / "scatter.csv", inferred_vs_actual_csv(net, scatter));
        if (scatter.rho)
            j["inferred_vs_actual_rho"] = *scatter.rho;
        else
            j["inferred_vs_actual_rho"] = nullptr;
    }
    write_text(out_dir / "metrics.json", j.dump(2) + "\n");

    ManifestBuilder manifest("eval", cfg, static_cast<std::uint64_t>(cfg.integer("seed")));
    manifest.add_input("net", cfg.str("net"));
    manifest.add_input("emb", cfg.str("emb"));
    manifest.add_input("bundle", cfg.str("bundle"));
    manifest.write(out_dir);
    std::cout << "eval: micro-F1 " << metrics.overall_f1 << " over " << metrics.test_pairs
              << " test pairs\n";
    return kOk;
}

// ---- ablate ------------------------------------------------------------------------

RunConfig ablate_config() {
    RunConfig cfg = tune_config();
    // the sweep grid replaces single-value keys where given
    RunConfig out({
        {"sweep.k", "", "comma list of K values (e.g. 4,16,64)"},
        {"sweep.strategies", "", "comma list of strategies"},
    });
    std::vector<KeySpec> merged = cfg.help();
    for (const KeySpec& s : out.help()) merged.push_back(s);
    return RunConfig(merged);
}

int run_ablate(const RunConfig& cfg) {
    std::vector<int> k_values;
    if (cfg.has("sweep.k")) {
        std::stringstream ss(cfg.str("sweep.k"));
        std::string tok;
        while (std::getline(ss, tok, ',')) k_values.push_back(std::stoi(tok));
    } else {
        k_values.push_back(static_cast<int>(cfg.integer("tune.k")));
    }
    std::vector<std::string> strategies;
    if (cfg.has("sweep.strategies")) {
        std::stringstream ss(cfg.str("sweep.strategies"));
        std::string tok;
        while (std::getline(ss, tok, ',')) strategies.push_back(tok);
    } else {
        strategies.push_back(cfg.str("tune.strategy"));
    }

    PpiNetwork net = load_net(cfg);
    EmbeddingTable embs = load_emb(cfg);
    SplitSpec split = load_split_base(cfg, net);
    if (!cfg.has("surrogate")) throw ConfigError("missing required key 'surrogate'");
    SurrogateModel surrogate = load_surrogate(cfg.str("surrogate"));
    const int n_types =
        net.mode() == NetworkMode::Multilabel ? static_cast<int>(net.type_names().size()) : 0;
    FeatureMatrix features = embs.aligned_to(net);

    const auto out_dir = resolve_out_dir(cfg.str("out"));
    std::ostringstream table;
    table << "k,strategy,val_f1,test_f1\n";

    for (int k : k_values) {
        for (const std::string& strategy : strategies) {
            TuneConfig tc = tune_params(cfg);
            tc.path_budget = k;
            tc.strategy = strategy_from_string(strategy);

            const SeedStreams seeds{tc.seed};
            Rng init_rng = make_rng(derive_seed(seeds.init(), "tune"));
            PromptModel initial;
            initial.surrogate = clone_surrogate(surrogate);
            initial.bank = make_prompt_bank(tc.path_budget, embs.dim(), init_rng);
            GinConfig gating_cfg{static_cast<int>(cfg.integer("tune.gating_layers")),
                                 static_cast<int>(cfg.integer("tune.gating_hidden")), tc.dropout};
            initial.gating = make_gating(embs.dim(), gating_cfg, init_rng);

            TuneResult result = tune(split.train, split.val, initial, features, n_types, tc);
            EvalMetrics metrics = eval_split(result.model, split, features, net.node_count(),
                                             n_types, 0.5, tc.workers);

            std::string cell = "k" + std::to_string(k) + "_" + strategy;
            for (char& c : cell)
                if (c == '>' || c == '&' || c == '-') c = '_';
            const auto cell_dir = out_dir / cell;
            std::filesystem::create_directories(cell_dir);
            save_prompt_model((cell_dir / "bundle.ckpt").string(), result.model,
                              cfg.to_json().dump());
            write_text(cell_dir / "history.jsonl", history_jsonl(result.history));
            table << k << ',' << strategy << ',' << result.best_val_f1 << ','
                  << metrics.overall_f1 << '\n';
            std::cout << "ablate: K=" << k << " strategy=" << strategy << " test F1 "
                      << metrics.overall_f1 << "\n";
        }
    }
    write_text(out_dir / "comparison.csv", table.str());
    ManifestBuilder manifest("ablate", cfg, static_cast<std::uint64_t>(cfg.integer("seed")));
    manifest.add_input("net", cfg.str("net"));
    manifest.add_input("emb", cfg.str("emb"));
    manifest.add_input("surrogate", cfg.str("surrogate"));
    manifest.write(out_dir);
    return kOk;
}

// ---- wiring --------------------------------------------------------------------------

struct Subcommand {
    RunConfig cfg;
    std::string config_file;
    std::map<std::string, std::string> flag_values;  // set only when passed
};

void attach(CLI::App* app, Subcommand& sub) {
    app->add_option("--config", sub.config_file, "JSON config file (flags win over file keys)");
    for (const KeySpec& spec : sub.cfg.help()) {
        std::string flag = "--" + spec.key;
        for (char& c : flag)
            if (c == '.') c = '-';
        app->add_option_function<std::string>(
               flag, [&sub, key = spec.key](const std::string& v) { sub.flag_values[key] = v; },
               spec.help + " [default: " + spec.default_value + "]")
            ->expected(1);
    }
}

void finalize(Subcommand& sub) {
    if (!sub.config_file.empty()) sub.cfg.load_file(sub.config_file);
    for (const auto& [key, value] : sub.flag_values) sub.cfg.set(key, value);
}

}  // namespace

int main_impl(int argc, char** argv) {
    CLI::App app{"L3-path-regularized graph prompt learning toolkit for interaction networks"};
    app.require_subcommand(1);

    struct Entry {
        const char* name;
        const char* help;
        RunConfig (*make)();
        int (*run)(const RunConfig&);
    };
    const Entry entries[] = {
        {"synth", "generate a complementarity network with embeddings", synth_config, run_synth},
        {"validate-l3", "path census + correlation/MI report", validate_config, run_validate},
        {"split", "train/val/test partition (random, bfs, dfs)", split_config, run_split},
        {"pretrain", "train the L3 pattern validity surrogate", pretrain_config, run_pretrain},
        {"tune", "prompt tuning with gated path selection", tune_config, run_tune},
        {"eval", "evaluate a trained bundle on a split", eval_config, run_eval},
        {"ablate", "strategy / K sweeps with a comparison table", ablate_config, run_ablate},
    };

    std::vector<std::unique_ptr<Subcommand>> subs;
    std::vector<std::pair<CLI::App*, std::size_t>> wired;
    for (std::size_t i = 0; i < std::size(entries); ++i) {
        auto sub = std::make_unique<Subcommand>(Subcommand{entries[i].make(), "", {}});
        CLI::App* capp = app.add_subcommand(entries[i].name, entries[i].help);
        attach(capp, *sub);
        wired.emplace_back(capp, i);
        subs.push_back(std::move(sub));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        for (std::size_t i = 0; i < wired.size(); ++i) {
            if (wired[i].first->parsed()) {
                finalize(*subs[i]);
                return entries[wired[i].second].run(subs[i]->cfg);
            }
        }
        return kConfigError;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
}

}  // namespace l3ppi::cli

int main(int argc, char** argv) { return l3ppi::cli::main_impl(argc, argv); }
