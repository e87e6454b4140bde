#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "geodemo/errors.hpp"
#include "geodemo/pipeline.hpp"
#include "geodemo/synthetic.hpp"
#include "geodemo/util.hpp"

namespace {

using namespace geodemo;

int g_workers = 0;
bool g_verbose = false;
std::uint64_t g_seed = 0;

void note(const std::string& msg) {
    if (g_verbose) std::cerr << "geodemo: " << msg << '\n';
}

int effective_workers() {
    if (g_workers > 0) return g_workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

bool given(const CLI::Option* opt) { return opt != nullptr && opt->count() > 0; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geodemo - demographic prediction from geotagged short-text records"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "pipeline config json supplying defaults; flags win");
    app.add_option("--workers", g_workers, "worker threads (0 = hardware concurrency)");
    app.add_option("--seed", g_seed, "fallback seed for stages without an explicit seed");
    app.add_flag("--verbose", g_verbose, "log stage progress to stderr");

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "filter raw records");
    std::vector<std::string> ingest_inputs;
    std::string ingest_output;
    std::string ingest_bbox;
    ingest_cmd->add_option("--input", ingest_inputs, "input path(s) or glob(s)")->required();
    ingest_cmd->add_option("--output", ingest_output, "filtered records path")->required();
    auto* ingest_bbox_opt =
        ingest_cmd->add_option("--bbox", ingest_bbox, "W,E,S,N (default: contiguous US)");

    // assign
    auto* assign_cmd = app.add_subcommand("assign", "annotate records with block geoids");
    std::string assign_records, assign_boundaries, assign_output;
    assign_cmd->add_option("--records", assign_records, "filtered records")->required();
    auto* assign_bounds_opt =
        assign_cmd->add_option("--boundaries", assign_boundaries, "boundary collection");
    assign_cmd->add_option("--output", assign_output, "annotated records path")->required();

    // bag
    auto* bag_cmd = app.add_subcommand("bag", "aggregate records into per-unit bags");
    std::string bag_records, bag_output, bag_resolution = "block";
    std::string bag_stopwords, bag_emoticons;
    bag_cmd->add_option("--records", bag_records, "assigned records")->required();
    auto* bag_res_opt =
        bag_cmd->add_option("--resolution", bag_resolution, "block|blockgroup|tract|county");
    bag_cmd->add_option("--output", bag_output, "bags path")->required();
    auto* bag_stop_opt = bag_cmd->add_option("--stopwords", bag_stopwords, "stopword list override");
    auto* bag_emo_opt = bag_cmd->add_option("--emoticons", bag_emoticons, "emoticon list override");

    // split
    auto* split_cmd = app.add_subcommand("split", "split units into train/validation/test");
    std::string split_bags, split_output;
    std::uint64_t split_seed = 0;
    split_cmd->add_option("--bags", split_bags, "bags path")->required();
    auto* split_seed_opt = split_cmd->add_option("--seed", split_seed, "split seed");
    split_cmd->add_option("--output", split_output, "splits csv path")->required();

    // featurize
    auto* feat_cmd = app.add_subcommand("featurize", "build transformed feature vectors");
    pipe::FeaturizeOptions feat_opts;
    std::string feat_role = "train", feat_scheme = "normalized_user", feat_transform = "none";
    feat_cmd->add_option("--bags", feat_opts.bags_path, "bags path")->required();
    feat_cmd->add_option("--splits", feat_opts.splits_path, "splits csv")->required();
    feat_cmd->add_option("--split", feat_role, "train|validation|test")->required();
    auto* feat_scheme_opt = feat_cmd->add_option(
        "--scheme", feat_scheme, "raw_word|normalized_word|raw_user|normalized_user");
    auto* feat_transform_opt = feat_cmd->add_option(
        "--transform", feat_transform, "none|tfidf|anscombe|logistic|gaussian");
    feat_cmd->add_option("--vocab", feat_opts.vocab_path, "vocabulary tsv path")->required();
    feat_cmd->add_flag("--fit", feat_opts.fit_vocabulary,
                       "fit the vocabulary and idf table (train split only)");
    feat_cmd->add_option("--output", feat_opts.output, "feature file path")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "grid-search and fit a model");
    pipe::TrainOptions train_opts;
    std::string train_variant = "unknown";
    std::uint64_t train_seed = 0;
    train_cmd->add_option("--features", train_opts.train_features, "train feature file")
        ->required();
    train_cmd->add_option("--val-features", train_opts.val_features, "validation feature file")
        ->required();
    auto* train_truth_opt = train_cmd->add_option("--truth", train_opts.truth_path, "truth csv");
    auto* train_variant_opt = train_cmd->add_option("--variant", train_variant, "unknown|known");
    auto* train_variable_opt =
        train_cmd->add_option("--variable", train_opts.variable, "demographic variable");
    auto* train_denom_opt = train_cmd->add_option(
        "--denominator", train_opts.denominator, "denominator category for the known variant");
    auto* train_lambda_opt =
        train_cmd->add_option("--grid-lambda", train_opts.grid_lambda,
                              "lambda grid (default: paper grid)")
            ->delimiter(',');
    auto* train_eta_opt = train_cmd
                              ->add_option("--grid-eta0", train_opts.grid_eta0,
                                           "eta0 grid (default: paper grid)")
                              ->delimiter(',');
    auto* train_epochs_opt =
        train_cmd->add_option("--epochs", train_opts.base.epochs, "epochs per fit");
    auto* train_rho_opt = train_cmd->add_option("--rho", train_opts.base.rho,
                                                "inverse-scaling exponent");
    auto* train_alpha_opt =
        train_cmd->add_option("--alpha", train_opts.base.alpha, "log-ratio count smoothing");
    auto* train_intercept_opt =
        train_cmd->add_flag("--intercept", train_opts.base.intercept, "fit an intercept term");
    auto* train_seed_opt = train_cmd->add_option("--seed", train_seed, "sgd shuffle seed");
    train_cmd->add_option("--output", train_opts.output, "model path")->required();

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "predict demographic counts");
    std::string predict_model, predict_features, predict_population, predict_output;
    predict_cmd->add_option("--model", predict_model, "model path")->required();
    predict_cmd->add_option("--features", predict_features, "feature file")->required();
    auto* predict_pop_opt = predict_cmd->add_option(
        "--population", predict_population, "truth csv with population rows (known variant)");
    predict_cmd->add_option("--output", predict_output, "predictions csv")->required();

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "score predictions against ground truth");
    pipe::EvaluateOptions eval_opts;
    eval_cmd->add_option("--pred", eval_opts.pred_path, "predictions csv")->required();
    auto* eval_truth_opt = eval_cmd->add_option("--truth", eval_opts.truth_path, "truth csv");
    eval_cmd->add_option("--bags", eval_opts.bags_path, "bags path (per-unit user counts)")
        ->required();
    eval_cmd->add_option("--pred-b", eval_opts.pred_b_path, "second configuration to compare");
    eval_cmd->add_option("--label-a", eval_opts.label_a, "label for --pred");
    eval_cmd->add_option("--label-b", eval_opts.label_b, "label for --pred-b");
    auto* eval_thres_opt =
        eval_cmd->add_option("--thresholds", eval_opts.thresholds, "user-count thresholds")
            ->delimiter(',');
    auto* eval_quant_opt =
        eval_cmd->add_option("--quantile", eval_opts.quantile, "relative-error quantile");
    auto* eval_res_opt =
        eval_cmd->add_option("--resolution", eval_opts.resolution, "resolution label");
    eval_cmd->add_option("--output", eval_opts.output, "report csv path")->required();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
    pipe::SynthConfig synth_cfg;
    auto* synth_seed_opt = synth_cmd->add_option("--seed", synth_cfg.seed, "generator seed");
    synth_cmd->add_option("--units", synth_cfg.n_units, "number of block units");
    synth_cmd->add_option("--vocab", synth_cfg.vocab_size, "vocabulary size");
    synth_cmd->add_option("--categories", synth_cfg.categories, "demographic categories");
    synth_cmd->add_option("--users-min", synth_cfg.users_min, "min users per unit");
    synth_cmd->add_option("--users-max", synth_cfg.users_max, "max users per unit");
    synth_cmd->add_option("--tokens-per-user", synth_cfg.tokens_per_user, "tokens per user");
    synth_cmd->add_option("--out", synth_cfg.out_dir, "output directory")->required();

    // run
    auto* run_cmd = app.add_subcommand("run", "run the full pipeline from a config file");
    std::string run_workdir, run_variant, run_scheme, run_transform, run_variable;
    run_cmd->add_option("--workdir", run_workdir, "override workdir");
    run_cmd->add_option("--variant", run_variant, "override variant");
    run_cmd->add_option("--scheme", run_scheme, "override feature scheme");
    run_cmd->add_option("--transform", run_transform, "override feature transform");
    run_cmd->add_option("--variable", run_variable, "override variable");

    // global flags remain usable after a subcommand name
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        // a config file provides defaults; explicit flags win
        pipe::PipelineConfig cfg;
        const bool have_config = !config_path.empty();
        if (have_config) {
            cfg = pipe::PipelineConfig::from_file(config_path);
            if (g_workers == 0 && cfg.workers > 0) g_workers = cfg.workers;
        }

        if (*ingest_cmd) {
            ingest::BoundingBox bbox = have_config ? cfg.bbox : ingest::BoundingBox::contiguous_us();
            if (given(ingest_bbox_opt)) bbox = ingest::BoundingBox::parse(ingest_bbox);
            const auto summary = pipe::stage_ingest(ingest_inputs, ingest_output, bbox);
            std::cout << "ingest: read " << summary.lines_read << " kept " << summary.kept
                      << " (parse " << summary.skipped_parse << ", utf8 "
                      << summary.skipped_invalid_utf8 << ", filtered " << summary.skipped_filter
                      << ")\n";
        } else if (*assign_cmd) {
            if (!given(assign_bounds_opt)) {
                if (!have_config || cfg.boundaries.empty())
                    throw config_error("assign: --boundaries (or a config file) is required");
                assign_boundaries = cfg.boundaries;
            }
            const auto summary = pipe::stage_assign(assign_records, assign_boundaries,
                                                    assign_output, effective_workers());
            std::cout << "assign: " << summary.assigned << " assigned, " << summary.unassigned
                      << " outside all units\n";
        } else if (*bag_cmd) {
            if (!given(bag_res_opt) && have_config)
                bag_resolution = std::string(geo::resolution_to_string(cfg.resolution));
            if (!given(bag_stop_opt) && have_config) bag_stopwords = cfg.stopwords;
            if (!given(bag_emo_opt) && have_config) bag_emoticons = cfg.emoticons;
            const auto tokenizer = text::Tokenizer::from_files(bag_stopwords, bag_emoticons);
            pipe::stage_bag(bag_records, geo::resolution_from_string(bag_resolution), tokenizer,
                            bag_output);
            note("bags written to " + bag_output);
        } else if (*split_cmd) {
            std::uint64_t seed = have_config ? cfg.split_seed : g_seed;
            if (given(split_seed_opt)) seed = split_seed;
            pipe::stage_split(split_bags, seed, split_output);
            note("splits written to " + split_output);
        } else if (*feat_cmd) {
            feat_opts.role = eval::split_role_from_string(feat_role);
            feat_opts.config = have_config ? cfg.features : feat::FeatureConfig{};
            if (given(feat_scheme_opt))
                feat_opts.config.scheme = feat::scheme_from_string(feat_scheme);
            if (given(feat_transform_opt))
                feat_opts.config.transform = feat::transform_from_string(feat_transform);
            pipe::stage_featurize(feat_opts);
            note("features written to " + feat_opts.output);
        } else if (*train_cmd) {
            if (have_config) {
                if (!given(train_truth_opt)) train_opts.truth_path = cfg.truth;
                if (!given(train_variant_opt))
                    train_variant = std::string(model::variant_to_string(cfg.variant));
                if (!given(train_variable_opt)) train_opts.variable = cfg.variable;
                if (!given(train_denom_opt)) train_opts.denominator = cfg.denominator;
                if (!given(train_lambda_opt)) train_opts.grid_lambda = cfg.grid_lambda;
                if (!given(train_eta_opt)) train_opts.grid_eta0 = cfg.grid_eta0;
                if (!given(train_epochs_opt)) train_opts.base.epochs = cfg.epochs;
                if (!given(train_rho_opt)) train_opts.base.rho = cfg.rho;
                if (!given(train_alpha_opt)) train_opts.base.alpha = cfg.alpha;
                if (!given(train_intercept_opt)) train_opts.base.intercept = cfg.intercept;
                if (!given(train_seed_opt)) train_seed = cfg.sgd_seed;
            } else if (!given(train_seed_opt)) {
                train_seed = g_seed;
            }
            if (train_opts.truth_path.empty())
                throw config_error("train: --truth (or a config file) is required");
            train_opts.variant = model::variant_from_string(train_variant);
            train_opts.base.seed = train_seed;
            train_opts.workers = effective_workers();
            const auto summary = pipe::stage_train(train_opts);
            std::cout << "train: best lambda " << summary.best_lambda << " eta0 "
                      << summary.best_eta0 << " (validation R^2 " << summary.best_score << ", "
                      << summary.evaluated << " combinations, " << summary.diverged
                      << " diverged)\n";
        } else if (*predict_cmd) {
            if (!given(predict_pop_opt) && have_config) predict_population = cfg.truth;
            pipe::stage_predict(predict_model, predict_features, predict_population,
                                predict_output);
            note("predictions written to " + predict_output);
        } else if (*eval_cmd) {
            if (have_config) {
                if (!given(eval_truth_opt)) eval_opts.truth_path = cfg.truth;
                if (!given(eval_thres_opt)) eval_opts.thresholds = cfg.thresholds;
                if (!given(eval_quant_opt)) eval_opts.quantile = cfg.quantile;
                if (!given(eval_res_opt))
                    eval_opts.resolution = std::string(geo::resolution_to_string(cfg.resolution));
            }
            if (eval_opts.truth_path.empty())
                throw config_error("evaluate: --truth (or a config file) is required");
            const auto report = pipe::stage_evaluate(eval_opts);
            for (std::size_t j = 0; j < report.categories.size(); ++j) {
                std::cout << "evaluate: " << report.variable << '/' << report.categories[j]
                          << " r=" << report.pearson[j] << " R^2=" << report.r2[j] << '\n';
            }
        } else if (*synth_cmd) {
            if (!given(synth_seed_opt) && g_seed != 0) synth_cfg.seed = g_seed;
            const auto paths = pipe::generate_synthetic(synth_cfg);
            std::cout << "synth: wrote " << paths.records << ", " << paths.boundaries << ", "
                      << paths.truth << '\n';
        } else if (*run_cmd) {
            if (!have_config) throw config_error("run: --config is required");
            if (!run_workdir.empty()) cfg.workdir = run_workdir;
            if (!run_variant.empty()) cfg.variant = model::variant_from_string(run_variant);
            if (!run_scheme.empty()) cfg.features.scheme = feat::scheme_from_string(run_scheme);
            if (!run_transform.empty())
                cfg.features.transform = feat::transform_from_string(run_transform);
            if (!run_variable.empty()) cfg.variable = run_variable;
            if (g_workers > 0) cfg.workers = g_workers;
            const auto artifacts = pipe::run_pipeline(cfg);
            std::cout << "run: report written to " << artifacts.report << '\n';
        }
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const divergence_error& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitOk;
}
