#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geodemo/features.hpp"
#include "geodemo/metrics.hpp"
#include "geodemo/model.hpp"
#include "geodemo/records.hpp"
#include "geodemo/sgd.hpp"
#include "geodemo/tokenizer.hpp"

namespace geodemo::pipe {

struct PipelineConfig {
    std::vector<std::string> records;  // input paths or globs
    std::string boundaries;
    std::string truth;
    std::string workdir;

    ingest::BoundingBox bbox = ingest::BoundingBox::contiguous_us();
    geo::Resolution resolution = geo::Resolution::block;
    std::string variable = "gender";
    model::Variant variant = model::Variant::population_unknown;
    feat::FeatureConfig features;
    std::string denominator;  // category name; empty selects the default

    std::vector<double> grid_lambda;  // empty selects the paper grid
    std::vector<double> grid_eta0;
    int epochs = 10;
    double rho = 0.25;
    double alpha = 1.0;
    bool intercept = false;

    std::uint64_t split_seed = 1;
    std::uint64_t sgd_seed = 2;

    std::vector<double> thresholds{1, 10, 100, 1000};
    double quantile = 0.95;

    std::string stopwords;  // empty selects the embedded list
    std::string emoticons;
    int workers = 0;  // 0 = hardware concurrency

    static PipelineConfig from_file(const std::string& path);
    static PipelineConfig from_json_text(std::string_view text);
    void validate() const;
    std::uint64_t fingerprint() const;
    int effective_workers() const;
};

struct AssignSummary {
    std::uint64_t records_read = 0;
    std::uint64_t assigned = 0;
    std::uint64_t unassigned = 0;
    std::uint64_t skipped_parse = 0;
};

// stage functions; each consumes and produces only the named files
ingest::IngestSummary stage_ingest(const std::vector<std::string>& inputs,
                                   const std::string& output, const ingest::BoundingBox& bbox);

AssignSummary stage_assign(const std::string& records_path, const std::string& boundaries_path,
                           const std::string& output, int workers);

void stage_bag(const std::string& records_path, geo::Resolution resolution,
               const text::Tokenizer& tokenizer, const std::string& output,
               std::uint64_t fingerprint = 0);

void stage_split(const std::string& bags_path, std::uint64_t seed, const std::string& output);

struct FeaturizeOptions {
    std::string bags_path;
    std::string splits_path;
    eval::SplitRole role = eval::SplitRole::train;
    feat::FeatureConfig config;
    std::string vocab_path;
    bool fit_vocabulary = false;  // build vocab+idf from the selected bags
    std::string output;
};

void stage_featurize(const FeaturizeOptions& opts);

struct TrainOptions {
    std::string train_features;
    std::string val_features;
    std::string truth_path;
    model::Variant variant = model::Variant::population_unknown;
    std::string variable = "gender";
    std::string denominator;
    std::vector<double> grid_lambda;
    std::vector<double> grid_eta0;
    model::TrainConfig base;
    std::string output;
    int workers = 1;
};

struct TrainSummary {
    double best_lambda = 0.0;
    double best_eta0 = 0.0;
    std::size_t evaluated = 0;
    std::size_t diverged = 0;
    double best_score = 0.0;
};

TrainSummary stage_train(const TrainOptions& opts);

void stage_predict(const std::string& model_path, const std::string& features_path,
                   const std::string& population_path, const std::string& output);

struct Predictions {
    std::string variable;
    std::vector<std::string> categories;
    std::vector<std::string> geoids;
    std::vector<std::vector<double>> raw;       // metric inputs
    std::vector<std::vector<double>> exported;  // clamped at zero
};

Predictions load_predictions(const std::string& path);

struct EvaluateOptions {
    std::string pred_path;
    std::string truth_path;
    std::string bags_path;
    std::string pred_b_path;  // optional second configuration
    std::string label_a = "a";
    std::string label_b = "b";
    std::vector<double> thresholds{1, 10, 100, 1000};
    double quantile = 0.95;
    std::string resolution = "block";
    std::string output;
    std::string fingerprint;
};

eval::EvalReport stage_evaluate(const EvaluateOptions& opts);

struct PipelineArtifacts {
    std::string clean_records;
    std::string assigned_records;
    std::string bags;
    std::string splits;
    std::string vocabulary;
    std::string train_features;
    std::string val_features;
    std::string test_features;
    std::string model;
    std::string predictions;
    std::string report;
    std::string plot_data;
};

// ingest -> assign -> bag -> split -> featurize -> grid-search train ->
// predict -> evaluate, all under cfg.workdir; rerunning an identical config
// reproduces every artifact byte for byte.
PipelineArtifacts run_pipeline(const PipelineConfig& cfg);

}  // namespace geodemo::pipe
