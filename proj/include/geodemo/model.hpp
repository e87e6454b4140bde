#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geodemo/features.hpp"
#include "geodemo/geometry.hpp"
#include "geodemo/sgd.hpp"
#include "geodemo/sparse.hpp"

namespace geodemo::model {

// Per-category linear models plus everything needed to reproduce and apply
// them: one weight vector per category for the population-unknown variant,
// k-1 vectors (all j != q) for the population-known variant.
struct RegressionModel {
    Variant variant = Variant::population_unknown;
    std::string variable;
    std::vector<std::string> categories;  // size k
    int denominator = -1;                 // q (population-known only)
    std::uint32_t dim = 0;
    feat::FeatureConfig feature_config;
    std::uint64_t vocab_fingerprint = 0;
    TrainConfig hyper;
    std::vector<std::vector<double>> weights;  // k rows, or k-1 rows skipping q
    std::vector<double> intercepts;

    std::size_t output_count() const;
    // category index of output row `row`
    std::size_t output_category(std::size_t row) const;
    void validate() const;
};

// Regression targets per output row, aligned with the unit order of `counts`.
// Unknown: y_{i,j} directly. Known: ln((y_{i,j}+alpha)/(y_{i,q}+alpha)), j != q.
std::vector<std::vector<double>> make_targets(std::span<const std::vector<std::int64_t>> counts,
                                              Variant variant, int q, double alpha);

// GeoUnit convenience wrapper; every unit must carry `variable` (and a
// population for the known variant).
std::vector<std::vector<double>> make_targets(std::span<const geo::GeoUnit> units, Variant variant,
                                              const std::string& variable, int q, double alpha);

// Raw linear scores per category; may be negative. Clamp only on export.
std::vector<double> predict_unknown(const RegressionModel& m, const SparseVector& x);

// Softmax-style count reconstruction scaled by the known population; computed
// with a max-score shift so +-700 scores stay finite.
std::vector<double> predict_known(const RegressionModel& m, const SparseVector& x,
                                  double population);

struct GridPoint {
    double lambda = 0.0;
    double eta0 = 0.0;
    double score = 0.0;  // mean validation R^2 across outputs; -inf when diverged
    bool diverged = false;
};

struct GridSearchResult {
    double best_lambda = 0.0;
    double best_eta0 = 0.0;
    std::vector<FitResult> fits;  // refit on train+validation, one per output
    std::vector<GridPoint> evaluated;
};

// Exhaustive search over lambda x eta0: fit on train, score mean validation
// R^2 over outputs, refit the winner on train+validation. Diverged
// combinations score -inf; all-diverged is an error.
GridSearchResult grid_search(std::span<const SparseVector> train_xs,
                             const std::vector<std::vector<double>>& train_targets,
                             std::span<const SparseVector> val_xs,
                             const std::vector<std::vector<double>>& val_targets,
                             std::span<const double> lambda_grid,
                             std::span<const double> eta0_grid, const TrainConfig& base,
                             std::uint32_t dim, int workers = 1);

void save_model(const std::string& path, const RegressionModel& m);
RegressionModel load_model(const std::string& path);

}  // namespace geodemo::model
