#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "geodemo/sparse.hpp"

namespace geodemo::model {

using feat::SparseVector;

enum class Variant { population_unknown, population_known };

Variant variant_from_string(std::string_view s);
std::string_view variant_to_string(Variant v);

struct TrainConfig {
    double lambda = 0.0;
    double eta0 = 0.01;
    double rho = 0.25;
    int epochs = 10;
    std::uint64_t seed = 0;
    Variant variant = Variant::population_unknown;
    int denominator = -1;   // category index q (population-known only)
    double alpha = 1.0;     // additive count smoothing for log-ratio targets
    bool intercept = false;

    void validate() const;
};

// inverse scaling: eta0 / tau^rho, tau counted per training example from 1
double learning_rate(double eta0, std::uint64_t tau, double rho);

struct FitResult {
    std::vector<double> weights;
    double intercept = 0.0;
};

// Minimizes (1/2n) sum (w.x - y)^2 + lambda ||w||^2 by per-example SGD:
//   w <- w - eta_tau * ((w.x - y) x + 2 lambda w)
// with a seeded shuffle before every epoch. Throws divergence_error when a
// score or weight stops being finite.
FitResult fit_sgd(std::span<const SparseVector> xs, std::span<const double> targets,
                  std::uint32_t dim, const TrainConfig& cfg);

// hyper-parameter grids used for model selection in the source experiments
const std::vector<double>& paper_lambda_grid();
const std::vector<double>& paper_eta0_grid();

}  // namespace geodemo::model
