#include "geodemo/sgd.hpp"

#include <cmath>
#include <numeric>

#include "geodemo/errors.hpp"
#include "geodemo/util.hpp"

namespace geodemo::model {

Variant variant_from_string(std::string_view s) {
    if (s == "unknown") return Variant::population_unknown;
    if (s == "known") return Variant::population_known;
    throw config_error("unknown variant: " + std::string(s) + " (want unknown|known)");
}

std::string_view variant_to_string(Variant v) {
    return v == Variant::population_unknown ? "unknown" : "known";
}

void TrainConfig::validate() const {
    if (lambda < 0.0) throw config_error("lambda must be >= 0");
    if (!(eta0 > 0.0)) throw config_error("eta0 must be > 0");
    if (rho < 0.0) throw config_error("rho must be >= 0");
    if (epochs < 1) throw config_error("epochs must be >= 1");
    if (alpha < 0.0) throw config_error("alpha must be >= 0");
}

double learning_rate(double eta0, std::uint64_t tau, double rho) {
    if (tau == 0) throw config_error("learning_rate: tau starts at 1");
    return eta0 / std::pow(static_cast<double>(tau), rho);
}

FitResult fit_sgd(std::span<const SparseVector> xs, std::span<const double> targets,
                  std::uint32_t dim, const TrainConfig& cfg) {
    cfg.validate();
    if (xs.empty()) throw data_error("fit_sgd: no training examples");
    if (xs.size() != targets.size()) throw data_error("fit_sgd: examples/targets mismatch");
    for (const SparseVector& x : xs) {
        if (x.dim() != dim) throw data_error("fit_sgd: feature dimension mismatch");
    }

    std::vector<double> w(dim, 0.0);
    double bias = 0.0;
    std::vector<std::uint32_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0u);
    util::Rng rng(cfg.seed);

    std::uint64_t tau = 1;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (const std::uint32_t i : order) {
            const double eta = learning_rate(cfg.eta0, tau, cfg.rho);
            const SparseVector& x = xs[i];
            const double score = x.dot(w) + (cfg.intercept ? bias : 0.0);
            if (!std::isfinite(score))
                throw divergence_error("sgd diverged (non-finite score)", epoch,
                                       static_cast<std::int64_t>(tau));
            const double grad = score - targets[i];
            if (cfg.lambda != 0.0) {
                const double decay = 1.0 - 2.0 * eta * cfg.lambda;
                for (double& wj : w) wj *= decay;
            }
            x.add_scaled_into(w, -eta * grad);
            if (cfg.intercept) bias -= eta * grad;
            ++tau;
        }
    }
    for (const double wj : w) {
        if (!std::isfinite(wj))
            throw divergence_error("sgd diverged (non-finite weight)", cfg.epochs,
                                   static_cast<std::int64_t>(tau - 1));
    }
    if (!std::isfinite(bias))
        throw divergence_error("sgd diverged (non-finite intercept)", cfg.epochs,
                               static_cast<std::int64_t>(tau - 1));
    return {std::move(w), bias};
}

const std::vector<double>& paper_lambda_grid() {
    static const std::vector<double> grid{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
    return grid;
}

const std::vector<double>& paper_eta0_grid() {
    static const std::vector<double> grid{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    return grid;
}

}  // namespace geodemo::model
