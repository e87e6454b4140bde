#include "geodemo/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "geodemo/metrics.hpp"
#include "geodemo/util.hpp"

namespace geodemo::model {

std::size_t RegressionModel::output_count() const {
    return variant == Variant::population_unknown ? categories.size() : categories.size() - 1;
}

std::size_t RegressionModel::output_category(std::size_t row) const {
    if (variant == Variant::population_unknown) return row;
    return row < static_cast<std::size_t>(denominator) ? row : row + 1;
}

void RegressionModel::validate() const {
    if (categories.size() < 2) throw data_error("model needs at least two categories");
    if (variant == Variant::population_known) {
        if (denominator < 0 || denominator >= static_cast<int>(categories.size()))
            throw data_error("model denominator out of range");
    }
    if (weights.size() != output_count()) throw data_error("model weight row count mismatch");
    for (const auto& w : weights) {
        if (w.size() != dim) throw data_error("model weight length mismatch");
    }
    if (intercepts.size() != weights.size()) throw data_error("model intercept count mismatch");
}

std::vector<std::vector<double>> make_targets(std::span<const std::vector<std::int64_t>> counts,
                                              Variant variant, int q, double alpha) {
    if (counts.empty()) throw data_error("make_targets: no units");
    const std::size_t k = counts.front().size();
    if (k < 2) throw data_error("make_targets: need at least two categories");
    for (const auto& y : counts) {
        if (y.size() != k) throw data_error("make_targets: ragged count vectors");
    }

    std::vector<std::vector<double>> targets;
    if (variant == Variant::population_unknown) {
        targets.assign(k, std::vector<double>(counts.size()));
        for (std::size_t i = 0; i < counts.size(); ++i) {
            for (std::size_t j = 0; j < k; ++j)
                targets[j][i] = static_cast<double>(counts[i][j]);
        }
        return targets;
    }

    if (q < 0 || q >= static_cast<int>(k)) throw data_error("make_targets: q out of range");
    targets.assign(k - 1, std::vector<double>(counts.size()));
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double denom = static_cast<double>(counts[i][static_cast<std::size_t>(q)]) + alpha;
        std::size_t row = 0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == static_cast<std::size_t>(q)) continue;
            const double numer = static_cast<double>(counts[i][j]) + alpha;
            if (!(numer > 0.0) || !(denom > 0.0))
                throw data_error("make_targets: zero count with alpha=0 makes the log ratio "
                                 "degenerate (unit " + std::to_string(i) + ")");
            targets[row][i] = std::log(numer / denom);
            ++row;
        }
    }
    return targets;
}

std::vector<std::vector<double>> make_targets(std::span<const geo::GeoUnit> units, Variant variant,
                                              const std::string& variable, int q, double alpha) {
    std::vector<std::vector<std::int64_t>> counts;
    counts.reserve(units.size());
    for (const geo::GeoUnit& unit : units) {
        const auto it = unit.demographics.find(variable);
        if (it == unit.demographics.end())
            throw data_error("unit " + unit.geoid + " has no '" + variable + "' counts");
        if (variant == Variant::population_known && !unit.population)
            throw data_error("unit " + unit.geoid + " has no population");
        counts.push_back(it->second);
    }
    return make_targets(counts, variant, q, alpha);
}

std::vector<double> predict_unknown(const RegressionModel& m, const SparseVector& x) {
    if (m.variant != Variant::population_unknown)
        throw data_error("predict_unknown called on a population-known model");
    if (x.dim() != m.dim) throw data_error("predict: feature dimension mismatch");
    std::vector<double> out(m.categories.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = x.dot(m.weights[j]) + m.intercepts[j];
    return out;
}

std::vector<double> predict_known(const RegressionModel& m, const SparseVector& x,
                                  double population) {
    if (m.variant != Variant::population_known)
        throw data_error("predict_known called on a population-unknown model");
    if (x.dim() != m.dim) throw data_error("predict: feature dimension mismatch");
    if (population < 0.0) throw data_error("predict_known: negative population");

    const std::size_t k = m.categories.size();
    // scores for j != q; the denominator category has an implicit score of 0
    std::vector<double> scores(m.weights.size());
    double max_score = 0.0;
    for (std::size_t row = 0; row < scores.size(); ++row) {
        scores[row] = x.dot(m.weights[row]) + m.intercepts[row];
        max_score = std::max(max_score, scores[row]);
    }
    double total = std::exp(0.0 - max_score);
    for (const double s : scores) total += std::exp(s - max_score);

    std::vector<double> out(k, 0.0);
    out[static_cast<std::size_t>(m.denominator)] = population * std::exp(0.0 - max_score) / total;
    for (std::size_t row = 0; row < scores.size(); ++row)
        out[m.output_category(row)] = population * std::exp(scores[row] - max_score) / total;
    return out;
}

namespace {

double mean_validation_r2(const std::vector<FitResult>& fits,
                          std::span<const SparseVector> val_xs,
                          const std::vector<std::vector<double>>& val_targets, bool intercept) {
    double acc = 0.0;
    for (std::size_t row = 0; row < fits.size(); ++row) {
        std::vector<double> preds(val_xs.size());
        for (std::size_t i = 0; i < val_xs.size(); ++i)
            preds[i] = val_xs[i].dot(fits[row].weights) + (intercept ? fits[row].intercept : 0.0);
        acc += eval::r_squared(preds, val_targets[row]);
    }
    return acc / static_cast<double>(fits.size());
}

}  // namespace

GridSearchResult grid_search(std::span<const SparseVector> train_xs,
                             const std::vector<std::vector<double>>& train_targets,
                             std::span<const SparseVector> val_xs,
                             const std::vector<std::vector<double>>& val_targets,
                             std::span<const double> lambda_grid,
                             std::span<const double> eta0_grid, const TrainConfig& base,
                             std::uint32_t dim, int workers) {
    if (lambda_grid.empty() || eta0_grid.empty()) throw config_error("grid_search: empty grid");
    if (train_targets.empty() || train_targets.size() != val_targets.size())
        throw data_error("grid_search: target row mismatch");

    GridSearchResult result;
    result.evaluated.resize(lambda_grid.size() * eta0_grid.size());
    for (std::size_t li = 0; li < lambda_grid.size(); ++li) {
        for (std::size_t ei = 0; ei < eta0_grid.size(); ++ei) {
            GridPoint& pt = result.evaluated[li * eta0_grid.size() + ei];
            pt.lambda = lambda_grid[li];
            pt.eta0 = eta0_grid[ei];
        }
    }

    const auto evaluate_combo = [&](GridPoint& pt) {
        TrainConfig cfg = base;
        cfg.lambda = pt.lambda;
        cfg.eta0 = pt.eta0;
        try {
            std::vector<FitResult> fits;
            fits.reserve(train_targets.size());
            for (const auto& row : train_targets) fits.push_back(fit_sgd(train_xs, row, dim, cfg));
            pt.score = mean_validation_r2(fits, val_xs, val_targets, cfg.intercept);
            if (!std::isfinite(pt.score)) {
                pt.score = -std::numeric_limits<double>::infinity();
                pt.diverged = true;
            }
        } catch (const divergence_error&) {
            pt.score = -std::numeric_limits<double>::infinity();
            pt.diverged = true;
        }
    };

    if (workers <= 1 || result.evaluated.size() <= 1) {
        for (GridPoint& pt : result.evaluated) evaluate_combo(pt);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        const std::size_t nthreads =
            std::min<std::size_t>(static_cast<std::size_t>(workers), result.evaluated.size());
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (std::size_t t = 0; t < nthreads; ++t) {
            pool.emplace_back([&] {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= result.evaluated.size()) break;
                    try {
                        evaluate_combo(result.evaluated[i]);
                    } catch (...) {
                        const std::lock_guard<std::mutex> lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (std::thread& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    // deterministic argmax: first strictly-better combo in grid order wins
    const GridPoint* best = nullptr;
    for (const GridPoint& pt : result.evaluated) {
        if (pt.diverged) continue;
        if (!best || pt.score > best->score) best = &pt;
    }
    if (!best) throw divergence_error("grid_search: every combination diverged");

    result.best_lambda = best->lambda;
    result.best_eta0 = best->eta0;

    // refit the winner on train + validation
    std::vector<SparseVector> all_xs(train_xs.begin(), train_xs.end());
    all_xs.insert(all_xs.end(), val_xs.begin(), val_xs.end());
    TrainConfig cfg = base;
    cfg.lambda = best->lambda;
    cfg.eta0 = best->eta0;
    for (std::size_t row = 0; row < train_targets.size(); ++row) {
        std::vector<double> all_targets(train_targets[row]);
        all_targets.insert(all_targets.end(), val_targets[row].begin(), val_targets[row].end());
        result.fits.push_back(fit_sgd(all_xs, all_targets, dim, cfg));
    }
    return result;
}

void save_model(const std::string& path, const RegressionModel& m) {
    m.validate();
    std::ostringstream out;
    out << "geodemo-model v1\n";
    out << "variant " << variant_to_string(m.variant) << '\n';
    out << "variable " << m.variable << '\n';
    out << "k " << m.categories.size() << '\n';
    out << "categories";
    for (const std::string& c : m.categories) out << ' ' << c;
    out << '\n';
    out << "q " << m.denominator << '\n';
    out << "dim " << m.dim << '\n';
    out << "scheme " << feat::scheme_to_string(m.feature_config.scheme) << '\n';
    out << "transform " << feat::transform_to_string(m.feature_config.transform) << '\n';
    out << "vocab_fingerprint " << util::to_hex(m.vocab_fingerprint) << '\n';
    out << "lambda " << util::format_double(m.hyper.lambda) << '\n';
    out << "eta0 " << util::format_double(m.hyper.eta0) << '\n';
    out << "rho " << util::format_double(m.hyper.rho) << '\n';
    out << "epochs " << m.hyper.epochs << '\n';
    out << "alpha " << util::format_double(m.hyper.alpha) << '\n';
    out << "seed " << m.hyper.seed << '\n';
    out << "intercept " << (m.hyper.intercept ? 1 : 0) << '\n';
    for (std::size_t row = 0; row < m.weights.size(); ++row) {
        std::size_t nnz = 0;
        for (const double w : m.weights[row]) nnz += w != 0.0;
        out << "output " << row << " category " << m.output_category(row) << " nnz " << nnz
            << " intercept " << util::format_double(m.intercepts[row]) << '\n';
        for (std::uint32_t j = 0; j < m.dim; ++j) {
            if (m.weights[row][j] != 0.0)
                out << j << '\t' << util::format_double(m.weights[row][j]) << '\n';
        }
    }
    out << "end\n";
    util::write_file_atomic(path, out.str());
}

namespace {

RegressionModel load_model_impl(const std::string& path) {
    RegressionModel m;
    std::istringstream in(util::read_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "geodemo-model v1")
        throw data_error("not a geodemo model file: " + path);
    std::size_t k = 0;
    while (std::getline(in, line)) {
        if (line == "end") break;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "variant") {
            std::string v;
            ls >> v;
            m.variant = variant_from_string(v);
        } else if (key == "variable") {
            ls >> m.variable;
        } else if (key == "k") {
            ls >> k;
        } else if (key == "categories") {
            std::string c;
            while (ls >> c) m.categories.push_back(c);
        } else if (key == "q") {
            ls >> m.denominator;
        } else if (key == "dim") {
            ls >> m.dim;
        } else if (key == "scheme") {
            std::string s;
            ls >> s;
            m.feature_config.scheme = feat::scheme_from_string(s);
        } else if (key == "transform") {
            std::string s;
            ls >> s;
            m.feature_config.transform = feat::transform_from_string(s);
        } else if (key == "vocab_fingerprint") {
            std::string hex;
            ls >> hex;
            m.vocab_fingerprint = std::stoull(hex, nullptr, 16);
        } else if (key == "lambda") {
            ls >> m.hyper.lambda;
        } else if (key == "eta0") {
            ls >> m.hyper.eta0;
        } else if (key == "rho") {
            ls >> m.hyper.rho;
        } else if (key == "epochs") {
            ls >> m.hyper.epochs;
        } else if (key == "alpha") {
            ls >> m.hyper.alpha;
        } else if (key == "seed") {
            ls >> m.hyper.seed;
        } else if (key == "intercept") {
            int v = 0;
            ls >> v;
            m.hyper.intercept = v != 0;
        } else if (key == "output") {
            std::size_t row = 0, category = 0, nnz = 0;
            double intercept = 0.0;
            std::string word;
            ls >> row >> word >> category >> word >> nnz >> word >> intercept;
            if (row != m.weights.size()) throw data_error("model outputs out of order: " + path);
            std::vector<double> w(m.dim, 0.0);
            for (std::size_t e = 0; e < nnz; ++e) {
                if (!std::getline(in, line)) throw data_error("truncated model file: " + path);
                const std::size_t tab = line.find('\t');
                if (tab == std::string::npos) throw data_error("bad weight line in " + path);
                w[std::stoul(line.substr(0, tab))] = std::stod(line.substr(tab + 1));
            }
            m.weights.push_back(std::move(w));
            m.intercepts.push_back(intercept);
        } else {
            throw data_error("unknown model field '" + key + "' in " + path);
        }
    }
    if (m.categories.size() != k) throw data_error("model category list does not match k: " + path);
    m.hyper.variant = m.variant;
    m.hyper.denominator = m.denominator;
    m.validate();
    return m;
}

}  // namespace

RegressionModel load_model(const std::string& path) {
    try {
        return load_model_impl(path);
    } catch (const data_error&) {
        throw;
    } catch (const std::exception& e) {
        throw data_error("bad model file " + path + ": " + e.what());
    }
}

}  // namespace geodemo::model
