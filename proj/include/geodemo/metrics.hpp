#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geodemo/errors.hpp"

namespace geodemo::eval {

enum class SplitRole { train, validation, test };

std::string_view split_role_to_string(SplitRole r);
SplitRole split_role_from_string(std::string_view s);

struct SplitSizes {
    std::size_t test = 0;
    std::size_t validation = 0;
    std::size_t train = 0;
};

// 90/10 outer split, then 10% of the training side as validation; rounded to
// the nearest unit.
SplitSizes split_sizes(std::size_t n);

// Seeded shuffle then assignment by split_sizes; requires >= 10 unique geoids.
std::map<std::string, SplitRole> split_units(std::vector<std::string> geoids, std::uint64_t seed);

void save_splits(const std::string& path, const std::map<std::string, SplitRole>& splits);
std::map<std::string, SplitRole> load_splits(const std::string& path);

struct Correlation {
    double r = 0.0;
    double p_value = 1.0;
};

// Sample Pearson correlation with a two-tailed t-approximation p-value
// (t = r sqrt((n-2)/(1-r^2)), n-2 dof). Constant input is an error.
Correlation pearson_r(std::span<const double> pred, std::span<const double> truth);

// 1 - SS_res / SS_tot with SS_tot about the mean of `truth`.
double r_squared(std::span<const double> pred, std::span<const double> truth);

// Two-tailed p-value for mean(errors_a - errors_b) = 0 under Student-t with
// n-1 dof. All-zero differences give p = 1; zero-variance nonzero-mean
// differences give the minimum representable p.
double paired_t_test(std::span<const double> errors_a, std::span<const double> errors_b);

// 2015 national-level shares scaled by population.
std::vector<double> baseline_national(double population, const std::string& variable);
const std::vector<std::string>& national_categories(const std::string& variable);

struct RelErrorRow {
    double threshold = 0.0;
    std::size_t n_units = 0;
    double rel_error = 0.0;
    bool empty = false;
};

// Per threshold t: restrict to units with users >= t, take the per-unit mean
// over categories of |pred - truth| / max(truth, 1), report `quantile` of
// that distribution.
std::vector<RelErrorRow> relative_error_report(std::span<const std::vector<double>> preds,
                                               std::span<const std::vector<double>> truths,
                                               std::span<const double> users,
                                               std::span<const double> thresholds, double quantile);

double relative_error_of_unit(std::span<const double> pred, std::span<const double> truth);

// linear-interpolation quantile on a copy of `values`
double quantile_value(std::vector<double> values, double q);

// regularized incomplete beta and the Student-t tail built on it
double incomplete_beta(double a, double b, double x);
double student_t_two_tailed_p(double t, double dof);

struct EvalReport {
    std::string variable;
    std::string resolution;
    std::vector<std::string> categories;
    std::vector<double> pearson;
    std::vector<double> pearson_p;
    std::vector<double> r2;
    struct Comparison {
        std::string config_a;
        std::string config_b;
        double p_value = 1.0;
    };
    std::optional<Comparison> comparison;
    double quantile = 0.95;
    std::vector<RelErrorRow> rel_error;
    std::string fingerprint;
};

std::string render_report_csv(const EvalReport& report);
std::string render_plot_data(const EvalReport& report);

}  // namespace geodemo::eval
