#include "geodemo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "geodemo/errors.hpp"
#include "geodemo/util.hpp"

namespace geodemo::eval {

std::string_view split_role_to_string(SplitRole r) {
    switch (r) {
        case SplitRole::train: return "train";
        case SplitRole::validation: return "validation";
        case SplitRole::test: return "test";
    }
    return "?";
}

SplitRole split_role_from_string(std::string_view s) {
    if (s == "train") return SplitRole::train;
    if (s == "validation") return SplitRole::validation;
    if (s == "test") return SplitRole::test;
    throw config_error("unknown split role: " + std::string(s));
}

SplitSizes split_sizes(std::size_t n) {
    SplitSizes sizes;
    sizes.test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * 0.10));
    sizes.validation = static_cast<std::size_t>(std::llround(static_cast<double>(n) * 0.09));
    sizes.train = n - sizes.test - sizes.validation;
    return sizes;
}

std::map<std::string, SplitRole> split_units(std::vector<std::string> geoids, std::uint64_t seed) {
    if (geoids.size() < 10) throw data_error("split_units needs at least 10 units");
    {
        std::vector<std::string> sorted(geoids);
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw data_error("split_units: duplicate geoids");
    }
    util::Rng rng(seed);
    rng.shuffle(geoids);
    const SplitSizes sizes = split_sizes(geoids.size());
    std::map<std::string, SplitRole> out;
    for (std::size_t i = 0; i < geoids.size(); ++i) {
        SplitRole role = SplitRole::train;
        if (i < sizes.test)
            role = SplitRole::test;
        else if (i < sizes.test + sizes.validation)
            role = SplitRole::validation;
        out.emplace(std::move(geoids[i]), role);
    }
    return out;
}

void save_splits(const std::string& path, const std::map<std::string, SplitRole>& splits) {
    std::ostringstream out;
    out << "geoid,role\n";
    for (const auto& [geoid, role] : splits) out << geoid << ',' << split_role_to_string(role) << '\n';
    util::write_file_atomic(path, out.str());
}

std::map<std::string, SplitRole> load_splits(const std::string& path) {
    std::map<std::string, SplitRole> out;
    util::for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        if (line.empty() || line[0] == '#' || (lineno == 1 && line == "geoid,role")) return;
        const auto fields = util::split(line, ',');
        if (fields.size() != 2)
            throw data_error("splits line " + std::to_string(lineno) + ": expected 2 fields");
        out.emplace(fields[0], split_role_from_string(fields[1]));
    });
    return out;
}

namespace {

double mean_of(std::span<const double> xs) {
    double acc = 0.0;
    for (const double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
}

bool is_constant(std::span<const double> xs) {
    for (const double x : xs) {
        if (x != xs.front()) return false;
    }
    return true;
}

// Lentz's continued fraction for the regularized incomplete beta
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_tailed_p(double t, double dof) {
    if (!std::isfinite(t)) return std::numeric_limits<double>::min();
    const double p = incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
    if (p <= 0.0) return std::numeric_limits<double>::min();
    return std::min(p, 1.0);
}

Correlation pearson_r(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) throw data_error("pearson_r: length mismatch");
    const std::size_t n = pred.size();
    if (n < 3) throw data_error("pearson_r: need at least 3 pairs");
    if (is_constant(pred) || is_constant(truth))
        throw data_error("pearson_r: correlation undefined for constant input");

    const double mx = mean_of(pred);
    const double my = mean_of(truth);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = pred[i] - mx;
        const double dy = truth[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Correlation out;
    out.r = sxy / (std::sqrt(sxx) * std::sqrt(syy));
    out.r = std::clamp(out.r, -1.0, 1.0);
    const double dof = static_cast<double>(n - 2);
    if (1.0 - out.r * out.r <= 0.0) {
        out.p_value = std::numeric_limits<double>::min();
    } else {
        const double t = out.r * std::sqrt(dof / (1.0 - out.r * out.r));
        out.p_value = student_t_two_tailed_p(t, dof);
    }
    return out;
}

double r_squared(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) throw data_error("r_squared: length mismatch");
    if (pred.size() < 2) throw data_error("r_squared: need at least 2 pairs");
    if (is_constant(truth)) throw data_error("r_squared: SS_tot is zero for constant truth");
    const double my = mean_of(truth);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        ss_res += (pred[i] - truth[i]) * (pred[i] - truth[i]);
        ss_tot += (truth[i] - my) * (truth[i] - my);
    }
    return 1.0 - ss_res / ss_tot;
}

double paired_t_test(std::span<const double> errors_a, std::span<const double> errors_b) {
    if (errors_a.size() != errors_b.size()) throw data_error("paired_t_test: length mismatch");
    const std::size_t n = errors_a.size();
    if (n < 2) throw data_error("paired_t_test: need at least 2 pairs");

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += errors_a[i] - errors_b[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = errors_a[i] - errors_b[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(n - 1);

    if (var == 0.0) {
        if (mean == 0.0) return 1.0;
        return std::numeric_limits<double>::min();
    }
    const double t = mean / std::sqrt(var / static_cast<double>(n));
    return student_t_two_tailed_p(t, static_cast<double>(n - 1));
}

namespace {

const std::vector<std::string> kGenderNames{"male", "female"};
const std::vector<double> kGenderShares{0.492, 0.508};
const std::vector<std::string> kRaceNames{"white", "black", "asian", "hispanic", "other"};
const std::vector<double> kRaceShares{0.616, 0.124, 0.054, 0.176, 0.030};

}  // namespace

const std::vector<std::string>& national_categories(const std::string& variable) {
    if (variable == "gender") return kGenderNames;
    if (variable == "race") return kRaceNames;
    throw config_error("no national baseline for variable '" + variable + "'");
}

std::vector<double> baseline_national(double population, const std::string& variable) {
    if (variable != "gender" && variable != "race")
        throw config_error("no national baseline for variable '" + variable + "'");
    const std::vector<double>& shares = variable == "gender" ? kGenderShares : kRaceShares;
    std::vector<double> out(shares.size());
    for (std::size_t j = 0; j < shares.size(); ++j) out[j] = shares[j] * population;
    return out;
}

double relative_error_of_unit(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size() || pred.empty())
        throw data_error("relative error: category mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < pred.size(); ++j)
        acc += std::fabs(pred[j] - truth[j]) / std::max(truth[j], 1.0);
    return acc / static_cast<double>(pred.size());
}

double quantile_value(std::vector<double> values, double q) {
    if (values.empty()) throw data_error("quantile of empty sample");
    if (!(q > 0.0 && q < 1.0)) throw config_error("quantile must be in (0,1)");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

std::vector<RelErrorRow> relative_error_report(std::span<const std::vector<double>> preds,
                                               std::span<const std::vector<double>> truths,
                                               std::span<const double> users,
                                               std::span<const double> thresholds,
                                               double quantile) {
    if (preds.size() != truths.size() || preds.size() != users.size())
        throw data_error("relative_error_report: unit lists must align");
    if (!(quantile > 0.0 && quantile < 1.0)) throw config_error("quantile must be in (0,1)");

    std::vector<double> unit_errors(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        unit_errors[i] = relative_error_of_unit(preds[i], truths[i]);

    std::vector<RelErrorRow> rows;
    rows.reserve(thresholds.size());
    for (const double threshold : thresholds) {
        RelErrorRow row;
        row.threshold = threshold;
        std::vector<double> selected;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (users[i] >= threshold) selected.push_back(unit_errors[i]);
        }
        row.n_units = selected.size();
        if (selected.empty()) {
            row.empty = true;
        } else {
            row.rel_error = quantile_value(std::move(selected), quantile);
        }
        rows.push_back(row);
    }
    return rows;
}

std::string render_report_csv(const EvalReport& report) {
    std::ostringstream out;
    if (!report.fingerprint.empty()) out << "# geodemo-report config=" << report.fingerprint << '\n';
    out << "metric,variable,category,value\n";
    for (std::size_t j = 0; j < report.categories.size(); ++j) {
        out << "pearson_r," << report.variable << ',' << report.categories[j] << ','
            << util::format_double(report.pearson[j]) << '\n';
        out << "pearson_p," << report.variable << ',' << report.categories[j] << ','
            << util::format_double(report.pearson_p[j]) << '\n';
        out << "r_squared," << report.variable << ',' << report.categories[j] << ','
            << util::format_double(report.r2[j]) << '\n';
    }
    if (!report.pearson.empty()) {
        out << "pearson_r_mean," << report.variable << ",all,"
            << util::format_double(mean_of(report.pearson)) << '\n';
        out << "r_squared_mean," << report.variable << ",all,"
            << util::format_double(mean_of(report.r2)) << '\n';
    }
    if (report.comparison) {
        out << "comparison,config_a,config_b,p_value\n";
        out << "squared_error," << report.comparison->config_a << ',' << report.comparison->config_b
            << ',' << util::format_double(report.comparison->p_value) << '\n';
    }
    out << "threshold,n_units,quantile,rel_error\n";
    for (const RelErrorRow& row : report.rel_error) {
        out << util::format_double(row.threshold) << ',' << row.n_units << ','
            << util::format_double(report.quantile) << ',';
        if (row.empty)
            out << "empty";
        else
            out << util::format_double(row.rel_error);
        out << '\n';
    }
    return out.str();
}

std::string render_plot_data(const EvalReport& report) {
    std::ostringstream out;
    out << "resolution,threshold,n_units,quantile,rel_error\n";
    for (const RelErrorRow& row : report.rel_error) {
        if (row.empty) continue;
        out << report.resolution << ',' << util::format_double(row.threshold) << ',' << row.n_units
            << ',' << util::format_double(report.quantile) << ','
            << util::format_double(row.rel_error) << '\n';
    }
    return out.str();
}

}  // namespace geodemo::eval
