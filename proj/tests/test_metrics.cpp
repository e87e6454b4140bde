#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_scratch.hpp"
#include <doctest.h>

#include <cmath>
#include <limits>

#include "geodemo/metrics.hpp"
#include "geodemo/util.hpp"

using namespace geodemo;
using eval::SplitRole;

namespace {

// quadrature oracle for the two-tailed Student-t p-value: integrate the
// density from -|t| to |t| with Simpson's rule and subtract from 1
double t_two_tailed_by_quadrature(double t, double dof) {
    const double a = -std::fabs(t);
    const double b = std::fabs(t);
    const int steps = 20000;  // even
    const double h = (b - a) / steps;
    const double log_norm = std::lgamma((dof + 1.0) / 2.0) - std::lgamma(dof / 2.0) -
                            0.5 * std::log(dof * M_PI);
    const auto density = [&](double x) {
        return std::exp(log_norm - (dof + 1.0) / 2.0 * std::log1p(x * x / dof));
    };
    double acc = density(a) + density(b);
    for (int i = 1; i < steps; ++i) acc += density(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return 1.0 - acc * h / 3.0;
}

std::vector<std::string> make_geoids(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%015zu", i + 1);
        out.emplace_back(buf);
    }
    return out;
}

}  // namespace

TEST_CASE("split sizes follow 10/9/81") {
    const auto s100 = eval::split_sizes(100);
    CHECK(s100.test == 10);
    CHECK(s100.validation == 9);
    CHECK(s100.train == 81);

    // the paper's block-level split: 5,765,121 units, 576,513 test (within 1)
    const auto blocks = eval::split_sizes(5765121);
    CHECK(std::llabs(static_cast<long long>(blocks.test) - 576513) <= 1);
    CHECK(blocks.test + blocks.validation + blocks.train == 5765121);
}

TEST_CASE("split_units partitions deterministically") {
    const auto geoids = make_geoids(100);
    const auto a = eval::split_units(geoids, 7);
    const auto b = eval::split_units(geoids, 7);
    CHECK(a == b);
    const auto c = eval::split_units(geoids, 8);
    CHECK(a != c);

    std::size_t test = 0, val = 0, train = 0;
    for (const auto& [geoid, role] : a) {
        test += role == SplitRole::test;
        val += role == SplitRole::validation;
        train += role == SplitRole::train;
    }
    CHECK(test == 10);
    CHECK(val == 9);
    CHECK(train == 81);

    CHECK_THROWS_AS(eval::split_units(make_geoids(5), 1), data_error);
    auto dup = make_geoids(12);
    dup[3] = dup[4];
    CHECK_THROWS_AS(eval::split_units(dup, 1), data_error);
}

TEST_CASE("splits persistence round-trips") {
    const auto splits = eval::split_units(make_geoids(40), 3);
    eval::save_splits("test_splits.csv", splits);
    CHECK(eval::load_splits("test_splits.csv") == splits);
}

TEST_CASE("pearson examples") {
    const std::vector<double> truth{1.0, 2.0, 3.5, 7.0};
    CHECK(eval::pearson_r(truth, truth).r == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> neg(truth);
    for (double& v : neg) v = -v;
    CHECK(eval::pearson_r(neg, truth).r == doctest::Approx(-1.0).epsilon(1e-12));

    const std::vector<double> pred{1, 2, 3, 4};
    const std::vector<double> perm{2, 1, 4, 3};
    CHECK(eval::pearson_r(pred, perm).r == doctest::Approx(0.6).epsilon(1e-12));

    CHECK_THROWS_AS(eval::pearson_r(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
                    data_error);
    CHECK_THROWS_AS(eval::pearson_r(std::vector<double>{1, 2}, std::vector<double>{1, 2}),
                    data_error);  // too short
}

TEST_CASE("pearson is invariant under positive affine maps") {
    util::Rng rng(5);
    std::vector<double> x(50), y(50);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.gaussian();
        y[i] = 0.5 * x[i] + rng.gaussian();
    }
    const double base = eval::pearson_r(x, y).r;
    for (int trial = 0; trial < 20; ++trial) {
        const double a = rng.uniform(0.01, 10.0);
        const double b = rng.uniform(-100.0, 100.0);
        std::vector<double> scaled(x);
        for (double& v : scaled) v = a * v + b;
        CHECK(eval::pearson_r(scaled, y).r == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("pearson p-values against the quadrature oracle") {
    util::Rng rng(11);
    std::vector<double> x(30), y(30);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.gaussian();
        y[i] = 0.4 * x[i] + rng.gaussian();
    }
    const auto corr = eval::pearson_r(x, y);
    const double dof = 28.0;
    const double t = corr.r * std::sqrt(dof / (1.0 - corr.r * corr.r));
    CHECK(corr.p_value == doctest::Approx(t_two_tailed_by_quadrature(t, dof)).epsilon(1e-6));
}

TEST_CASE("r_squared examples") {
    const std::vector<double> truth{1.0, -1.0};
    CHECK(eval::r_squared(truth, truth) == 1.0);
    const std::vector<double> mean_pred{0.0, 0.0};  // mean of truth
    CHECK(eval::r_squared(mean_pred, truth) == 0.0);
    // direct SS computation: SS_res = 4+4, SS_tot = 1+1 -> 1 - 4 = -3
    const std::vector<double> worse{3.0, -3.0};
    CHECK(eval::r_squared(worse, truth) == -3.0);
    CHECK_THROWS_AS(eval::r_squared(std::vector<double>{1.0, 2.0}, std::vector<double>{5.0, 5.0}),
                    data_error);
}

TEST_CASE("student-t tail matches quadrature") {
    for (const auto& [t, dof] : std::vector<std::pair<double, double>>{
             {0.5, 4}, {1.0, 9}, {2.045, 29}, {3.2, 59}, {0.1, 199}}) {
        CHECK(eval::student_t_two_tailed_p(t, dof) ==
              doctest::Approx(t_two_tailed_by_quadrature(t, dof)).epsilon(1e-7));
    }
}

TEST_CASE("paired t-test basics") {
    const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
    CHECK(eval::paired_t_test(a, a) == 1.0);

    // constant nonzero difference: certainty, minimum representable p
    std::vector<double> b(a);
    for (double& v : b) v += 1.0;
    CHECK(eval::paired_t_test(b, a) == std::numeric_limits<double>::min());

    // 30 paired differences constructed to hit t = 2.045 -> p ~ 0.05
    std::vector<double> diff(30);
    const double s_prime = (std::sqrt(30.0) / 2.045) * std::sqrt(29.0 / 30.0);
    for (std::size_t i = 0; i < 30; ++i) diff[i] = 1.0 + (i < 15 ? s_prime : -s_prime);
    const std::vector<double> zeros(30, 0.0);
    const double p = eval::paired_t_test(diff, zeros);
    CHECK(p == doctest::Approx(0.05).epsilon(2e-3));
    CHECK(p == doctest::Approx(t_two_tailed_by_quadrature(2.045, 29)).epsilon(1e-6));
}

TEST_CASE("paired t-test is symmetric under argument swap") {
    util::Rng rng(13);
    std::vector<double> a(25), b(25);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.gaussian() + 0.3;
        b[i] = rng.gaussian();
    }
    CHECK(eval::paired_t_test(a, b) == doctest::Approx(eval::paired_t_test(b, a)).epsilon(1e-15));
}

TEST_CASE("national baseline shares") {
    const auto gender = eval::baseline_national(1000.0, "gender");
    REQUIRE(gender.size() == 2);
    CHECK(gender[0] == doctest::Approx(492.0).epsilon(1e-12));
    CHECK(gender[1] == doctest::Approx(508.0).epsilon(1e-12));

    const auto race = eval::baseline_national(1000.0, "race");
    REQUIRE(race.size() == 5);
    CHECK(race[0] == doctest::Approx(616.0).epsilon(1e-12));
    CHECK(race[1] == doctest::Approx(124.0).epsilon(1e-12));
    CHECK(race[2] == doctest::Approx(54.0).epsilon(1e-12));
    CHECK(race[3] == doctest::Approx(176.0).epsilon(1e-12));
    CHECK(race[4] == doctest::Approx(30.0).epsilon(1e-12));

    for (const double v : eval::baseline_national(0.0, "race")) CHECK(v == 0.0);
    CHECK_THROWS_AS(eval::baseline_national(10.0, "age"), config_error);

    util::Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const double p = rng.uniform(0.0, 1e7);
        for (const std::string variable : {"gender", "race"}) {
            double total = 0.0;
            for (const double v : eval::baseline_national(p, variable)) total += v;
            CHECK(std::fabs(total - p) <= 1e-9 * std::max(p, 1.0));
        }
    }
}

TEST_CASE("relative error definition") {
    CHECK(eval::relative_error_of_unit(std::vector<double>{15.0, 5.0},
                                       std::vector<double>{10.0, 10.0}) ==
          doctest::Approx(0.5).epsilon(1e-15));
    // zero-count categories use the max(y,1) guard
    CHECK(eval::relative_error_of_unit(std::vector<double>{2.0}, std::vector<double>{0.0}) == 2.0);
}

TEST_CASE("relative error report") {
    const std::vector<std::vector<double>> truth{{10, 10}, {20, 20}, {50, 50}};
    const std::vector<std::vector<double>> perfect(truth);
    const std::vector<double> users{5, 50, 500};
    const std::vector<double> thresholds{1, 10, 100, 1000};
    const auto rows = eval::relative_error_report(perfect, truth, users, thresholds, 0.95);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].n_units == 3);
    CHECK(rows[0].rel_error == 0.0);
    CHECK(rows[1].n_units == 2);
    CHECK(rows[2].n_units == 1);
    CHECK(rows[3].empty);  // threshold above every unit

    const std::vector<std::vector<double>> off{{15, 5}, {20, 20}, {50, 50}};
    const auto rows2 = eval::relative_error_report(off, truth, users, thresholds, 0.95);
    CHECK(rows2[0].rel_error > 0.0);
}

TEST_CASE("noise shrinking as 1/sqrt(users) gives non-increasing quantiles") {
    util::Rng rng(21);
    const std::size_t n = 4000;
    std::vector<std::vector<double>> preds(n), truths(n);
    std::vector<double> users(n);
    for (std::size_t i = 0; i < n; ++i) {
        users[i] = std::exp(rng.uniform(0.0, std::log(5000.0)));
        const double y0 = 500.0 + 200.0 * rng.gaussian();
        const double y1 = 400.0 + 150.0 * rng.gaussian();
        truths[i] = {std::max(1.0, y0), std::max(1.0, y1)};
        preds[i] = truths[i];
        for (double& v : preds[i]) v *= 1.0 + 3.0 * rng.gaussian() / std::sqrt(users[i]);
    }
    const std::vector<double> thresholds{1, 10, 100, 1000};
    const auto rows = eval::relative_error_report(preds, truths, users, thresholds, 0.95);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        REQUIRE_FALSE(rows[i].empty);
        CHECK(rows[i].rel_error <= rows[i - 1].rel_error);
    }
}

TEST_CASE("quantile interpolation") {
    CHECK(eval::quantile_value({1.0, 2.0, 3.0, 4.0, 5.0}, 0.5) == 3.0);
    CHECK(eval::quantile_value({1.0, 2.0}, 0.75) == doctest::Approx(1.75).epsilon(1e-15));
    CHECK(eval::quantile_value({42.0}, 0.95) == 42.0);
    CHECK_THROWS_AS(eval::quantile_value({}, 0.5), data_error);
    CHECK_THROWS_AS(eval::quantile_value({1.0}, 1.5), config_error);
}

TEST_CASE("report rendering is deterministic and sectioned") {
    eval::EvalReport report;
    report.variable = "gender";
    report.resolution = "block";
    report.categories = {"male", "female"};
    report.pearson = {0.95, 0.93};
    report.pearson_p = {1e-10, 1e-9};
    report.r2 = {0.9, 0.86};
    report.comparison = eval::EvalReport::Comparison{"a", "b", 0.04};
    report.quantile = 0.95;
    report.rel_error = {{1.0, 100, 0.5, false}, {1000.0, 0, 0.0, true}};
    const std::string csv = eval::render_report_csv(report);
    CHECK(csv == eval::render_report_csv(report));
    CHECK(csv.find("metric,variable,category,value") != std::string::npos);
    CHECK(csv.find("comparison,config_a,config_b,p_value") != std::string::npos);
    CHECK(csv.find("threshold,n_units,quantile,rel_error") != std::string::npos);
    CHECK(csv.find("empty") != std::string::npos);
    const std::string plot = eval::render_plot_data(report);
    CHECK(plot.find("block,1,100,0.95,0.5") != std::string::npos);
}
