// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit code is the number of failures.

#include "test_scratch.hpp"
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "geodemo/bags.hpp"
#include "geodemo/features.hpp"
#include "geodemo/geometry.hpp"
#include "geodemo/metrics.hpp"
#include "geodemo/model.hpp"
#include "geodemo/pipeline.hpp"
#include "geodemo/records.hpp"
#include "geodemo/sgd.hpp"
#include "geodemo/synthetic.hpp"
#include "geodemo/tokenizer.hpp"
#include "geodemo/util.hpp"

using namespace geodemo;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& name, const std::function<std::string()>& fn) {
    try {
        const std::string detail = fn();
        std::printf("[PASS] criterion %2d: %s%s%s\n", number, name.c_str(),
                    detail.empty() ? "" : " - ", detail.c_str());
    } catch (const std::exception& e) {
        ++g_failures;
        std::printf("[FAIL] criterion %2d: %s - %s\n", number, name.c_str(), e.what());
    }
    std::fflush(stdout);
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::runtime_error(msg);
}

std::string fmt(double v) { return util::format_double(v); }

double elapsed_seconds(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

const std::string kWork = "acceptance_work";

struct RecoveryResult {
    std::vector<double> r;
    double seconds = 0.0;
    std::size_t grid_combinations = 0;
};

std::vector<double> per_category_r(const pipe::Predictions& preds, const geo::TruthTable& truth) {
    std::vector<double> out;
    for (std::size_t j = 0; j < preds.categories.size(); ++j) {
        std::vector<double> p(preds.geoids.size()), t(preds.geoids.size());
        for (std::size_t i = 0; i < preds.geoids.size(); ++i) {
            p[i] = preds.raw[i][j];
            t[i] = static_cast<double>(truth.require(preds.geoids[i]).counts.at(preds.variable)[j]);
        }
        out.push_back(eval::pearson_r(p, t).r);
    }
    return out;
}

pipe::SynthPaths acceptance_corpus() {
    pipe::SynthConfig synth;
    synth.seed = 7;
    synth.n_units = 2000;
    synth.vocab_size = 500;
    synth.out_dir = kWork + "/corpus";
    return pipe::generate_synthetic(synth);
}

}  // namespace

int main() {
    std::error_code ec;
    fs::remove_all(kWork, ec);
    fs::create_directories(kWork);

    pipe::SynthPaths corpus;
    pipe::PipelineArtifacts unknown_artifacts;

    criterion(1, "synthetic recovery, population unknown", [&] {
        const auto start = std::chrono::steady_clock::now();
        corpus = acceptance_corpus();

        pipe::PipelineConfig cfg;
        cfg.records = {corpus.records};
        cfg.boundaries = corpus.boundaries;
        cfg.truth = corpus.truth;
        cfg.workdir = kWork + "/unknown";
        cfg.variable = "gender";
        cfg.variant = model::Variant::population_unknown;
        cfg.features = {feat::FeatureScheme::normalized_user, feat::FeatureTransform::gaussian};
        cfg.split_seed = 1;
        cfg.sgd_seed = 2;
        cfg.workers = 1;  // single-threaded runtime budget
        unknown_artifacts = pipe::run_pipeline(cfg);

        const auto preds = pipe::load_predictions(unknown_artifacts.predictions);
        const auto truth = geo::load_truth_csv(corpus.truth);
        const auto r = per_category_r(preds, truth);
        const double seconds = elapsed_seconds(start);
        require(r.size() == 2, "expected a 2-category variable");
        for (std::size_t j = 0; j < r.size(); ++j)
            require(r[j] >= 0.90, "held-out r for " + preds.categories[j] + " is " + fmt(r[j]) +
                                      " < 0.90");
        require(seconds < 300.0, "pipeline took " + fmt(seconds) + "s >= 300s");

        const auto m = model::load_model(unknown_artifacts.model);
        require(m.hyper.epochs == 10, "pipeline must train with 10 epochs");
        return "r = (" + fmt(r[0]) + ", " + fmt(r[1]) + "), " + fmt(seconds) + "s single-threaded";
    });

    criterion(2, "synthetic recovery, population known", [&] {
        require(!corpus.records.empty(), "criterion 1 corpus unavailable");
        const std::string wd = kWork + "/known";
        fs::create_directories(wd);
        // identical corpus and features; stage isolation lets the shared
        // artifacts be reused directly
        for (const char* name :
             {"bags.jsonl", "splits.csv", "vocab.tsv", "features_train.tsv",
              "features_validation.tsv", "features_test.tsv"}) {
            fs::copy_file(kWork + "/unknown/" + name, wd + "/" + name,
                          fs::copy_options::overwrite_existing);
        }
        pipe::TrainOptions topts;
        topts.train_features = wd + "/features_train.tsv";
        topts.val_features = wd + "/features_validation.tsv";
        topts.truth_path = corpus.truth;
        topts.variant = model::Variant::population_known;
        topts.variable = "gender";
        topts.denominator = "male";  // q = category 1
        topts.base.alpha = 1.0;
        topts.base.seed = 2;
        topts.output = wd + "/model.txt";
        topts.workers = 1;
        const auto summary = pipe::stage_train(topts);
        require(summary.evaluated == 48, "grid search must evaluate 48 combinations");
        pipe::stage_predict(wd + "/model.txt", wd + "/features_test.tsv", corpus.truth,
                            wd + "/predictions.csv");

        const auto preds = pipe::load_predictions(wd + "/predictions.csv");
        const auto truth = geo::load_truth_csv(corpus.truth);
        for (std::size_t i = 0; i < preds.geoids.size(); ++i) {
            const double p = static_cast<double>(*truth.require(preds.geoids[i]).population);
            double total = 0.0;
            for (const double v : preds.raw[i]) total += v;
            require(std::fabs(total - p) <= 1e-9 * p,
                    "prediction for " + preds.geoids[i] + " sums to " + fmt(total) +
                        " instead of " + fmt(p));
        }
        const auto r = per_category_r(preds, truth);
        for (std::size_t j = 0; j < r.size(); ++j)
            require(r[j] >= 0.90, "held-out r for " + preds.categories[j] + " is " + fmt(r[j]) +
                                      " < 0.90");
        return "r = (" + fmt(r[0]) + ", " + fmt(r[1]) + "), predictions sum to p";
    });

    criterion(3, "sgd matches the closed-form ridge oracle", [&] {
        const auto start = std::chrono::steady_clock::now();
        util::Rng rng(42);
        const std::size_t n = 200, d = 10;
        std::vector<std::vector<double>> rows(n, std::vector<double>(d));
        std::vector<double> w_true(d);
        for (double& w : w_true) w = rng.gaussian();
        std::vector<double> y(n);
        std::vector<feat::SparseVector> xs;
        for (std::size_t i = 0; i < n; ++i) {
            feat::SparseVector x(static_cast<std::uint32_t>(d));
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                rows[i][j] = rng.gaussian() / std::sqrt(static_cast<double>(d));
                dot += rows[i][j] * w_true[j];
                x.push_back(static_cast<std::uint32_t>(j), rows[i][j]);
            }
            y[i] = dot + 0.05 * rng.gaussian();
            xs.push_back(std::move(x));
        }
        const double lambda = 0.01;

        // independent oracle: (X^T X / n + 2 lambda I) w = X^T y / n by
        // gaussian elimination
        std::vector<std::vector<double>> a(d, std::vector<double>(d + 1, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = 0; p < d; ++p) {
                for (std::size_t q = 0; q < d; ++q) a[p][q] += rows[i][p] * rows[i][q];
                a[p][d] += rows[i][p] * y[i];
            }
        }
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = 0; q <= d; ++q) a[p][q] /= static_cast<double>(n);
            a[p][p] += 2.0 * lambda;
        }
        for (std::size_t col = 0; col < d; ++col) {
            std::size_t pivot = col;
            for (std::size_t r = col + 1; r < d; ++r)
                if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
            std::swap(a[col], a[pivot]);
            for (std::size_t r = 0; r < d; ++r) {
                if (r == col || a[r][col] == 0.0) continue;
                const double f = a[r][col] / a[col][col];
                for (std::size_t q = col; q <= d; ++q) a[r][q] -= f * a[col][q];
            }
        }
        std::vector<double> oracle(d);
        for (std::size_t p = 0; p < d; ++p) oracle[p] = a[p][d] / a[p][p];

        model::TrainConfig cfg;
        cfg.lambda = lambda;
        cfg.eta0 = 0.3;  // tuned
        cfg.rho = 0.25;
        cfg.epochs = 400;
        cfg.seed = 9;
        const auto fit = model::fit_sgd(xs, y, static_cast<std::uint32_t>(d), cfg);

        double diff = 0.0, norm = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            diff += (fit.weights[j] - oracle[j]) * (fit.weights[j] - oracle[j]);
            norm += oracle[j] * oracle[j];
        }
        const double rel = std::sqrt(diff / norm);
        const double seconds = elapsed_seconds(start);
        require(rel < 0.05, "relative L2 distance " + fmt(rel) + " >= 0.05");
        require(seconds < 5.0, "took " + fmt(seconds) + "s >= 5s");
        return "relative L2 " + fmt(rel) + " in " + fmt(seconds) + "s";
    });

    criterion(4, "transformation table and sparsity preservation", [&] {
        feat::SparseVector v(1);
        v.push_back(0, 0.625);
        require(feat::apply_transform(v, feat::FeatureTransform::anscombe).entries()[0].value ==
                    2.0,
                "anscombe(0.625) must equal 2 exactly");

        feat::SparseVector one(1);
        one.push_back(0, 1.0);
        const double gauss =
            feat::apply_transform(one, feat::FeatureTransform::gaussian).entries()[0].value;
        require(std::fabs(gauss - 0.367879) <= 1e-6,
                "gaussian(1) = " + fmt(gauss) + " not within 1e-6 of 0.367879");

        // idf factor from n=4 bags with df=1
        std::vector<feat::BagCounts> bags(4);
        for (std::size_t i = 0; i < 4; ++i) bags[i].geoid = std::to_string(i);
        bags[0].words = {{"rare", 1, 1}};
        bags[0].total_words = 1;
        for (auto& b : bags) b.unit_users = 1;
        const auto vocab = feat::build_vocabulary(bags);
        const auto idf = feat::compute_idf(bags, vocab);
        const double factor = idf.at(0).value() + 1.0;
        require(std::fabs(factor - 1.693147) <= 1e-6,
                "tfidf factor " + fmt(factor) + " not within 1e-6 of 1.693147");

        util::Rng rng(55);
        feat::IdfTable table;
        table.values.assign(128, 0.0);
        table.present.assign(128, true);
        for (auto& x : table.values) x = rng.uniform(-1.0, 3.0);
        for (int trial = 0; trial < 10000; ++trial) {
            feat::SparseVector s(128);
            for (std::uint32_t i = 0; i < 128; ++i)
                if (rng.below(4) == 0) s.push_back(i, rng.uniform(1e-6, 5.0));
            for (const auto t : {feat::FeatureTransform::none, feat::FeatureTransform::tfidf,
                                 feat::FeatureTransform::anscombe, feat::FeatureTransform::logistic,
                                 feat::FeatureTransform::gaussian}) {
                const auto out = feat::apply_transform(
                    s, t, t == feat::FeatureTransform::tfidf ? &table : nullptr);
                require(out.nnz() == s.nnz(), "transform changed the support size");
                for (std::size_t i = 0; i < s.nnz(); ++i)
                    require(out.entries()[i].index == s.entries()[i].index,
                            "transform moved a support index");
            }
        }
        return "anscombe exact, gaussian/tfidf within 1e-6, support preserved on 10^4 vectors";
    });

    criterion(5, "no leakage from test-only marker words", [&] {
        const std::string dir = kWork + "/leak";
        fs::create_directories(dir);
        pipe::SynthConfig synth;
        synth.seed = 11;
        synth.n_units = 40;
        synth.vocab_size = 80;
        synth.users_min = 8;
        synth.users_max = 20;
        synth.tokens_per_user = 30;
        synth.out_dir = dir + "/corpus";
        const auto paths = pipe::generate_synthetic(synth);

        // find the test units of this corpus
        pipe::stage_assign(paths.records, paths.boundaries, dir + "/assigned.jsonl", 1);
        pipe::stage_bag(dir + "/assigned.jsonl", geo::Resolution::block, text::Tokenizer(),
                        dir + "/bags.jsonl");
        pipe::stage_split(dir + "/bags.jsonl", 21, dir + "/splits.csv");
        const auto splits = eval::load_splits(dir + "/splits.csv");

        // corpus B appends marker-word records inside test units only, sent
        // by users those units have already seen so U_i stays put
        std::map<std::string, ingest::RawRecord> test_template;
        util::for_each_line(dir + "/assigned.jsonl", [&](std::string_view line, std::size_t n) {
            const auto r = ingest::parse_record(line, n);
            const auto it = splits.find(r.geoid);
            if (it == splits.end() || it->second != eval::SplitRole::test) return;
            test_template.emplace(r.geoid, r);
        });
        require(!test_template.empty(), "corpus has no test units");
        std::string marker_records = util::read_file(paths.records);
        for (const auto& [geoid, tmpl] : test_template) {
            ingest::RawRecord r = tmpl;
            r.geoid.clear();
            r.text = "zzmarker zzmarker";
            marker_records += ingest::serialize_record(r) + "\n";
        }
        util::write_file_atomic(dir + "/records_b.jsonl", marker_records);

        const auto build = [&](const std::string& records, const std::string& wd) {
            fs::create_directories(wd);
            pipe::stage_ingest({records}, wd + "/clean.jsonl",
                               ingest::BoundingBox::contiguous_us());
            pipe::stage_assign(wd + "/clean.jsonl", paths.boundaries, wd + "/assigned.jsonl", 1);
            pipe::stage_bag(wd + "/assigned.jsonl", geo::Resolution::block, text::Tokenizer(),
                            wd + "/bags.jsonl");
            eval::save_splits(wd + "/splits.csv", splits);  // identical split
            pipe::FeaturizeOptions fo;
            fo.bags_path = wd + "/bags.jsonl";
            fo.splits_path = wd + "/splits.csv";
            fo.config = {feat::FeatureScheme::normalized_user, feat::FeatureTransform::gaussian};
            fo.vocab_path = wd + "/vocab.tsv";
            fo.role = eval::SplitRole::train;
            fo.fit_vocabulary = true;
            fo.output = wd + "/features_train.tsv";
            pipe::stage_featurize(fo);
            fo.fit_vocabulary = false;
            fo.role = eval::SplitRole::validation;
            fo.output = wd + "/features_validation.tsv";
            pipe::stage_featurize(fo);
            fo.role = eval::SplitRole::test;
            fo.output = wd + "/features_test.tsv";
            pipe::stage_featurize(fo);
            pipe::TrainOptions to;
            to.train_features = wd + "/features_train.tsv";
            to.val_features = wd + "/features_validation.tsv";
            to.truth_path = paths.truth;
            to.variant = model::Variant::population_unknown;
            to.variable = "gender";
            to.grid_lambda = {1e-3};
            to.grid_eta0 = {1e-3};
            to.base.epochs = 5;
            to.base.seed = 99;
            to.output = wd + "/model.txt";
            pipe::stage_train(to);
        };
        build(paths.records, dir + "/a");
        build(dir + "/records_b.jsonl", dir + "/b");

        const auto [vocab_b, idf_b] = feat::load_vocabulary(dir + "/b/vocab.tsv");
        require(!vocab_b.index_of("zzmarker").has_value(),
                "marker word leaked into the vocabulary");
        require(util::read_file(dir + "/a/vocab.tsv") == util::read_file(dir + "/b/vocab.tsv"),
                "vocabulary/idf file changed");
        require(util::read_file(dir + "/a/features_test.tsv") ==
                    util::read_file(dir + "/b/features_test.tsv"),
                "test features changed");
        require(util::read_file(dir + "/a/model.txt") == util::read_file(dir + "/b/model.txt"),
                "model file changed");
        return "vocabulary, idf, features and model are byte-identical";
    });

    criterion(6, "spatial join equals the exhaustive oracle", [&] {
        util::Rng rng(17);
        std::vector<geo::GeoUnit> units;
        for (std::size_t i = 0; i < 500; ++i) {
            geo::GeoUnit u;
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%015zu", 300000000000000 + i);
            u.geoid = buf;
            const double x0 = rng.uniform(0.0, 19.0);
            const double y0 = rng.uniform(0.0, 19.0);
            const double x1 = x0 + rng.uniform(0.05, 1.0);
            const double y1 = y0 + rng.uniform(0.05, 1.0);
            u.boundary.push_back(
                {{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}, {}});
            units.push_back(std::move(u));
        }
        const std::vector<geo::GeoUnit> copy = units;
        const auto index = geo::SpatialIndex::build(std::move(units));
        std::size_t hits = 0;
        for (int i = 0; i < 10000; ++i) {
            const geo::Point p{rng.uniform(-1.0, 21.0), rng.uniform(-1.0, 21.0)};
            std::optional<std::string> want;
            for (const auto& u : copy) {
                if (!geo::point_in_polygon(p, u.boundary)) continue;
                if (!want || u.geoid < *want) want = u.geoid;
            }
            const auto got = index.assign(p);
            require(got == want, "index and exhaustive scan disagree at (" + fmt(p.lon) + ", " +
                                     fmt(p.lat) + ")");
            hits += got.has_value();
        }

        // shared-edge tie rule
        std::vector<geo::GeoUnit> pair;
        geo::GeoUnit left, right;
        left.geoid = "100000000000002";
        left.boundary.push_back({{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}}, {}});
        right.geoid = "100000000000001";
        right.boundary.push_back({{{1, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 0}}, {}});
        pair.push_back(left);
        pair.push_back(right);
        const auto edge_index = geo::SpatialIndex::build(std::move(pair));
        require(edge_index.assign({1.0, 0.5}).value() == "100000000000001",
                "shared-edge point must take the lexicographically smaller geoid");
        return "10000 points agree (" + std::to_string(hits) + " inside), tie rule verified";
    });

    criterion(7, "protocol constants", [&] {
        std::vector<std::string> geoids;
        for (int i = 0; i < 100; ++i) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%015d", i + 1);
            geoids.emplace_back(buf);
        }
        const auto splits = eval::split_units(geoids, 13);
        std::size_t test = 0, val = 0, train = 0;
        for (const auto& [g, role] : splits) {
            test += role == eval::SplitRole::test;
            val += role == eval::SplitRole::validation;
            train += role == eval::SplitRole::train;
        }
        require(test == 10 && val == 9 && train == 81,
                "split of 100 units must be 10/9/81, got " + std::to_string(test) + "/" +
                    std::to_string(val) + "/" + std::to_string(train));

        require(model::paper_lambda_grid() ==
                    std::vector<double>{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1},
                "lambda grid mismatch");
        require(model::paper_eta0_grid() ==
                    std::vector<double>{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0},
                "eta0 grid mismatch");
        const model::TrainConfig defaults;
        require(defaults.epochs == 10 && defaults.rho == 0.25,
                "defaults must be epochs=10, rho=0.25");
        require(model::learning_rate(0.1, 16, 0.25) == 0.05,
                "learning_rate(0.1, 16, 0.25) must equal 0.05 exactly");

        // grid search touches all 48 combinations
        util::Rng rng(3);
        std::vector<feat::SparseVector> xs;
        std::vector<std::vector<double>> targets(1);
        for (int i = 0; i < 40; ++i) {
            feat::SparseVector x(2);
            x.push_back(0, rng.gaussian());
            x.push_back(1, rng.gaussian());
            targets[0].push_back(x.entries()[0].value * 1.5);
            xs.push_back(std::move(x));
        }
        std::vector<feat::SparseVector> val_xs(xs.begin() + 30, xs.end());
        std::vector<std::vector<double>> val_targets{
            std::vector<double>(targets[0].begin() + 30, targets[0].end())};
        xs.resize(30);
        targets[0].resize(30);
        model::TrainConfig base;
        base.seed = 1;
        const auto result =
            model::grid_search(xs, targets, val_xs, val_targets, model::paper_lambda_grid(),
                               model::paper_eta0_grid(), base, 2);
        require(result.evaluated.size() == 48,
                "grid search evaluated " + std::to_string(result.evaluated.size()) +
                    " combinations, expected 48");
        return "10/9/81 split, 6x8 grid of 48, epochs=10, rho=0.25, eta(0.1,16,0.25)=0.05";
    });

    criterion(8, "national-proportions baseline exactness", [&] {
        const auto gender = eval::baseline_national(1000.0, "gender");
        require(std::fabs(gender[0] - 492.0) <= 1e-9 && std::fabs(gender[1] - 508.0) <= 1e-9,
                "gender baseline must be (492, 508)");
        const auto race = eval::baseline_national(1000.0, "race");
        const std::vector<double> expect{616.0, 124.0, 54.0, 176.0, 30.0};
        for (std::size_t j = 0; j < expect.size(); ++j)
            require(std::fabs(race[j] - expect[j]) <= 1e-9, "race baseline mismatch");
        for (const double p : {1000.0, 12345.0, 7.0}) {
            for (const std::string variable : {"gender", "race"}) {
                double total = 0.0;
                for (const double v : eval::baseline_national(p, variable)) total += v;
                require(std::fabs(total - p) <= 1e-9 * p, "baseline must sum to p");
            }
        }
        return "(492, 508) and (616, 124, 54, 176, 30); sums equal p";
    });

    criterion(9, "account and content filter rules", [&] {
        std::istringstream in(
            R"({"lat":40.0,"lon":-77.0,"user_id":1,"text":"fine one","followers_count":999}
{"lat":40.0,"lon":-77.0,"user_id":2,"text":"fine two","followers_count":1000}
{"lat":40.0,"lon":-77.0,"user_id":3,"text":"popular","followers_count":1001}
{"lat":40.0,"lon":-77.0,"user_id":4,"text":"see https://spam.example now"}
{"lat":40.0,"lon":-77.0,"user_id":5,"text":"RT @x replay"}
)");
        std::ostringstream out;
        const auto summary =
            ingest::filter_stream(in, out, ingest::BoundingBox::contiguous_us());
        require(summary.kept == 2, "expected exactly 2 kept records, got " +
                                       std::to_string(summary.kept));
        require(out.str().find("fine one") != std::string::npos &&
                    out.str().find("fine two") != std::string::npos,
                "the two compliant records must survive");
        require(summary.rejected_followers == 1 && summary.rejected_url == 1 &&
                    summary.rejected_retweet == 1,
                "each rule must fire exactly once");
        return "kept exactly the 999- and 1000-follower records";
    });

    criterion(10, "tokenizer golden corpus", [&] {
        const text::Tokenizer tokenizer;
        std::ostringstream produced;
        util::for_each_line(std::string(GEODEMO_DATA_DIR) + "/tokenizer_fixture.txt",
                            [&](std::string_view line, std::size_t) {
                                const auto tokens = tokenizer.tokenize(line);
                                for (std::size_t i = 0; i < tokens.size(); ++i) {
                                    if (i > 0) produced << ' ';
                                    produced << tokens[i];
                                }
                                produced << '\n';
                            });
        const std::string golden =
            util::read_file(std::string(GEODEMO_DATA_DIR) + "/tokenizer_golden.txt");
        require(produced.str() == golden, "tokenized fixture differs from the golden file");
        return "20-line fixture reproduced byte-exactly";
    });

    criterion(11, "relative-error curve is non-increasing in the user threshold", [&] {
        util::Rng rng(21);
        const std::size_t n = 4000;
        std::vector<std::vector<double>> preds(n), truths(n);
        std::vector<double> users(n);
        for (std::size_t i = 0; i < n; ++i) {
            users[i] = std::exp(rng.uniform(0.0, std::log(5000.0)));
            truths[i] = {std::max(1.0, 500.0 + 200.0 * rng.gaussian()),
                         std::max(1.0, 400.0 + 150.0 * rng.gaussian())};
            preds[i] = truths[i];
            for (double& v : preds[i]) v *= 1.0 + 3.0 * rng.gaussian() / std::sqrt(users[i]);
        }
        const std::vector<double> thresholds{1, 10, 100, 1000};
        const auto rows = eval::relative_error_report(preds, truths, users, thresholds, 0.95);
        std::string curve;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            require(!rows[i].empty, "threshold row must not be empty");
            if (i > 0)
                require(rows[i].rel_error <= rows[i - 1].rel_error,
                        "95th-percentile relative error increased from threshold " +
                            fmt(rows[i - 1].threshold) + " to " + fmt(rows[i].threshold));
            curve += (i ? ", " : "") + fmt(rows[i].rel_error);
        }
        return "95th percentile errors: " + curve;
    });

    if (g_failures == 0)
        std::printf("acceptance: all 11 criteria passed\n");
    else
        std::printf("acceptance: %d criterion(s) failed\n", g_failures);
    return g_failures;
}
