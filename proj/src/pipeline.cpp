#include "geodemo/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "geodemo/bags.hpp"
#include "geodemo/geometry.hpp"
#include "geodemo/util.hpp"

namespace geodemo::pipe {

using nlohmann::json;

namespace {

std::vector<double> json_doubles(const json& v) {
    std::vector<double> out;
    for (const json& x : v) out.push_back(x.get<double>());
    return out;
}

}  // namespace

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    return from_json_text(util::read_file(path));
}

PipelineConfig PipelineConfig::from_json_text(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(std::string("bad config json: ") + e.what());
    }
    PipelineConfig cfg;
    try {
        if (doc.contains("records")) {
            if (doc["records"].is_string())
                cfg.records.push_back(doc["records"].get<std::string>());
            else
                for (const json& p : doc["records"]) cfg.records.push_back(p.get<std::string>());
        }
        cfg.boundaries = doc.value("boundaries", "");
        cfg.truth = doc.value("truth", "");
        cfg.workdir = doc.value("workdir", "");
        if (doc.contains("bbox")) {
            if (doc["bbox"].is_string()) {
                cfg.bbox = ingest::BoundingBox::parse(doc["bbox"].get<std::string>());
            } else {
                const auto v = json_doubles(doc["bbox"]);
                if (v.size() != 4) throw config_error("bbox must have 4 components");
                cfg.bbox = {v[0], v[1], v[2], v[3]};
                cfg.bbox.validate();
            }
        }
        if (doc.contains("resolution"))
            cfg.resolution = geo::resolution_from_string(doc["resolution"].get<std::string>());
        cfg.variable = doc.value("variable", cfg.variable);
        if (doc.contains("variant"))
            cfg.variant = model::variant_from_string(doc["variant"].get<std::string>());
        if (doc.contains("scheme"))
            cfg.features.scheme = feat::scheme_from_string(doc["scheme"].get<std::string>());
        if (doc.contains("transform"))
            cfg.features.transform =
                feat::transform_from_string(doc["transform"].get<std::string>());
        cfg.denominator = doc.value("denominator", "");
        if (doc.contains("grid_lambda")) cfg.grid_lambda = json_doubles(doc["grid_lambda"]);
        if (doc.contains("grid_eta0")) cfg.grid_eta0 = json_doubles(doc["grid_eta0"]);
        cfg.epochs = doc.value("epochs", cfg.epochs);
        cfg.rho = doc.value("rho", cfg.rho);
        cfg.alpha = doc.value("alpha", cfg.alpha);
        cfg.intercept = doc.value("intercept", cfg.intercept);
        cfg.split_seed = doc.value("split_seed", cfg.split_seed);
        cfg.sgd_seed = doc.value("sgd_seed", cfg.sgd_seed);
        if (doc.contains("thresholds")) cfg.thresholds = json_doubles(doc["thresholds"]);
        cfg.quantile = doc.value("quantile", cfg.quantile);
        cfg.stopwords = doc.value("stopwords", "");
        cfg.emoticons = doc.value("emoticons", "");
        cfg.workers = doc.value("workers", cfg.workers);
    } catch (const json::exception& e) {
        throw config_error(std::string("bad config field: ") + e.what());
    }
    return cfg;
}

void PipelineConfig::validate() const {
    if (records.empty()) throw config_error("config: records input is required");
    if (boundaries.empty()) throw config_error("config: boundaries input is required");
    if (truth.empty()) throw config_error("config: truth input is required");
    if (workdir.empty()) throw config_error("config: workdir is required");
    if (variable.empty()) throw config_error("config: variable is required");
    features.validate();
    bbox.validate();
    if (!(quantile > 0.0 && quantile < 1.0)) throw config_error("config: quantile must be in (0,1)");
    if (thresholds.empty()) throw config_error("config: thresholds must be non-empty");
    if (epochs < 1) throw config_error("config: epochs must be >= 1");
    if (rho < 0.0) throw config_error("config: rho must be >= 0");
    if (alpha < 0.0) throw config_error("config: alpha must be >= 0");
    if (workers < 0) throw config_error("config: workers must be >= 0");
    for (const double l : grid_lambda)
        if (l < 0.0) throw config_error("config: lambda must be >= 0");
    for (const double e : grid_eta0)
        if (!(e > 0.0)) throw config_error("config: eta0 must be > 0");
}

std::uint64_t PipelineConfig::fingerprint() const {
    json doc;
    doc["records"] = records;
    doc["boundaries"] = boundaries;
    doc["truth"] = truth;
    doc["bbox"] = {bbox.west, bbox.east, bbox.south, bbox.north};
    doc["resolution"] = std::string(geo::resolution_to_string(resolution));
    doc["variable"] = variable;
    doc["variant"] = std::string(model::variant_to_string(variant));
    doc["scheme"] = std::string(feat::scheme_to_string(features.scheme));
    doc["transform"] = std::string(feat::transform_to_string(features.transform));
    doc["denominator"] = denominator;
    doc["grid_lambda"] = grid_lambda.empty() ? model::paper_lambda_grid() : grid_lambda;
    doc["grid_eta0"] = grid_eta0.empty() ? model::paper_eta0_grid() : grid_eta0;
    doc["epochs"] = epochs;
    doc["rho"] = rho;
    doc["alpha"] = alpha;
    doc["intercept"] = intercept;
    doc["split_seed"] = split_seed;
    doc["sgd_seed"] = sgd_seed;
    doc["thresholds"] = thresholds;
    doc["quantile"] = quantile;
    doc["stopwords"] = stopwords;
    doc["emoticons"] = emoticons;
    return util::fnv1a64(doc.dump());
}

int PipelineConfig::effective_workers() const {
    if (workers > 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

ingest::IngestSummary stage_ingest(const std::vector<std::string>& inputs,
                                   const std::string& output, const ingest::BoundingBox& bbox) {
    bbox.validate();
    std::vector<std::string> paths;
    for (const std::string& pattern : inputs) {
        for (std::string& p : util::expand_glob(pattern)) paths.push_back(std::move(p));
    }
    if (paths.empty()) throw data_error("no input files matched");

    ingest::IngestSummary total;
    util::AtomicFileWriter writer(output);
    for (const std::string& path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw data_error("cannot open " + path);
        const ingest::IngestSummary s = ingest::filter_stream(in, writer.stream(), bbox);
        total.lines_read += s.lines_read;
        total.kept += s.kept;
        total.skipped_parse += s.skipped_parse;
        total.skipped_invalid_utf8 += s.skipped_invalid_utf8;
        total.skipped_filter += s.skipped_filter;
        total.rejected_followers += s.rejected_followers;
        total.rejected_friends += s.rejected_friends;
        total.rejected_url += s.rejected_url;
        total.rejected_retweet += s.rejected_retweet;
        total.rejected_bbox += s.rejected_bbox;
    }
    writer.commit();
    util::write_file_atomic(output + ".summary.json", total.to_json() + "\n");
    return total;
}

AssignSummary stage_assign(const std::string& records_path, const std::string& boundaries_path,
                           const std::string& output, int workers) {
    const geo::SpatialIndex index = geo::SpatialIndex::build(geo::load_boundaries(boundaries_path));
    AssignSummary summary;
    util::AtomicFileWriter writer(output);

    std::ifstream in(records_path, std::ios::binary);
    if (!in) throw data_error("cannot open " + records_path);

    constexpr std::size_t kBatch = 1 << 16;
    std::vector<std::string> lines;
    std::vector<std::string> results;
    std::string line;
    std::size_t lineno = 0;
    bool done = false;
    while (!done) {
        lines.clear();
        while (lines.size() < kBatch) {
            if (!std::getline(in, line)) {
                done = true;
                break;
            }
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) lines.push_back(line);
        }
        if (lines.empty()) break;
        results.assign(lines.size(), std::string());
        std::atomic<std::uint64_t> assigned{0}, unassigned{0}, skipped{0};

        const auto process = [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                ingest::RawRecord r;
                try {
                    r = ingest::parse_record(lines[i], lineno + i + 1);
                } catch (const ingest::record_parse_error&) {
                    ++skipped;
                    continue;
                }
                const auto geoid = index.assign({r.longitude, r.latitude});
                if (!geoid) {
                    ++unassigned;
                    continue;
                }
                r.geoid = *geoid;
                results[i] = ingest::serialize_record(r);
                ++assigned;
            }
        };

        const int nthreads = std::max(1, workers);
        if (nthreads == 1 || lines.size() < 2048) {
            process(0, lines.size());
        } else {
            std::vector<std::thread> pool;
            const std::size_t chunk = (lines.size() + nthreads - 1) / nthreads;
            for (int t = 0; t < nthreads; ++t) {
                const std::size_t begin = std::min(lines.size(), static_cast<std::size_t>(t) * chunk);
                const std::size_t end = std::min(lines.size(), begin + chunk);
                if (begin < end) pool.emplace_back(process, begin, end);
            }
            for (std::thread& th : pool) th.join();
        }
        for (const std::string& out_line : results) {
            if (!out_line.empty()) writer.stream() << out_line << '\n';
        }
        summary.records_read += lines.size();
        summary.assigned += assigned.load();
        summary.unassigned += unassigned.load();
        summary.skipped_parse += skipped.load();
        lineno += lines.size();
    }
    writer.commit();

    json obj;
    obj["records_read"] = summary.records_read;
    obj["assigned"] = summary.assigned;
    obj["unassigned"] = summary.unassigned;
    obj["skipped_parse"] = summary.skipped_parse;
    util::write_file_atomic(output + ".summary.json", obj.dump(2) + "\n");
    return summary;
}

void stage_bag(const std::string& records_path, geo::Resolution resolution,
               const text::Tokenizer& tokenizer, const std::string& output,
               std::uint64_t fingerprint) {
    std::unordered_map<std::string, feat::UnitBag> bags;
    util::for_each_line(records_path, [&](std::string_view line, std::size_t lineno) {
        if (line.empty()) return;
        const ingest::RawRecord r = ingest::parse_record(line, lineno);
        if (r.geoid.empty())
            throw data_error("bag: record at line " + std::to_string(lineno) +
                             " has no geoid; run assign first");
        const std::string unit_geoid = geo::rollup_geoid(r.geoid, resolution);
        auto it = bags.find(unit_geoid);
        if (it == bags.end()) it = bags.emplace(unit_geoid, feat::UnitBag(unit_geoid)).first;
        const std::vector<std::string> tokens = tokenizer.tokenize(r.text);
        it->second.add_record(unit_geoid, r.user_id, tokens);
    });

    std::vector<feat::BagCounts> finalized;
    finalized.reserve(bags.size());
    for (const auto& [geoid, bag] : bags) finalized.push_back(bag.finalize());
    std::sort(finalized.begin(), finalized.end(),
              [](const feat::BagCounts& a, const feat::BagCounts& b) { return a.geoid < b.geoid; });
    const std::string stamp =
        fingerprint ? "geodemo-bags config=" + util::to_hex(fingerprint) : std::string();
    feat::save_bags(output, finalized, stamp);
}

void stage_split(const std::string& bags_path, std::uint64_t seed, const std::string& output) {
    std::vector<std::string> geoids;
    util::for_each_line(bags_path, [&](std::string_view line, std::size_t lineno) {
        if (line.empty() || line[0] == '#') return;
        geoids.push_back(feat::bag_from_json(line, lineno).geoid);
    });
    const auto splits = eval::split_units(std::move(geoids), seed);
    eval::save_splits(output, splits);
}

void stage_featurize(const FeaturizeOptions& opts) {
    opts.config.validate();
    const std::vector<feat::BagCounts> all_bags = feat::load_bags(opts.bags_path);
    const auto splits = eval::load_splits(opts.splits_path);

    std::vector<const feat::BagCounts*> selected;
    for (const feat::BagCounts& bag : all_bags) {
        const auto it = splits.find(bag.geoid);
        if (it == splits.end())
            throw data_error("featurize: bag " + bag.geoid + " missing from splits");
        if (it->second == opts.role) selected.push_back(&bag);
    }

    feat::Vocabulary vocab;
    feat::IdfTable idf;
    if (opts.fit_vocabulary) {
        if (opts.role != eval::SplitRole::train)
            throw config_error("featurize: the vocabulary is fit on the train split only");
        std::vector<feat::BagCounts> train_bags;
        train_bags.reserve(selected.size());
        for (const feat::BagCounts* bag : selected) train_bags.push_back(*bag);
        vocab = feat::build_vocabulary(train_bags);
        idf = feat::compute_idf(train_bags, vocab);
        feat::save_vocabulary(opts.vocab_path, vocab, idf);
    } else {
        std::tie(vocab, idf) = feat::load_vocabulary(opts.vocab_path);
    }
    const std::uint64_t vocab_fp = util::fnv1a64(util::read_file(opts.vocab_path));

    feat::FeatureFile file;
    file.config = opts.config;
    file.vocab_fingerprint = vocab_fp;
    file.dim = vocab.size();
    const feat::IdfTable* idf_ptr =
        opts.config.transform == feat::FeatureTransform::tfidf ? &idf : nullptr;
    for (const feat::BagCounts* bag : selected) {
        const feat::SparseVector raw = feat::vectorize(*bag, vocab, opts.config.scheme);
        file.geoids.push_back(bag->geoid);
        file.vectors.push_back(feat::apply_transform(raw, opts.config.transform, idf_ptr));
    }
    feat::save_features(opts.output, file);
}

namespace {

// Ground truth arrives at its own (usually block) resolution; roll it up to
// the resolution the unit geoids are at.
geo::TruthTable load_truth_for(const std::string& path, const std::vector<std::string>& geoids) {
    geo::TruthTable truth = geo::load_truth_csv(path);
    if (geoids.empty()) return truth;
    const auto res = geo::resolution_from_geoid_length(geoids.front().size());
    if (!res)
        throw data_error("geoid " + geoids.front() + " has no known resolution");
    return geo::aggregate_truth(truth, *res);
}

int resolve_denominator(const std::string& name, const std::vector<std::string>& categories,
                        const std::string& variable) {
    if (!name.empty()) {
        const auto it = std::find(categories.begin(), categories.end(), name);
        if (it != categories.end()) return static_cast<int>(it - categories.begin());
        if (name.find_first_not_of("0123456789") == std::string::npos) {
            const int idx = std::stoi(name);
            if (idx >= 0 && idx < static_cast<int>(categories.size())) return idx;
        }
        throw config_error("denominator '" + name + "' is not a category of " + variable);
    }
    if (variable == "gender") return 1;  // female
    if (variable == "race") return 0;    // white
    return 0;
}

std::vector<std::vector<std::int64_t>> collect_counts(const geo::TruthTable& truth,
                                                      const std::vector<std::string>& geoids,
                                                      const std::string& variable) {
    std::vector<std::vector<std::int64_t>> counts;
    counts.reserve(geoids.size());
    for (const std::string& geoid : geoids) {
        const auto& unit = truth.require(geoid);
        const auto it = unit.counts.find(variable);
        if (it == unit.counts.end())
            throw data_error("unit " + geoid + " has no '" + variable + "' counts");
        counts.push_back(it->second);
    }
    return counts;
}

}  // namespace

TrainSummary stage_train(const TrainOptions& opts) {
    const feat::FeatureFile train = feat::load_features(opts.train_features);
    const feat::FeatureFile val = feat::load_features(opts.val_features);
    if (train.vocab_fingerprint != val.vocab_fingerprint)
        throw data_error("train: feature files use different vocabularies");
    if (train.config.scheme != val.config.scheme || train.config.transform != val.config.transform)
        throw data_error("train: feature files use different configurations");

    const geo::TruthTable truth = load_truth_for(opts.truth_path, train.geoids);
    const auto cat_it = truth.categories.find(opts.variable);
    if (cat_it == truth.categories.end())
        throw data_error("truth file has no variable '" + opts.variable + "'");
    const std::vector<std::string>& categories = cat_it->second;
    const int q = opts.variant == model::Variant::population_known
                      ? resolve_denominator(opts.denominator, categories, opts.variable)
                      : -1;

    if (opts.variant == model::Variant::population_known) {
        for (const std::string& geoid : train.geoids)
            if (!truth.require(geoid).population)
                throw data_error("unit " + geoid + " has no population");
        for (const std::string& geoid : val.geoids)
            if (!truth.require(geoid).population)
                throw data_error("unit " + geoid + " has no population");
    }

    model::TrainConfig base = opts.base;
    base.variant = opts.variant;
    base.denominator = q;
    const auto train_targets =
        model::make_targets(collect_counts(truth, train.geoids, opts.variable), opts.variant, q,
                            base.alpha);
    const auto val_targets = model::make_targets(collect_counts(truth, val.geoids, opts.variable),
                                                 opts.variant, q, base.alpha);

    const std::vector<double>& lambdas =
        opts.grid_lambda.empty() ? model::paper_lambda_grid() : opts.grid_lambda;
    const std::vector<double>& etas =
        opts.grid_eta0.empty() ? model::paper_eta0_grid() : opts.grid_eta0;

    const model::GridSearchResult result =
        model::grid_search(train.vectors, train_targets, val.vectors, val_targets, lambdas, etas,
                           base, train.dim, opts.workers);

    model::RegressionModel m;
    m.variant = opts.variant;
    m.variable = opts.variable;
    m.categories = categories;
    m.denominator = q;
    m.dim = train.dim;
    m.feature_config = train.config;
    m.vocab_fingerprint = train.vocab_fingerprint;
    m.hyper = base;
    m.hyper.lambda = result.best_lambda;
    m.hyper.eta0 = result.best_eta0;
    for (const model::FitResult& fit : result.fits) {
        m.weights.push_back(fit.weights);
        m.intercepts.push_back(base.intercept ? fit.intercept : 0.0);
    }
    model::save_model(opts.output, m);

    TrainSummary summary;
    summary.best_lambda = result.best_lambda;
    summary.best_eta0 = result.best_eta0;
    summary.evaluated = result.evaluated.size();
    for (const model::GridPoint& pt : result.evaluated) {
        summary.diverged += pt.diverged ? 1 : 0;
        if (!pt.diverged && pt.lambda == result.best_lambda && pt.eta0 == result.best_eta0)
            summary.best_score = pt.score;
    }
    return summary;
}

void stage_predict(const std::string& model_path, const std::string& features_path,
                   const std::string& population_path, const std::string& output) {
    const model::RegressionModel m = model::load_model(model_path);
    const feat::FeatureFile features = feat::load_features(features_path);
    if (features.vocab_fingerprint != m.vocab_fingerprint)
        throw data_error("predict: feature file vocabulary does not match the model");
    if (features.config.scheme != m.feature_config.scheme ||
        features.config.transform != m.feature_config.transform)
        throw data_error("predict: feature configuration does not match the model");

    std::optional<geo::TruthTable> populations;
    if (m.variant == model::Variant::population_known) {
        if (population_path.empty())
            throw config_error("predict: the population-known variant needs --population");
        populations = load_truth_for(population_path, features.geoids);
    }

    std::ostringstream out;
    out << "geoid,variable,category,pred,pred_export\n";
    for (std::size_t i = 0; i < features.geoids.size(); ++i) {
        const std::string& geoid = features.geoids[i];
        std::vector<double> pred;
        if (m.variant == model::Variant::population_unknown) {
            pred = model::predict_unknown(m, features.vectors[i]);
        } else {
            const auto& unit = populations->require(geoid);
            if (!unit.population) throw data_error("no population for unit " + geoid);
            pred = model::predict_known(m, features.vectors[i],
                                        static_cast<double>(*unit.population));
        }
        for (std::size_t j = 0; j < pred.size(); ++j) {
            out << geoid << ',' << m.variable << ',' << m.categories[j] << ','
                << util::format_double(pred[j]) << ','
                << util::format_double(std::max(0.0, pred[j])) << '\n';
        }
    }
    util::write_file_atomic(output, out.str());
}

Predictions load_predictions(const std::string& path) {
    Predictions preds;
    std::unordered_map<std::string, std::size_t> geoid_row;
    util::for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        if (line.empty() || line[0] == '#') return;
        if (lineno <= 2 && line.starts_with("geoid,")) return;  // header
        const auto fields = util::split(line, ',');
        if (fields.size() != 5)
            throw data_error("prediction line " + std::to_string(lineno) + ": expected 5 fields");
        const std::string& geoid = fields[0];
        if (preds.variable.empty()) preds.variable = fields[1];
        auto it = geoid_row.find(geoid);
        if (it == geoid_row.end()) {
            it = geoid_row.emplace(geoid, preds.geoids.size()).first;
            preds.geoids.push_back(geoid);
            preds.raw.emplace_back();
            preds.exported.emplace_back();
        }
        if (it->second == 0) {
            if (std::find(preds.categories.begin(), preds.categories.end(), fields[2]) ==
                preds.categories.end())
                preds.categories.push_back(fields[2]);
        }
        try {
            preds.raw[it->second].push_back(std::stod(fields[3]));
            preds.exported[it->second].push_back(std::stod(fields[4]));
        } catch (const std::exception&) {
            throw data_error("prediction line " + std::to_string(lineno) + ": bad number");
        }
    });
    for (const auto& row : preds.raw) {
        if (row.size() != preds.categories.size())
            throw data_error("prediction file has ragged categories: " + path);
    }
    return preds;
}

eval::EvalReport stage_evaluate(const EvaluateOptions& opts) {
    const Predictions preds = load_predictions(opts.pred_path);
    const geo::TruthTable truth = load_truth_for(opts.truth_path, preds.geoids);

    std::unordered_map<std::string, double> users;
    for (const feat::BagCounts& bag : feat::load_bags(opts.bags_path))
        users[bag.geoid] = static_cast<double>(bag.unit_users);

    const std::size_t k = preds.categories.size();
    const std::size_t n = preds.geoids.size();
    if (n == 0) throw data_error("evaluate: no predictions");

    // align truth categories to the prediction file's category order by name
    const auto truth_cats_it = truth.categories.find(preds.variable);
    if (truth_cats_it == truth.categories.end())
        throw data_error("truth file has no variable '" + preds.variable + "'");
    std::vector<std::size_t> cat_pos(k);
    for (std::size_t j = 0; j < k; ++j) {
        const auto& names = truth_cats_it->second;
        const auto pos = std::find(names.begin(), names.end(), preds.categories[j]);
        if (pos == names.end())
            throw data_error("predicted category '" + preds.categories[j] +
                             "' is not a truth category of " + preds.variable);
        cat_pos[j] = static_cast<std::size_t>(pos - names.begin());
    }

    std::vector<std::vector<double>> truth_rows(n);
    std::vector<double> unit_users(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& unit = truth.require(preds.geoids[i]);
        const auto it = unit.counts.find(preds.variable);
        if (it == unit.counts.end())
            throw data_error("unit " + preds.geoids[i] + " has no '" + preds.variable + "' counts");
        if (it->second.size() != k)
            throw data_error("category count mismatch for unit " + preds.geoids[i]);
        truth_rows[i].resize(k);
        for (std::size_t j = 0; j < k; ++j)
            truth_rows[i][j] = static_cast<double>(it->second[cat_pos[j]]);
        const auto uit = users.find(preds.geoids[i]);
        if (uit == users.end()) throw data_error("no bag for unit " + preds.geoids[i]);
        unit_users[i] = uit->second;
    }

    eval::EvalReport report;
    report.variable = preds.variable;
    report.resolution = opts.resolution;
    report.categories = preds.categories;
    report.quantile = opts.quantile;
    report.fingerprint = opts.fingerprint;
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> p(n), t(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = preds.raw[i][j];
            t[i] = truth_rows[i][j];
        }
        const eval::Correlation corr = eval::pearson_r(p, t);
        report.pearson.push_back(corr.r);
        report.pearson_p.push_back(corr.p_value);
        report.r2.push_back(eval::r_squared(p, t));
    }

    if (!opts.pred_b_path.empty()) {
        const Predictions preds_b = load_predictions(opts.pred_b_path);
        if (preds_b.geoids != preds.geoids)
            throw data_error("evaluate: the two prediction files cover different units");
        std::vector<double> err_a(n), err_b(n);
        for (std::size_t i = 0; i < n; ++i) {
            double a = 0.0, b = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                a += (preds.raw[i][j] - truth_rows[i][j]) * (preds.raw[i][j] - truth_rows[i][j]);
                b += (preds_b.raw[i][j] - truth_rows[i][j]) *
                     (preds_b.raw[i][j] - truth_rows[i][j]);
            }
            err_a[i] = a / static_cast<double>(k);
            err_b[i] = b / static_cast<double>(k);
        }
        report.comparison =
            eval::EvalReport::Comparison{opts.label_a, opts.label_b,
                                         eval::paired_t_test(err_a, err_b)};
    }

    report.rel_error = eval::relative_error_report(preds.raw, truth_rows, unit_users,
                                                   opts.thresholds, opts.quantile);

    util::write_file_atomic(opts.output, eval::render_report_csv(report));
    std::string plot_path = opts.output;
    if (plot_path.ends_with(".csv")) plot_path.resize(plot_path.size() - 4);
    plot_path += ".plot.csv";
    util::write_file_atomic(plot_path, eval::render_plot_data(report));
    return report;
}

namespace {

// national-proportions predictions for the units of an existing prediction file
void write_baseline_predictions(const std::string& path, const Predictions& like,
                                const geo::TruthTable& truth) {
    std::ostringstream out;
    out << "geoid,variable,category,pred,pred_export\n";
    for (const std::string& geoid : like.geoids) {
        const auto& unit = truth.require(geoid);
        if (!unit.population) throw data_error("no population for unit " + geoid);
        const std::vector<double> pred =
            eval::baseline_national(static_cast<double>(*unit.population), like.variable);
        const auto& names = eval::national_categories(like.variable);
        for (std::size_t j = 0; j < pred.size(); ++j) {
            out << geoid << ',' << like.variable << ',' << names[j] << ','
                << util::format_double(pred[j]) << ',' << util::format_double(pred[j]) << '\n';
        }
    }
    util::write_file_atomic(path, out.str());
}

}  // namespace

PipelineArtifacts run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.workdir);
    const std::uint64_t fp = cfg.fingerprint();
    const std::string wd = cfg.workdir + "/";

    PipelineArtifacts art;
    art.clean_records = wd + "clean.jsonl";
    art.assigned_records = wd + "assigned.jsonl";
    art.bags = wd + "bags.jsonl";
    art.splits = wd + "splits.csv";
    art.vocabulary = wd + "vocab.tsv";
    art.train_features = wd + "features_train.tsv";
    art.val_features = wd + "features_validation.tsv";
    art.test_features = wd + "features_test.tsv";
    art.model = wd + "model.txt";
    art.predictions = wd + "predictions.csv";
    art.report = wd + "report.csv";
    art.plot_data = wd + "report.plot.csv";

    const auto stage = [](const char* name, const auto& fn) {
        try {
            fn();
        } catch (const config_error& e) {
            throw config_error(std::string(name) + ": " + e.what());
        } catch (const divergence_error& e) {
            throw divergence_error(std::string(name) + ": " + e.what(), e.epoch(), e.step());
        } catch (const data_error& e) {
            throw data_error(std::string(name) + ": " + e.what());
        }
    };

    stage("ingest", [&] { stage_ingest(cfg.records, art.clean_records, cfg.bbox); });
    stage("assign", [&] {
        stage_assign(art.clean_records, cfg.boundaries, art.assigned_records,
                     cfg.effective_workers());
    });
    stage("bag", [&] {
        const text::Tokenizer tokenizer = text::Tokenizer::from_files(cfg.stopwords, cfg.emoticons);
        stage_bag(art.assigned_records, cfg.resolution, tokenizer, art.bags, fp);
    });
    stage("split", [&] { stage_split(art.bags, cfg.split_seed, art.splits); });
    stage("featurize", [&] {
        FeaturizeOptions opts;
        opts.bags_path = art.bags;
        opts.splits_path = art.splits;
        opts.config = cfg.features;
        opts.vocab_path = art.vocabulary;
        opts.role = eval::SplitRole::train;
        opts.fit_vocabulary = true;
        opts.output = art.train_features;
        stage_featurize(opts);
        opts.fit_vocabulary = false;
        opts.role = eval::SplitRole::validation;
        opts.output = art.val_features;
        stage_featurize(opts);
        opts.role = eval::SplitRole::test;
        opts.output = art.test_features;
        stage_featurize(opts);
    });
    stage("train", [&] {
        TrainOptions opts;
        opts.train_features = art.train_features;
        opts.val_features = art.val_features;
        opts.truth_path = cfg.truth;
        opts.variant = cfg.variant;
        opts.variable = cfg.variable;
        opts.denominator = cfg.denominator;
        opts.grid_lambda = cfg.grid_lambda;
        opts.grid_eta0 = cfg.grid_eta0;
        opts.base.epochs = cfg.epochs;
        opts.base.rho = cfg.rho;
        opts.base.alpha = cfg.alpha;
        opts.base.intercept = cfg.intercept;
        opts.base.seed = cfg.sgd_seed;
        opts.output = art.model;
        opts.workers = cfg.effective_workers();
        stage_train(opts);
    });
    stage("predict", [&] {
        const std::string population =
            cfg.variant == model::Variant::population_known ? cfg.truth : std::string();
        stage_predict(art.model, art.test_features, population, art.predictions);
    });
    stage("evaluate", [&] {
        EvaluateOptions opts;
        opts.pred_path = art.predictions;
        opts.truth_path = cfg.truth;
        opts.bags_path = art.bags;
        opts.thresholds = cfg.thresholds;
        opts.quantile = cfg.quantile;
        opts.resolution = std::string(geo::resolution_to_string(cfg.resolution));
        opts.output = art.report;
        opts.fingerprint = util::to_hex(fp);
        // the known variant is compared against the national-proportions baseline
        if (cfg.variant == model::Variant::population_known &&
            (cfg.variable == "gender" || cfg.variable == "race")) {
            const std::string baseline_path = wd + "baseline_predictions.csv";
            const Predictions like = load_predictions(art.predictions);
            write_baseline_predictions(baseline_path, like,
                                       load_truth_for(cfg.truth, like.geoids));
            opts.pred_b_path = baseline_path;
            opts.label_a = cfg.features.name();
            opts.label_b = "national_proportions";
        }
        stage_evaluate(opts);
    });
    return art;
}

}  // namespace geodemo::pipe
