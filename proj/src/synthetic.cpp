#include "geodemo/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "geodemo/errors.hpp"
#include "geodemo/records.hpp"
#include "geodemo/util.hpp"

namespace geodemo::pipe {

using nlohmann::json;

void SynthConfig::validate() const {
    if (n_units < 20) throw config_error("synth: need at least 20 units");
    if (categories < 2) throw config_error("synth: need at least 2 categories");
    if (vocab_size < categories) throw config_error("synth: vocab_size must be >= categories");
    if (!(users_min >= 1.0 && users_max >= users_min))
        throw config_error("synth: bad users-per-unit range");
    if (tokens_per_user == 0 || tokens_per_record == 0)
        throw config_error("synth: token counts must be positive");
    if (population_max < population_min) throw config_error("synth: bad population range");
    if (out_dir.empty()) throw config_error("synth: output directory required");
}

namespace {

std::string make_geoid(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "42%03zu%06zu%1zu%03zu", i / 250 % 1000, (i % 250) / 25,
                  (i % 25) / 5 + 1, i % 5 + 1);
    return buf;
}

std::string word_name(std::size_t w) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "w%04zu", w);
    return buf;
}

std::vector<std::string> category_names(std::size_t k) {
    if (k == 2) return {"male", "female"};
    if (k == 5) return {"white", "black", "asian", "hispanic", "other"};
    std::vector<std::string> names;
    for (std::size_t j = 0; j < k; ++j) names.push_back("cat" + std::to_string(j + 1));
    return names;
}

// cumulative distribution sampler
struct Cdf {
    std::vector<double> cum;

    explicit Cdf(const std::vector<double>& weights) {
        cum.resize(weights.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            cum[i] = acc;
        }
    }

    std::size_t draw(util::Rng& rng) const {
        const double u = rng.unit() * cum.back();
        return static_cast<std::size_t>(
            std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    }
};

// integer counts summing exactly to p, by largest remainder
std::vector<std::int64_t> apportion(std::uint64_t p, const std::vector<double>& shares) {
    const std::size_t k = shares.size();
    std::vector<std::int64_t> counts(k);
    std::vector<std::pair<double, std::size_t>> rema(k);
    std::int64_t assigned = 0;
    for (std::size_t j = 0; j < k; ++j) {
        const double exact = static_cast<double>(p) * shares[j];
        counts[j] = static_cast<std::int64_t>(std::floor(exact));
        assigned += counts[j];
        rema[j] = {exact - std::floor(exact), j};
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::int64_t rest = static_cast<std::int64_t>(p) - assigned;
    for (std::size_t j = 0; rest > 0; j = (j + 1) % k, --rest) ++counts[rema[j].second];
    return counts;
}

}  // namespace

SynthPaths generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);
    SynthPaths paths;
    paths.records = cfg.out_dir + "/records.jsonl";
    paths.boundaries = cfg.out_dir + "/boundaries.geojson";
    paths.truth = cfg.out_dir + "/truth.csv";
    paths.params = cfg.out_dir + "/params.json";

    util::Rng rng(cfg.seed);
    const std::size_t k = cfg.categories;
    const std::size_t vocab = cfg.vocab_size;
    const std::vector<std::string> cats = category_names(k);

    // Category-conditional word intensities. Each category owns a disjoint
    // band of "hot" words it uses heavily; the rest of the vocabulary is a
    // rare tail. Hot-word frequencies then move strongly with the category
    // mix, which keeps the demographic signal recoverable after normalization
    // and a squashing transform.
    const std::size_t hot_per_cat = std::max<std::size_t>(4, std::min<std::size_t>(30, vocab / (2 * k)));
    const double tail_mass = 0.03;
    const std::size_t tail_count = vocab - k * hot_per_cat;
    const double tail_g =
        tail_count == 0 ? 0.0
                        : tail_mass / (1.0 - tail_mass) * static_cast<double>(hot_per_cat) /
                              static_cast<double>(tail_count);
    std::vector<std::vector<double>> intensity(k, std::vector<double>(vocab, tail_g));
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t h = 0; h < hot_per_cat; ++h)
            intensity[c][c * hot_per_cat + h] = 0.7 + 0.6 * rng.unit();
    }
    std::vector<Cdf> word_cdf;
    word_cdf.reserve(k);
    for (std::size_t c = 0; c < k; ++c) word_cdf.emplace_back(intensity[c]);

    // unit grid: square cells, 0.01 degrees, anchored in the US box
    const std::size_t cols =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(cfg.n_units))));
    const double cell = 0.01;
    const double lon0 = -100.0;
    const double lat0 = 40.0;

    json features = json::array();
    std::string truth_csv = "geoid,variable,category,count\n";
    json unit_params = json::array();

    util::AtomicFileWriter records(paths.records);
    std::uint64_t next_user = 1;

    for (std::size_t i = 0; i < cfg.n_units; ++i) {
        const std::string geoid = make_geoid(i);
        const std::size_t row = i / cols;
        const std::size_t col = i % cols;
        const double west = lon0 + static_cast<double>(col) * cell;
        const double south = lat0 + static_cast<double>(row) * cell;

        // demographic proportions
        std::vector<double> pi(k);
        if (k == 2) {
            pi[0] = rng.uniform(0.08, 0.92);
            pi[1] = 1.0 - pi[0];
        } else {
            double total = 0.0;
            for (double& v : pi) {
                v = rng.uniform(0.2, 1.0);
                total += v;
            }
            for (double& v : pi) v /= total;
        }
        const std::uint64_t population =
            cfg.population_min + rng.below(cfg.population_max - cfg.population_min + 1);
        const std::vector<std::int64_t> counts = apportion(population, pi);

        const double log_users = rng.uniform(std::log(cfg.users_min), std::log(cfg.users_max));
        const std::size_t users = static_cast<std::size_t>(std::llround(std::exp(log_users)));

        const Cdf cat_cdf{pi};
        for (std::size_t u = 0; u < users; ++u) {
            const std::uint64_t uid = next_user++;
            const std::size_t c = cat_cdf.draw(rng);
            std::vector<std::size_t> tokens(cfg.tokens_per_user);
            for (std::size_t t = 0; t < cfg.tokens_per_user; ++t)
                tokens[t] = word_cdf[c].draw(rng);
            for (std::size_t first = 0; first < tokens.size(); first += cfg.tokens_per_record) {
                const std::size_t last = std::min(tokens.size(), first + cfg.tokens_per_record);
                std::string text;
                for (std::size_t t = first; t < last; ++t) {
                    if (t > first) text.push_back(' ');
                    text += word_name(tokens[t]);
                }
                ingest::RawRecord r;
                r.longitude = west + (0.02 + 0.96 * rng.unit()) * cell;
                r.latitude = south + (0.02 + 0.96 * rng.unit()) * cell;
                r.user_id = uid;
                r.text = std::move(text);
                records.stream() << ingest::serialize_record(r) << '\n';
            }
        }

        // boundary feature (closed square ring)
        json ring = json::array();
        ring.push_back(json::array({west, south}));
        ring.push_back(json::array({west + cell, south}));
        ring.push_back(json::array({west + cell, south + cell}));
        ring.push_back(json::array({west, south + cell}));
        ring.push_back(json::array({west, south}));
        json feature;
        feature["type"] = "Feature";
        feature["properties"] = json{{"geoid", geoid}};
        feature["geometry"] = json{{"type", "Polygon"}, {"coordinates", json::array({ring})}};
        features.push_back(std::move(feature));

        const std::string variable = k == 2 ? "gender" : k == 5 ? "race" : "demo";
        for (std::size_t j = 0; j < k; ++j) {
            truth_csv += geoid + "," + variable + "," + cats[j] + "," +
                         std::to_string(counts[j]) + "\n";
        }
        truth_csv += geoid + ",population,," + std::to_string(population) + "\n";

        json up;
        up["geoid"] = geoid;
        up["proportions"] = pi;
        up["population"] = population;
        up["users"] = users;
        unit_params.push_back(std::move(up));
    }
    records.commit();

    json collection;
    collection["type"] = "FeatureCollection";
    collection["features"] = std::move(features);
    util::write_file_atomic(paths.boundaries, collection.dump());
    util::write_file_atomic(paths.truth, truth_csv);

    json params;
    params["seed"] = cfg.seed;
    params["n_units"] = cfg.n_units;
    params["vocab_size"] = cfg.vocab_size;
    params["categories"] = cats;
    params["users_min"] = cfg.users_min;
    params["users_max"] = cfg.users_max;
    params["tokens_per_user"] = cfg.tokens_per_user;
    params["tokens_per_record"] = cfg.tokens_per_record;
    params["population_min"] = cfg.population_min;
    params["population_max"] = cfg.population_max;
    params["word_intensity"] = intensity;
    params["units"] = std::move(unit_params);
    util::write_file_atomic(paths.params, params.dump(1));

    return paths;
}

}  // namespace geodemo::pipe
