#pragma once

// Nearest-neighbour fingerprint localization and radio-map error metrics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "rfmap/radiomap.hpp"
#include "rfmap/vec.hpp"

namespace rfmap {

class LocalizeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FingerprintRow {
    int id = 0;
    std::optional<Vec3> position;
    std::vector<double> rss;
};

/// Rows of either radio-map kind, in id order.
struct FingerprintMap {
    std::vector<std::string> streams;
    std::vector<FingerprintRow> rows;

    const FingerprintRow& row(int id) const {
        for (const auto& r : rows)
            if (r.id == id) return r;
        throw LocalizeError("no fingerprint row with id " + std::to_string(id));
    }
};

inline FingerprintMap fingerprints(const ActiveRadioMap& m) {
    FingerprintMap f;
    f.streams = m.streams;
    for (std::size_t i = 0; i < m.cells.size(); ++i) f.rows.push_back({m.cells[i].id, m.cells[i].position, m.rss[i]});
    std::sort(f.rows.begin(), f.rows.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return f;
}

/// Placement 0 has no location; leave it out when the map is used to
/// locate a person.
inline FingerprintMap fingerprints(const PassiveRadioMap& m, bool include_empty = true) {
    FingerprintMap f;
    f.streams = m.streams;
    for (std::size_t i = 0; i < m.placements.size(); ++i) {
        if (!include_empty && m.placements[i].id == 0) continue;
        f.rows.push_back({m.placements[i].id, placement_point(m.placements[i]), m.rss[i]});
    }
    std::sort(f.rows.begin(), f.rows.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return f;
}

inline double rss_distance_sq(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

/// Row id minimising the Euclidean RSS distance; ties go to the lowest id.
inline int nn_classify(const FingerprintMap& map, const std::vector<double>& rss) {
    if (map.rows.empty()) throw LocalizeError("cannot classify against an empty radio map");
    if (rss.size() != map.streams.size())
        throw LocalizeError("observation has " + std::to_string(rss.size()) + " streams, map has " +
                            std::to_string(map.streams.size()));
    int best_id = 0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : map.rows) {
        const double d = rss_distance_sq(r.rss, rss);
        if (d < best || (d == best && r.id < best_id)) {
            best = d;
            best_id = r.id;
        }
    }
    return best_id;
}

struct Observation {
    std::vector<double> rss;
    std::optional<Vec3> true_location;
    int source_id = -1;  ///< row the sample was drawn at, for stratification
};

struct TableErrors {
    double rmse = 0.0;
    double avg_abs_err = 0.0;
    std::size_t count = 0;
};

/// RMSE and mean absolute difference over every entry of two equal-shaped tables.
inline TableErrors table_errors(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
    if (a.size() != b.size()) throw LocalizeError("RSS tables differ in row count");
    TableErrors e;
    double sq = 0.0, ab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) throw LocalizeError("RSS tables differ in column count at row " + std::to_string(i));
        for (std::size_t j = 0; j < a[i].size(); ++j) {
            const double d = a[i][j] - b[i][j];
            sq += d * d;
            ab += std::abs(d);
            ++e.count;
        }
    }
    if (e.count > 0) {
        e.rmse = std::sqrt(sq / static_cast<double>(e.count));
        e.avg_abs_err = ab / static_cast<double>(e.count);
    }
    return e;
}

inline std::vector<std::vector<double>> rss_rows(const FingerprintMap& m) {
    std::vector<std::vector<double>> out;
    for (const auto& r : m.rows) out.push_back(r.rss);
    return out;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct EvalReport {
    std::vector<int> predicted;
    std::vector<double> errors;  ///< metres, per observation with a true location
    double mean_distance_error = 0.0;
    double median_distance_error = 0.0;
    std::optional<TableErrors> rss;
    std::optional<std::uint64_t> seed;
};

inline EvalReport evaluate(const FingerprintMap& map, const std::vector<Observation>& obs,
                           const FingerprintMap* reference = nullptr) {
    EvalReport r;
    for (const auto& o : obs) {
        const int id = nn_classify(map, o.rss);
        r.predicted.push_back(id);
        if (!o.true_location) continue;
        const auto& row = map.row(id);
        if (!row.position) throw LocalizeError("predicted row " + std::to_string(id) + " has no location");
        r.errors.push_back(distance(*row.position, *o.true_location));
    }
    if (!r.errors.empty())
        r.mean_distance_error = std::accumulate(r.errors.begin(), r.errors.end(), 0.0) / static_cast<double>(r.errors.size());
    r.median_distance_error = median(r.errors);
    if (reference) r.rss = table_errors(rss_rows(map), rss_rows(*reference));
    return r;
}

inline nlohmann::json report_json(const EvalReport& r) {
    nlohmann::json j{{"samples", r.predicted.size()},
                     {"mean_distance_error_m", r.mean_distance_error},
                     {"median_distance_error_m", r.median_distance_error},
                     {"predicted", r.predicted},
                     {"errors_m", r.errors}};
    if (r.rss) j["rss"] = {{"rmse_dbm", r.rss->rmse}, {"avg_abs_err_dbm", r.rss->avg_abs_err}, {"entries", r.rss->count}};
    j["seed"] = r.seed ? nlohmann::json(*r.seed) : nlohmann::json(nullptr);
    return j;
}

// ---------------------------------------------------------------------------
// Synthetic observations
// ---------------------------------------------------------------------------

/// `per_row` noisy samples at every located row, in row order.
inline std::vector<Observation> sample_observations(const FingerprintMap& map, int per_row, double sigma_db,
                                                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<Observation> out;
    for (const auto& r : map.rows) {
        if (!r.position) continue;
        for (int k = 0; k < per_row; ++k) {
            Observation o{r.rss, r.position, r.id};
            for (double& v : o.rss) v += sigma_db * noise(rng);
            out.push_back(std::move(o));
        }
    }
    return out;
}

/// `n` samples at uniformly drawn located rows.
inline std::vector<Observation> monte_carlo_observations(const FingerprintMap& map, int n, double sigma_db,
                                                         std::uint64_t seed) {
    std::vector<const FingerprintRow*> located;
    for (const auto& r : map.rows)
        if (r.position) located.push_back(&r);
    if (located.empty()) throw LocalizeError("radio map has no located rows");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, located.size() - 1);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<Observation> out;
    for (int i = 0; i < n; ++i) {
        const FingerprintRow& r = *located[pick(rng)];
        Observation o{r.rss, r.position, r.id};
        for (double& v : o.rss) v += sigma_db * noise(rng);
        out.push_back(std::move(o));
    }
    return out;
}

struct Split {
    std::vector<Observation> train, test;
};

/// Seeded 2:1 split, stratified so that each source row contributes
/// round(2n/3) training samples.
inline Split split_train_test(const std::vector<Observation>& obs, std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < obs.size(); ++i) strata[obs[i].source_id].push_back(i);
    std::mt19937_64 rng(seed);
    Split s;
    for (auto& [id, idx] : strata) {
        std::shuffle(idx.begin(), idx.end(), rng);
        const std::size_t n_train = static_cast<std::size_t>(std::llround(2.0 * static_cast<double>(idx.size()) / 3.0));
        for (std::size_t k = 0; k < idx.size(); ++k) (k < n_train ? s.train : s.test).push_back(obs[idx[k]]);
    }
    return s;
}

/// Measurement-style map: per-row mean of the training samples, on the
/// rows of `shape` that have samples.
inline FingerprintMap empirical_map(const FingerprintMap& shape, const std::vector<Observation>& train) {
    std::map<int, std::pair<std::vector<double>, int>> acc;
    for (const auto& o : train) {
        auto& [sum, n] = acc[o.source_id];
        if (sum.empty()) sum.assign(o.rss.size(), 0.0);
        for (std::size_t j = 0; j < o.rss.size(); ++j) sum[j] += o.rss[j];
        ++n;
    }
    FingerprintMap out;
    out.streams = shape.streams;
    for (const auto& r : shape.rows) {
        auto it = acc.find(r.id);
        if (it == acc.end()) continue;
        FingerprintRow row{r.id, r.position, it->second.first};
        for (double& v : row.rss) v /= it->second.second;
        out.rows.push_back(std::move(row));
    }
    return out;
}

struct LocalizationStudy {
    EvalReport simulation_based;    ///< test samples against the simulated map
    EvalReport measurement_based;   ///< test samples against the map built from training samples
    std::size_t train = 0, test = 0;
};

/// Noisy samples stand in for measurements: they are split 2:1, the training
/// part builds a measurement-style map, and the test part is classified
/// against both maps.
inline LocalizationStudy localization_study(const FingerprintMap& simulated, int per_row, double sigma_db,
                                            std::uint64_t seed) {
    const auto obs = sample_observations(simulated, per_row, sigma_db, seed);
    const auto split = split_train_test(obs, seed + 1);
    LocalizationStudy st;
    st.train = split.train.size();
    st.test = split.test.size();
    st.simulation_based = evaluate(simulated, split.test);
    st.simulation_based.seed = seed;
    const FingerprintMap measured = empirical_map(simulated, split.train);
    if (!measured.rows.empty()) {
        st.measurement_based = evaluate(measured, split.test);
        st.measurement_based.seed = seed;
    }
    return st;
}

inline nlohmann::json study_json(const LocalizationStudy& s, int per_row, double sigma_db) {
    return {{"samples_per_location", per_row},
            {"noise_sigma_db", sigma_db},
            {"train_samples", s.train},
            {"test_samples", s.test},
            {"split", "2:1 stratified per location"},
            {"simulation_based", report_json(s.simulation_based)},
            {"measurement_based", report_json(s.measurement_based)}};
}

}  // namespace rfmap
