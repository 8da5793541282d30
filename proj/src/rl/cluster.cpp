#include "kbrl/rl/cluster.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>

#include "kbrl/error.hpp"

namespace kbrl::rl {

NormParams fit_norm(const std::vector<std::vector<double>>& rows) {
    NormParams p;
    if (rows.empty()) return p;
    std::size_t d = rows.front().size();
    p.min.assign(d, std::numeric_limits<double>::infinity());
    p.max.assign(d, -std::numeric_limits<double>::infinity());
    for (const auto& r : rows) {
        if (r.size() != d) throw ConfigError("dataset rows differ in length");
        for (std::size_t i = 0; i < d; ++i) {
            p.min[i] = std::min(p.min[i], r[i]);
            p.max[i] = std::max(p.max[i], r[i]);
        }
    }
    return p;
}

std::vector<double> normalize(const std::vector<double>& raw, const NormParams& norm, const std::vector<double>& weights) {
    if (raw.size() != norm.min.size() || raw.size() != weights.size()) {
        throw ConfigError("feature vector has " + std::to_string(raw.size()) + " values, model expects " +
                          std::to_string(weights.size()));
    }
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        double span = norm.max[i] - norm.min[i];
        out[i] = span > 0 ? (raw[i] - norm.min[i]) / span * weights[i] : 0.0;
    }
    return out;
}

std::vector<double> ClusterModel::transform(const std::vector<double>& raw) const { return normalize(raw, norm, weights); }

int ClusterModel::assign(const std::vector<double>& raw) const { return nearest(transform(raw), centroids); }

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ConfigError("dimension mismatch");
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

int nearest(const std::vector<double>& point, const std::vector<std::vector<double>>& centroids) {
    if (centroids.empty()) throw ConfigError("model has no centroids");
    int best = 0;
    double best_d = squared_distance(point, centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
        double d = squared_distance(point, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

std::vector<std::size_t> initial_rows(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed) {
    std::size_t n = points.size();
    if (k < 1) throw ConfigError("k must be at least 1");
    if (static_cast<std::size_t>(k) > n) {
        throw ConfigError("k = " + std::to_string(k) + " exceeds dataset size " + std::to_string(n));
    }
    std::set<std::vector<double>> distinct(points.begin(), points.end());
    bool need_distinct = distinct.size() >= static_cast<std::size_t>(k);

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::vector<std::size_t> chosen;
    std::set<std::vector<double>> seen;
    std::vector<std::size_t> skipped;
    for (std::size_t j = 0; j < n && chosen.size() < static_cast<std::size_t>(k); ++j) {
        std::size_t r = j + static_cast<std::size_t>(rng() % (n - j));
        std::swap(idx[j], idx[r]);
        if (seen.insert(points[idx[j]]).second) {
            chosen.push_back(idx[j]);
        } else {
            skipped.push_back(idx[j]);
        }
    }
    if (!need_distinct) {
        for (std::size_t s : skipped) {
            if (chosen.size() == static_cast<std::size_t>(k)) break;
            chosen.push_back(s);
        }
    }
    return chosen;
}

KMeansResult lloyd(const std::vector<std::vector<double>>& points, int k, int max_iter, std::uint64_t seed) {
    KMeansResult res;
    const std::size_t n = points.size();
    for (std::size_t row : initial_rows(points, k, seed)) res.centroids.push_back(points[row]);
    const std::size_t d = points.front().size();

    std::vector<int> assignment(n, -1);
    std::vector<int> previous;
    for (int iter = 0; iter < max_iter; ++iter) {
        for (std::size_t i = 0; i < n; ++i) assignment[i] = nearest(points[i], res.centroids);
        res.iterations = iter + 1;
        if (assignment == previous) break;

        std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
        for (int a : assignment) ++sizes[static_cast<std::size_t>(a)];
        for (int c = 0; c < k; ++c) {
            if (sizes[static_cast<std::size_t>(c)] > 0) continue;
            std::size_t far = n;
            double far_d = -1;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[static_cast<std::size_t>(assignment[i])] < 2) continue;
                double dist = squared_distance(points[i], res.centroids[static_cast<std::size_t>(assignment[i])]);
                if (dist > far_d) {
                    far_d = dist;
                    far = i;
                }
            }
            if (far == n) break;
            --sizes[static_cast<std::size_t>(assignment[far])];
            assignment[far] = c;
            sizes[static_cast<std::size_t>(c)] = 1;
            res.centroids[static_cast<std::size_t>(c)] = points[far];
        }

        std::vector<std::vector<double>> sums(static_cast<std::size_t>(k), std::vector<double>(d, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            auto& s = sums[static_cast<std::size_t>(assignment[i])];
            for (std::size_t f = 0; f < d; ++f) s[f] += points[i][f];
        }
        for (int c = 0; c < k; ++c) {
            if (sizes[static_cast<std::size_t>(c)] == 0) continue;
            for (std::size_t f = 0; f < d; ++f) {
                res.centroids[static_cast<std::size_t>(c)][f] =
                    sums[static_cast<std::size_t>(c)][f] / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
            }
        }
        previous = assignment;
    }

    res.assignment.resize(n);
    res.inertia = 0;
    for (std::size_t i = 0; i < n; ++i) {
        res.assignment[i] = nearest(points[i], res.centroids);
        res.inertia += squared_distance(points[i], res.centroids[static_cast<std::size_t>(res.assignment[i])]);
    }
    return res;
}

ClusterModel fit_clusters(const std::vector<std::vector<double>>& dataset, const std::vector<double>& weights,
                          const std::vector<std::string>& feature_names, int k, int max_iter, std::uint64_t seed) {
    if (dataset.empty()) throw ConfigError("empty clustering dataset");
    if (k < 1) throw ConfigError("k must be at least 1");
    if (static_cast<std::size_t>(k) > dataset.size()) {
        throw ConfigError("k = " + std::to_string(k) + " exceeds dataset size " + std::to_string(dataset.size()));
    }
    ClusterModel m;
    m.weights = weights;
    m.feature_names = feature_names;
    m.norm = fit_norm(dataset);
    std::vector<std::vector<double>> points;
    points.reserve(dataset.size());
    for (const auto& row : dataset) points.push_back(m.transform(row));
    KMeansResult r = lloyd(points, k, max_iter, seed);
    m.centroids = std::move(r.centroids);
    m.inertia = r.inertia;
    m.iterations = r.iterations;
    return m;
}

std::map<int, double> episode_cluster_turns(const std::vector<int>& turn_clusters) {
    std::map<int, std::pair<double, int>> acc;
    for (std::size_t t = 0; t < turn_clusters.size(); ++t) {
        int c = turn_clusters[t];
        if (c < 0) continue;
        acc[c].first += static_cast<double>(t);
        acc[c].second += 1;
    }
    std::map<int, double> out;
    for (const auto& [c, sum] : acc) out[c] = sum.first / sum.second;
    return out;
}

void update_cluster_turns(ClusterModel& model, const std::vector<int>& turn_clusters) {
    for (const auto& [c, tc] : episode_cluster_turns(turn_clusters)) {
        ClusterTurn& ct = model.cluster_turns[c];
        ct.count += 1;
        ct.mean += (tc - ct.mean) / static_cast<double>(ct.count);
    }
}

nlohmann::json to_json(const ClusterModel& m) {
    nlohmann::json turns = nlohmann::json::array();
    for (const auto& [c, ct] : m.cluster_turns) turns.push_back({{"cluster", c}, {"mean", ct.mean}, {"count", ct.count}});
    return {{"schema", kClusterSchema},
            {"version", kClusterVersion},
            {"k", m.k()},
            {"feature_names", m.feature_names},
            {"weights", m.weights},
            {"norm_min", m.norm.min},
            {"norm_max", m.norm.max},
            {"centroids", m.centroids},
            {"cluster_turns", turns},
            {"inertia", m.inertia},
            {"iterations", m.iterations}};
}

ClusterModel cluster_model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema").get<std::string>() != kClusterSchema) throw SchemaError("not a cluster model file");
        if (j.at("version").get<int>() != kClusterVersion) {
            throw SchemaError("cluster model version " + std::to_string(j.at("version").get<int>()) + " is not supported");
        }
        ClusterModel m;
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.norm.min = j.at("norm_min").get<std::vector<double>>();
        m.norm.max = j.at("norm_max").get<std::vector<double>>();
        m.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
        for (const auto& t : j.at("cluster_turns")) {
            m.cluster_turns[t.at("cluster").get<int>()] = {t.at("mean").get<double>(), t.at("count").get<std::int64_t>()};
        }
        m.inertia = j.value("inertia", 0.0);
        m.iterations = j.value("iterations", 0);
        if (static_cast<int>(m.centroids.size()) != j.at("k").get<int>()) throw SchemaError("centroid count differs from k");
        for (const auto& c : m.centroids) {
            if (c.size() != m.weights.size()) throw SchemaError("centroid dimension differs from feature count");
        }
        return m;
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(std::string("malformed cluster model: ") + ex.what());
    }
}

}  // namespace kbrl::rl
