#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace kbrl::rl {

struct NormParams {
    std::vector<double> min;
    std::vector<double> max;

    friend bool operator==(const NormParams&, const NormParams&) = default;
};

struct ClusterTurn {
    double mean = 0.0;  // running mean of per-episode T_C
    std::int64_t count = 0;

    friend bool operator==(const ClusterTurn&, const ClusterTurn&) = default;
};

// k-means state abstraction over weighted, min-max normalized features.
struct ClusterModel {
    std::vector<std::string> feature_names;
    std::vector<double> weights;
    NormParams norm;
    std::vector<std::vector<double>> centroids;  // in weighted normalized space
    std::map<int, ClusterTurn> cluster_turns;
    double inertia = 0.0;
    int iterations = 0;

    int k() const { return static_cast<int>(centroids.size()); }
    // Raw feature vector -> point in clustering space.
    std::vector<double> transform(const std::vector<double>& raw) const;
    // Nearest centroid of a raw feature vector; ties go to the lowest id.
    int assign(const std::vector<double>& raw) const;

    friend bool operator==(const ClusterModel&, const ClusterModel&) = default;
};

NormParams fit_norm(const std::vector<std::vector<double>>& rows);
// (x - min) / (max - min) * w, with 0 where max == min.
std::vector<double> normalize(const std::vector<double>& raw, const NormParams& norm, const std::vector<double>& weights);

double squared_distance(const std::vector<double>& a, const std::vector<double>& b);
// Index of the nearest centroid, lowest index on ties.
int nearest(const std::vector<double>& point, const std::vector<std::vector<double>>& centroids);

struct KMeansResult {
    std::vector<std::vector<double>> centroids;
    std::vector<int> assignment;
    double inertia = 0.0;
    int iterations = 0;
};

// Initial centroid rows: a seeded partial Fisher-Yates shuffle over row
// indices, skipping rows equal to one already chosen while enough distinct
// rows remain.
std::vector<std::size_t> initial_rows(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed);

// Lloyd's algorithm on already transformed points. Empty clusters are
// reseeded to the point farthest from its centroid (lowest index on ties).
KMeansResult lloyd(const std::vector<std::vector<double>>& points, int k, int max_iter, std::uint64_t seed);

// Normalizes the raw dataset, runs lloyd(), and packs the model.
ClusterModel fit_clusters(const std::vector<std::vector<double>>& dataset, const std::vector<double>& weights,
                          const std::vector<std::string>& feature_names, int k, int max_iter, std::uint64_t seed);

// Per-episode T_C for each cluster: mean of the turn indices spent in it.
std::map<int, double> episode_cluster_turns(const std::vector<int>& turn_clusters);
// Folds one episode's T_C values into the running means.
void update_cluster_turns(ClusterModel& model, const std::vector<int>& turn_clusters);

nlohmann::json to_json(const ClusterModel& model);
ClusterModel cluster_model_from_json(const nlohmann::json& j);

inline constexpr const char* kClusterSchema = "kbrl.cluster_model";
inline constexpr int kClusterVersion = 1;

}  // namespace kbrl::rl
