#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "geoling/embed.hpp"
#include "geoling/regression.hpp"
#include "geoling/types.hpp"

namespace geoling {

/// Uniform subsample without replacement of corpus row indices,
/// reproducible from (corpus size, sample size, seed). Indices ascend.
struct SubsamplePlan {
    std::size_t q = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> selected_rows;
};

SubsamplePlan subsample(std::size_t corpus_size, std::size_t q, std::uint64_t seed);

inline constexpr int kUnclustered = -1;

/// Spherical k-means result. Centroids are unit-norm rows; assignment values
/// are cluster ids 0..M-1, or kUnclustered for zero-norm input rows that were
/// excluded from clustering.
struct ClusterModel {
    int m = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd centroids; // M x D
    std::vector<int> assignment;
    std::vector<std::int64_t> sizes;
    std::vector<double> objective_history; // mean cosine per iteration
    int iterations = 0;

    void save(const std::string& centroid_path, const std::string& assignment_csv_path,
              const std::vector<std::size_t>& corpus_rows) const;
    static ClusterModel load(const std::string& centroid_path,
                             const std::string& assignment_csv_path,
                             std::vector<std::size_t>* corpus_rows = nullptr);
};

struct KMeansOptions {
    int max_iter = 100;
    double tol = 0.0; // stop when (assignment changes / points) <= tol
    int workers = 1;
};

/// Lloyd iteration on L2-normalized rows with cosine similarity: assign each
/// point to the max-cosine centroid (ties to the smaller id), recompute
/// centroids as normalized member means. Seeding is k-means++ style on cosine
/// distance. Empty clusters are reseeded from the point farthest from its
/// centroid. The mean-cosine objective never decreases across iterations.
ClusterModel kmeans_cosine(const Eigen::MatrixXd& points, int m, std::uint64_t seed,
                           const KMeansOptions& options = {});

struct ClusterScore {
    int cluster = 0;
    std::int64_t size = 0;
    double score = 0.0;
};

/// Cluster ranking against one prediction model: per-cluster mean of the
/// sentence-level predictions, sorted descending (ties to the smaller id).
/// Empty clusters are listed separately and excluded from the ranking.
struct ClusterRanking {
    std::vector<ClusterScore> ranked;
    std::vector<int> empty_clusters;

    nlohmann::json to_json() const;
};

ClusterRanking score_clusters(const ClusterModel& model, const Eigen::MatrixXd& points,
                              const RidgeModel& ridge);

const std::unordered_set<std::string>& default_stopwords();
std::unordered_set<std::string> load_stopwords(const std::string& path);

struct TermCount {
    std::string term;
    long count = 0;
};

/// The k most frequent non-stopword tokens among the cluster's member
/// sentences; ties broken lexicographically. Feeds word-cloud style reports.
std::vector<TermCount> top_terms(int cluster_id, const std::vector<SentenceRecord>& records,
                                 const std::vector<int>& assignment, std::size_t k,
                                 const Tokenizer& tokenizer,
                                 const std::unordered_set<std::string>& stopwords);

} // namespace geoling
