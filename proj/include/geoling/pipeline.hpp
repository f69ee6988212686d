#pragma once

#include <string>
#include <vector>

#include "geoling/aggregate.hpp"
#include "geoling/cluster.hpp"
#include "geoling/config.hpp"
#include "geoling/evaluate.hpp"
#include "geoling/regression.hpp"
#include "geoling/types.hpp"

namespace geoling {

/// Workdir artifact paths. Pipeline stages communicate through these files so
/// the expensive embed/aggregate step runs once per corpus and is reused
/// across every target.
namespace artifacts {
std::string sentences(const std::string& workdir);
std::string targets(const std::string& workdir, const std::string& target_name);
std::string features_matrix(const std::string& workdir);
std::string features_index(const std::string& workdir);
std::string features_meta(const std::string& workdir);
std::string model(const std::string& workdir, const std::string& target_name);
std::string evaluation(const std::string& workdir, const std::string& target_name);
std::string confusion_csv(const std::string& workdir, const std::string& target_name);
std::string oof_csv(const std::string& workdir, const std::string& target_name);
std::string cluster_centroids(const std::string& workdir);
std::string cluster_assignments(const std::string& workdir);
std::string cluster_meta(const std::string& workdir);
std::string ranking(const std::string& workdir, const std::string& target_name);
std::string terms_csv(const std::string& workdir, const std::string& target_name, int cluster);
} // namespace artifacts

/// Seed streams derived from the global seed, one per randomized stage.
namespace seed_stream {
inline constexpr std::uint64_t kFolds = 1;
inline constexpr std::uint64_t kSubsample = 2;
inline constexpr std::uint64_t kKmeans = 3;
inline constexpr std::uint64_t kSynth = 4;
} // namespace seed_stream

struct IngestSummary {
    std::size_t rows_read = 0;
    std::size_t rows_dropped = 0;
    std::size_t records = 0;
    std::size_t communities = 0;
    std::size_t target_communities = 0;
    bool wrote_sentences = false;
    bool wrote_targets = false;
};

/// Reads raw sentence and/or yearly target files, writes the canonical
/// sentence store and the union-averaged target table into the workdir.
IngestSummary cmd_ingest(const PipelineConfig& config);

struct EmbedAggregateSummary {
    std::size_t sentences = 0;
    std::size_t oov = 0;
    std::size_t communities_before = 0;
    std::size_t communities_after = 0;
    int dimension = 0;
};

EmbedAggregateSummary cmd_embed_aggregate(const PipelineConfig& config);

struct FitSummary {
    EvaluationReport report;
    RidgeModel model;
    std::size_t dropped_features = 0; // communities with features but no target
    std::size_t dropped_targets = 0;  // target rows without features
};

FitSummary cmd_fit(const PipelineConfig& config);

/// Recomputes the evaluation report from a stored out-of-fold prediction file.
EvaluationReport cmd_evaluate(const PipelineConfig& config);

struct RankSummary {
    ClusterRanking ranking;
    bool cluster_cache_hit = false;
    std::vector<int> reported_clusters;
};

RankSummary cmd_rank(const PipelineConfig& config);

struct SynthSummary {
    std::string sentences_path;
    std::string targets_path;
    std::string truth_path;
    std::size_t records = 0;
};

SynthSummary cmd_synth(const PipelineConfig& config);

ValidationReport cmd_validate(const PipelineConfig& config);

/// In-memory synthetic dataset with known ground-truth weights. The corpus is
/// built so that re-embedding it with the hashing embedder configured in
/// `config` reproduces exactly the community features the targets were
/// generated from.
struct SynthDataset {
    std::vector<SentenceRecord> records;
    TargetTable targets;
    Eigen::VectorXd true_weights;
    double noise_stddev = 0.0;
    double shift = 0.0;
};

SynthDataset synth_generate(const PipelineConfig& config);

/// Out-of-fold prediction file I/O (CSV fips,fold,y_true,y_pred).
void save_oof_csv(const std::string& path, const OutOfFoldPredictions& oof);
OutOfFoldPredictions load_oof_csv(const std::string& path);

} // namespace geoling
