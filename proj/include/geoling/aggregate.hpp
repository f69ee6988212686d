#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geoling/embed.hpp"
#include "geoling/types.hpp"

namespace geoling {

/// Community-level feature matrix: one row per community (ascending FIPS),
/// row j = mean embedding of that community's sentences.
struct CommunityFeatures {
    std::vector<CommunityId> communities;
    Eigen::MatrixXd matrix; // A x D
    std::vector<std::int64_t> counts;

    std::optional<std::size_t> index_of(const CommunityId& id) const;
    std::int64_t count_of(const CommunityId& id) const;
};

/// Mean-pools sentence embeddings per community. Records and embedding rows
/// must be aligned. Partial sums are accumulated per fixed-size chunk and
/// merged in chunk order, so any worker count gives bit-identical output.
CommunityFeatures aggregate(const std::vector<SentenceRecord>& records,
                            const Eigen::MatrixXd& embeddings, int workers = 1);

struct EmbedAggregateResult {
    CommunityFeatures features;
    std::size_t oov_count = 0;
    std::size_t sentence_count = 0;
};

/// Embeds and pools in one pass without materializing the S x D matrix.
/// Produces exactly the same bytes as embed_corpus + aggregate.
EmbedAggregateResult embed_and_aggregate(const std::vector<SentenceRecord>& records,
                                         const Tokenizer& tokenizer,
                                         const SentenceEmbedder& embedder, int workers = 1);

/// Drops communities with fewer than min_sentences sentences; fatal when
/// nothing survives.
CommunityFeatures min_count_filter(const CommunityFeatures& features,
                                   std::int64_t min_sentences);

void save_features(const CommunityFeatures& features, const std::string& matrix_path,
                   const std::string& index_csv_path);
CommunityFeatures load_features(const std::string& matrix_path,
                                const std::string& index_csv_path);

} // namespace geoling
