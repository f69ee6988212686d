#include "geoling/aggregate.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "geoling/csv.hpp"
#include "geoling/error.hpp"
#include "geoling/matrix_io.hpp"
#include "geoling/parallel.hpp"

namespace geoling {

namespace {

struct Accumulator {
    EmbeddingVector sum;
    std::int64_t count = 0;
};

using PartialSums = std::map<CommunityId, Accumulator>;

void add_row(PartialSums& partial, const CommunityId& id,
             const Eigen::Ref<const Eigen::RowVectorXd>& row, int dim) {
    auto [it, inserted] = partial.try_emplace(id);
    if (inserted) it->second.sum = EmbeddingVector::Zero(dim);
    it->second.sum += row.transpose();
    it->second.count += 1;
}

// Merges per-chunk partials in chunk order and divides; the only
// floating-point reduction happens here, in a fixed order.
CommunityFeatures finalize(std::vector<PartialSums>& partials, int dim) {
    PartialSums total;
    for (auto& partial : partials) {
        for (auto& [id, acc] : partial) {
            auto [it, inserted] = total.try_emplace(id);
            if (inserted) it->second.sum = EmbeddingVector::Zero(dim);
            it->second.sum += acc.sum;
            it->second.count += acc.count;
        }
    }

    CommunityFeatures features;
    features.communities.reserve(total.size());
    features.counts.reserve(total.size());
    features.matrix.resize(static_cast<Eigen::Index>(total.size()), dim);
    Eigen::Index row = 0;
    for (auto& [id, acc] : total) {
        features.communities.push_back(id);
        features.counts.push_back(acc.count);
        features.matrix.row(row) = (acc.sum / static_cast<double>(acc.count)).transpose();
        ++row;
    }
    if (!all_finite(features.matrix)) throw FatalError("aggregated features are not finite");
    return features;
}

} // namespace

std::optional<std::size_t> CommunityFeatures::index_of(const CommunityId& id) const {
    const auto it = std::lower_bound(communities.begin(), communities.end(), id);
    if (it == communities.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - communities.begin());
}

std::int64_t CommunityFeatures::count_of(const CommunityId& id) const {
    const auto idx = index_of(id);
    return idx ? counts[*idx] : 0;
}

CommunityFeatures aggregate(const std::vector<SentenceRecord>& records,
                            const Eigen::MatrixXd& embeddings, int workers) {
    if (static_cast<Eigen::Index>(records.size()) != embeddings.rows())
        throw FatalError("aggregate: record count does not match embedding rows");
    if (records.empty()) throw FatalError("aggregate: empty corpus");
    const int dim = static_cast<int>(embeddings.cols());

    const std::size_t n_chunks = (records.size() + kDefaultChunk - 1) / kDefaultChunk;
    std::vector<PartialSums> partials(n_chunks);
    for_each_chunk(records.size(), kDefaultChunk, workers,
                   [&](std::size_t chunk, std::size_t begin, std::size_t end) {
                       for (std::size_t i = begin; i < end; ++i)
                           add_row(partials[chunk], records[i].community,
                                   embeddings.row(static_cast<Eigen::Index>(i)), dim);
                   });
    return finalize(partials, dim);
}

EmbedAggregateResult embed_and_aggregate(const std::vector<SentenceRecord>& records,
                                         const Tokenizer& tokenizer,
                                         const SentenceEmbedder& embedder, int workers) {
    if (records.empty()) throw FatalError("aggregate: empty corpus");
    const int dim = embedder.dimension();

    const std::size_t n_chunks = (records.size() + kDefaultChunk - 1) / kDefaultChunk;
    std::vector<PartialSums> partials(n_chunks);
    std::vector<std::size_t> oov_per_chunk(n_chunks, 0);
    for_each_chunk(records.size(), kDefaultChunk, workers,
                   [&](std::size_t chunk, std::size_t begin, std::size_t end) {
                       for (std::size_t i = begin; i < end; ++i) {
                           bool oov = false;
                           const EmbeddingVector x =
                               embedder.embed(tokenizer.tokenize(records[i].text), oov);
                           if (oov) ++oov_per_chunk[chunk];
                           add_row(partials[chunk], records[i].community, x.transpose(), dim);
                       }
                   });

    EmbedAggregateResult result;
    result.features = finalize(partials, dim);
    result.sentence_count = records.size();
    for (const auto n : oov_per_chunk) result.oov_count += n;
    return result;
}

CommunityFeatures min_count_filter(const CommunityFeatures& features,
                                   std::int64_t min_sentences) {
    if (min_sentences < 1) throw FatalError("min_sentences must be >= 1");
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < features.counts.size(); ++i) {
        if (features.counts[i] >= min_sentences) keep.push_back(i);
    }
    if (keep.empty())
        throw FatalError("min_count_filter removed every community (min_sentences=" +
                         std::to_string(min_sentences) + ")");

    CommunityFeatures filtered;
    filtered.matrix.resize(static_cast<Eigen::Index>(keep.size()), features.matrix.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        filtered.communities.push_back(features.communities[keep[i]]);
        filtered.counts.push_back(features.counts[keep[i]]);
        filtered.matrix.row(static_cast<Eigen::Index>(i)) =
            features.matrix.row(static_cast<Eigen::Index>(keep[i]));
    }
    return filtered;
}

void save_features(const CommunityFeatures& features, const std::string& matrix_path,
                   const std::string& index_csv_path) {
    save_matrix(matrix_path, features.matrix);
    std::ofstream out(index_csv_path);
    if (!out) throw FatalError("cannot write feature index: " + index_csv_path);
    out << "fips,count\n";
    for (std::size_t i = 0; i < features.communities.size(); ++i)
        out << features.communities[i].code() << ',' << features.counts[i] << '\n';
}

CommunityFeatures load_features(const std::string& matrix_path,
                                const std::string& index_csv_path) {
    CommunityFeatures features;
    features.matrix = load_matrix(matrix_path);

    std::ifstream in(index_csv_path);
    if (!in) throw FatalError("cannot read feature index: " + index_csv_path);
    csv::Reader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw FatalError("feature index missing header: " + index_csv_path);
    while (reader.next(fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() < 2) throw FatalError("malformed feature index row in " + index_csv_path);
        features.communities.push_back(CommunityId::parse(fields[0]));
        features.counts.push_back(std::stoll(fields[1]));
    }
    if (static_cast<Eigen::Index>(features.communities.size()) != features.matrix.rows())
        throw FatalError("feature index and matrix row count disagree: " + index_csv_path);
    if (!std::is_sorted(features.communities.begin(), features.communities.end()))
        throw FatalError("feature index is not sorted by FIPS: " + index_csv_path);
    for (const auto c : features.counts) {
        if (c <= 0) throw FatalError("feature index has non-positive count: " + index_csv_path);
    }
    return features;
}

} // namespace geoling
