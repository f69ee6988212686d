#include <doctest.h>

#include <cstring>
#include <map>
#include <numeric>

#include "geoling/aggregate.hpp"
#include "geoling/error.hpp"
#include "geoling/rng.hpp"
#include "temp_dir.hpp"

using namespace geoling;
using testutil::TempDir;

namespace {

// Random corpus over a handful of communities with embeddings attached.
struct RandomCorpus {
    std::vector<SentenceRecord> records;
    Eigen::MatrixXd embeddings;
};

RandomCorpus make_corpus(int n, int d, int communities, std::uint64_t seed) {
    RandomCorpus corpus;
    SplitMix64 rng(seed);
    corpus.embeddings.resize(n, d);
    for (int i = 0; i < n; ++i) {
        const auto c = 1 + rng.next_below(static_cast<std::uint64_t>(communities));
        corpus.records.push_back({"s" + std::to_string(i), "text",
                                  CommunityId::parse(std::to_string(c))});
        for (int j = 0; j < d; ++j) corpus.embeddings(i, j) = rng.next_normal();
    }
    return corpus;
}

} // namespace

TEST_CASE("aggregation means per community in ascending fips order") {
    std::vector<SentenceRecord> records{
        {"s1", "", CommunityId::parse("00002")},
        {"s2", "", CommunityId::parse("00001")},
        {"s3", "", CommunityId::parse("00002")},
    };
    Eigen::MatrixXd emb(3, 2);
    emb << 1, 2, // community 2
        5, 6,    // community 1
        3, 4;    // community 2

    CommunityFeatures f = aggregate(records, emb);
    REQUIRE(f.communities.size() == 2);
    CHECK(f.communities[0].code() == "00001");
    CHECK(f.communities[1].code() == "00002");
    CHECK(f.matrix(0, 0) == 5.0);
    CHECK(f.matrix(0, 1) == 6.0);
    CHECK(f.matrix(1, 0) == 2.0); // (1+3)/2
    CHECK(f.matrix(1, 1) == 3.0); // (2+4)/2
    CHECK(f.counts == std::vector<std::int64_t>{1, 2});
    CHECK(f.count_of(CommunityId::parse("2")) == 2);
    CHECK(f.count_of(CommunityId::parse("7")) == 0);
}

TEST_CASE("singleton community keeps its embedding") {
    std::vector<SentenceRecord> records{{"s1", "", CommunityId::parse("42")}};
    Eigen::MatrixXd emb(1, 3);
    emb << 1, 2, 3;
    CommunityFeatures f = aggregate(records, emb);
    REQUIRE(f.communities.size() == 1);
    CHECK(f.matrix(0, 0) == 1.0);
    CHECK(f.matrix(0, 2) == 3.0);
    CHECK(f.counts[0] == 1);
}

TEST_CASE("aggregation matches a sequential oracle and conserves mass") {
    RandomCorpus corpus = make_corpus(1000, 8, 10, 101);
    CommunityFeatures f = aggregate(corpus.records, corpus.embeddings);

    // plain per-community accumulation, written independently
    std::map<CommunityId, std::pair<Eigen::VectorXd, long>> oracle;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        auto it = oracle.find(corpus.records[i].community);
        if (it == oracle.end())
            oracle.emplace(corpus.records[i].community,
                           std::make_pair(corpus.embeddings.row(static_cast<Eigen::Index>(i))
                                              .transpose()
                                              .eval(),
                                          1L));
        else {
            it->second.first += corpus.embeddings.row(static_cast<Eigen::Index>(i)).transpose();
            it->second.second += 1;
        }
    }
    REQUIRE(oracle.size() == f.communities.size());
    std::size_t row = 0;
    for (const auto& [id, acc] : oracle) {
        CHECK(f.communities[row] == id);
        const Eigen::VectorXd mean = acc.first / static_cast<double>(acc.second);
        CHECK((f.matrix.row(static_cast<Eigen::Index>(row)).transpose() - mean)
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
        ++row;
    }

    // mass conservation: sum_j count_j * row_j == column sums of embeddings
    Eigen::RowVectorXd weighted = Eigen::RowVectorXd::Zero(8);
    for (std::size_t j = 0; j < f.communities.size(); ++j)
        weighted += static_cast<double>(f.counts[j]) * f.matrix.row(static_cast<Eigen::Index>(j));
    const Eigen::RowVectorXd total = corpus.embeddings.colwise().sum();
    CHECK((weighted - total).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + total.cwiseAbs().maxCoeff()));
}

TEST_CASE("aggregation is bit-identical for any worker count") {
    RandomCorpus corpus = make_corpus(5000, 6, 25, 313);
    CommunityFeatures one = aggregate(corpus.records, corpus.embeddings, 1);
    for (const int workers : {4, 16}) {
        CommunityFeatures w = aggregate(corpus.records, corpus.embeddings, workers);
        REQUIRE(w.communities == one.communities);
        CHECK(w.counts == one.counts);
        CHECK(std::memcmp(w.matrix.data(), one.matrix.data(),
                          sizeof(double) * static_cast<std::size_t>(one.matrix.size())) == 0);
    }
}

TEST_CASE("record shuffling leaves the aggregate unchanged up to rounding") {
    RandomCorpus corpus = make_corpus(400, 5, 8, 77);
    CommunityFeatures base = aggregate(corpus.records, corpus.embeddings);

    std::vector<std::size_t> perm(corpus.records.size());
    std::iota(perm.begin(), perm.end(), 0);
    SplitMix64 rng(78);
    rng.shuffle(perm);
    std::vector<SentenceRecord> shuffled_records;
    Eigen::MatrixXd shuffled_emb(corpus.embeddings.rows(), corpus.embeddings.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        shuffled_records.push_back(corpus.records[perm[i]]);
        shuffled_emb.row(static_cast<Eigen::Index>(i)) =
            corpus.embeddings.row(static_cast<Eigen::Index>(perm[i]));
    }
    CommunityFeatures after = aggregate(shuffled_records, shuffled_emb);
    REQUIRE(after.communities == base.communities);
    CHECK(after.counts == base.counts);
    CHECK((after.matrix - base.matrix).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("aggregation rejects misaligned inputs and empty corpora") {
    std::vector<SentenceRecord> records{{"s1", "", CommunityId::parse("1")}};
    CHECK_THROWS_AS(aggregate(records, Eigen::MatrixXd::Zero(2, 3)), FatalError);
    CHECK_THROWS_AS(aggregate({}, Eigen::MatrixXd::Zero(0, 3)), FatalError);
}

TEST_CASE("minimum sentence filter") {
    RandomCorpus corpus = make_corpus(60, 3, 4, 5);
    CommunityFeatures f = aggregate(corpus.records, corpus.embeddings);

    CommunityFeatures identity = min_count_filter(f, 1);
    CHECK(identity.communities == f.communities);
    CHECK(std::memcmp(identity.matrix.data(), f.matrix.data(),
                      sizeof(double) * static_cast<std::size_t>(f.matrix.size())) == 0);

    // construct counts {a:5, b:2} by hand
    CommunityFeatures two;
    two.communities = {CommunityId::parse("1"), CommunityId::parse("2")};
    two.matrix = Eigen::MatrixXd::Ones(2, 2);
    two.counts = {5, 2};
    CommunityFeatures kept = min_count_filter(two, 3);
    REQUIRE(kept.communities.size() == 1);
    CHECK(kept.communities[0].code() == "00001");
    CHECK(kept.counts == std::vector<std::int64_t>{5});

    CommunityFeatures lone;
    lone.communities = {CommunityId::parse("1")};
    lone.matrix = Eigen::MatrixXd::Ones(1, 2);
    lone.counts = {1};
    CHECK_THROWS_AS(min_count_filter(lone, 2), FatalError);
}

TEST_CASE("one-pass embed_and_aggregate equals the two-pass path bit for bit") {
    SplitMix64 rng(900);
    std::vector<SentenceRecord> records;
    for (int i = 0; i < 4000; ++i) {
        std::string text;
        const int len = 1 + static_cast<int>(rng.next_below(7));
        for (int t = 0; t < len; ++t)
            text += (t ? " w" : "w") + std::to_string(rng.next_below(60));
        const auto c = 1 + rng.next_below(12);
        records.push_back({"s" + std::to_string(i), text,
                           CommunityId::parse(std::to_string(c))});
    }
    Tokenizer tok;
    HashingEmbedder h(10, 21);

    CorpusEmbedding emb = embed_corpus(records, tok, h, 1);
    CommunityFeatures two_pass = aggregate(records, emb.matrix, 1);

    for (const int workers : {1, 4, 16}) {
        EmbedAggregateResult one_pass = embed_and_aggregate(records, tok, h, workers);
        CHECK(one_pass.sentence_count == records.size());
        CHECK(one_pass.oov_count == emb.oov_count);
        REQUIRE(one_pass.features.communities == two_pass.communities);
        CHECK(one_pass.features.counts == two_pass.counts);
        CHECK(std::memcmp(one_pass.features.matrix.data(), two_pass.matrix.data(),
                          sizeof(double) *
                              static_cast<std::size_t>(two_pass.matrix.size())) == 0);
    }
}

TEST_CASE("feature files round trip bit exactly") {
    TempDir dir("features");
    RandomCorpus corpus = make_corpus(200, 4, 6, 55);
    CommunityFeatures f = aggregate(corpus.records, corpus.embeddings);

    save_features(f, dir.file("f.bin"), dir.file("f.csv"));
    CommunityFeatures back = load_features(dir.file("f.bin"), dir.file("f.csv"));
    REQUIRE(back.communities == f.communities);
    CHECK(back.counts == f.counts);
    CHECK(std::memcmp(back.matrix.data(), f.matrix.data(),
                      sizeof(double) * static_cast<std::size_t>(f.matrix.size())) == 0);
}

TEST_CASE("feature loader validates the index") {
    TempDir dir("features_bad");
    save_features(
        [] {
            CommunityFeatures f;
            f.communities = {CommunityId::parse("1"), CommunityId::parse("2")};
            f.matrix = Eigen::MatrixXd::Ones(2, 2);
            f.counts = {3, 4};
            return f;
        }(),
        dir.file("f.bin"), dir.file("f.csv"));

    // out-of-order index
    testutil::write_file(dir.file("bad_order.csv"), "fips,count\n00002,4\n00001,3\n");
    CHECK_THROWS_AS(load_features(dir.file("f.bin"), dir.file("bad_order.csv")), FatalError);

    // row count mismatch
    testutil::write_file(dir.file("bad_rows.csv"), "fips,count\n00001,3\n");
    CHECK_THROWS_AS(load_features(dir.file("f.bin"), dir.file("bad_rows.csv")), FatalError);

    // non-positive count
    testutil::write_file(dir.file("bad_count.csv"), "fips,count\n00001,0\n00002,4\n");
    CHECK_THROWS_AS(load_features(dir.file("f.bin"), dir.file("bad_count.csv")), FatalError);
}
