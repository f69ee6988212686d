#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "geoling/types.hpp"

namespace geoling {

/// Whitespace tokenizer with URL/mention replacement, lowercasing and edge
/// punctuation stripping. Each token is normalized to a fixed point, so
/// tokenizing the rejoined output reproduces the same tokens.
struct Tokenizer {
    bool lowercase = true;
    std::string url_token = "<url>";
    std::string mention_token = "<user>";
    bool strip_punctuation = true;

    std::vector<std::string> tokenize(std::string_view text) const;
};

/// Pretrained word/bigram vectors, word2vec text format: first line "V D",
/// then "key v1 ... vD" per line. Bigram keys join two tokens with an
/// underscore. Plain text or gzip.
struct VectorLexicon {
    int dimension = 0;
    std::unordered_map<std::string, EmbeddingVector> entries;

    static VectorLexicon load(const std::string& path);
};

/// Mean of the lexicon vectors of all present unigrams and adjacent-pair
/// bigrams. No hit at all -> zero vector and oov = true.
EmbeddingVector embed_sentence(const std::vector<std::string>& tokens,
                               const VectorLexicon& lexicon, bool& oov);

class SentenceEmbedder {
  public:
    virtual ~SentenceEmbedder() = default;
    virtual int dimension() const = 0;
    virtual EmbeddingVector embed(const std::vector<std::string>& tokens, bool& oov) const = 0;
};

class LexiconEmbedder final : public SentenceEmbedder {
  public:
    explicit LexiconEmbedder(VectorLexicon lexicon) : lexicon_(std::move(lexicon)) {}
    int dimension() const override { return lexicon_.dimension; }
    EmbeddingVector embed(const std::vector<std::string>& tokens, bool& oov) const override {
        return embed_sentence(tokens, lexicon_, oov);
    }
    const VectorLexicon& lexicon() const { return lexicon_; }

  private:
    VectorLexicon lexicon_;
};

/// Test/no-model embedder: every token and bigram maps to a seeded
/// pseudo-random unit vector, composed with the same unigram+bigram mean as
/// the lexicon path. Deterministic across runs, platforms and thread counts.
class HashingEmbedder final : public SentenceEmbedder {
  public:
    HashingEmbedder(int dimension, std::uint64_t seed);
    int dimension() const override { return dim_; }
    EmbeddingVector embed(const std::vector<std::string>& tokens, bool& oov) const override;
    EmbeddingVector token_vector(std::string_view token) const;

  private:
    int dim_;
    std::uint64_t seed_;
};

struct CorpusEmbedding {
    Eigen::MatrixXd matrix; // S x D, row i = embedding of record i
    std::size_t oov_count = 0;
};

/// Row-parallel embedding of a whole corpus; row order equals record order
/// for any worker count.
CorpusEmbedding embed_corpus(const std::vector<SentenceRecord>& records,
                             const Tokenizer& tokenizer, const SentenceEmbedder& embedder,
                             int workers = 1);

} // namespace geoling
