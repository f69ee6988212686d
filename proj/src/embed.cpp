#include "geoling/embed.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "geoling/error.hpp"
#include "geoling/parallel.hpp"
#include "geoling/rng.hpp"

namespace geoling {

namespace {

bool has_prefix_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
    }
    return true;
}

bool looks_like_url(std::string_view t) {
    return has_prefix_ci(t, "http://") || has_prefix_ci(t, "https://") || has_prefix_ci(t, "www.");
}

bool looks_like_mention(std::string_view t) { return t.size() >= 2 && t[0] == '@'; }

} // namespace

std::vector<std::string> Tokenizer::tokenize(std::string_view text) const {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i == start) break;
        std::string token(text.substr(start, i - start));

        // Normalize to a fixed point: each pass either maps into the
        // placeholder set, or lowercases/shrinks the token. This is what
        // makes tokenize(join(tokenize(s))) == tokenize(s).
        for (;;) {
            if (token == url_token || token == mention_token) break;
            if (looks_like_url(token)) {
                token = url_token;
                break;
            }
            if (looks_like_mention(token)) {
                token = mention_token;
                break;
            }
            std::string next = token;
            if (lowercase) {
                for (char& c : next) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            }
            if (strip_punctuation) {
                std::size_t b = 0, e = next.size();
                while (b < e && std::ispunct(static_cast<unsigned char>(next[b]))) ++b;
                while (e > b && std::ispunct(static_cast<unsigned char>(next[e - 1]))) --e;
                next = next.substr(b, e - b);
            }
            if (next == token) break;
            token = std::move(next);
        }
        if (!token.empty()) tokens.push_back(std::move(token));
    }
    return tokens;
}

namespace {

// Line source that reads plain or gzip files through one interface.
class LineSource {
  public:
    explicit LineSource(const std::string& path) {
        gz_ = gzopen(path.c_str(), "rb");
        if (gz_ == nullptr) throw FatalError("cannot read lexicon file: " + path);
    }
    ~LineSource() {
        if (gz_ != nullptr) gzclose(gz_);
    }
    LineSource(const LineSource&) = delete;
    LineSource& operator=(const LineSource&) = delete;

    bool getline(std::string& out) {
        out.clear();
        char buf[4096];
        bool got_any = false;
        for (;;) {
            if (gzgets(gz_, buf, sizeof(buf)) == nullptr) return got_any;
            got_any = true;
            out += buf;
            if (!out.empty() && out.back() == '\n') {
                out.pop_back();
                if (!out.empty() && out.back() == '\r') out.pop_back();
                return true;
            }
        }
    }

  private:
    gzFile gz_ = nullptr;
};

} // namespace

VectorLexicon VectorLexicon::load(const std::string& path) {
    LineSource source(path);
    std::string line;
    if (!source.getline(line)) throw FatalError("empty lexicon file: " + path);

    std::istringstream header(line);
    long long vocab = 0;
    int dim = 0;
    if (!(header >> vocab >> dim) || vocab <= 0 || dim <= 0)
        throw FatalError("lexicon header must be 'V D': " + path);

    VectorLexicon lexicon;
    lexicon.dimension = dim;
    lexicon.entries.reserve(static_cast<std::size_t>(vocab));
    std::string key;
    long long count = 0;
    while (source.getline(line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        if (!(row >> key)) continue;
        EmbeddingVector vec(dim);
        for (int d = 0; d < dim; ++d) {
            if (!(row >> vec[d]) || !std::isfinite(vec[d]))
                throw FatalError("malformed lexicon row for '" + key + "' in " + path);
        }
        lexicon.entries[key] = std::move(vec);
        ++count;
    }
    if (count != vocab)
        throw FatalError("lexicon row count " + std::to_string(count) + " does not match header " +
                         std::to_string(vocab) + ": " + path);
    return lexicon;
}

EmbeddingVector embed_sentence(const std::vector<std::string>& tokens,
                               const VectorLexicon& lexicon, bool& oov) {
    if (lexicon.entries.empty()) throw FatalError("lexicon is empty");
    EmbeddingVector sum = EmbeddingVector::Zero(lexicon.dimension);
    std::size_t hits = 0;
    for (const auto& t : tokens) {
        const auto it = lexicon.entries.find(t);
        if (it != lexicon.entries.end()) {
            sum += it->second;
            ++hits;
        }
    }
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        const auto it = lexicon.entries.find(tokens[i] + "_" + tokens[i + 1]);
        if (it != lexicon.entries.end()) {
            sum += it->second;
            ++hits;
        }
    }
    oov = hits == 0;
    if (hits == 0) return sum;
    return sum / static_cast<double>(hits);
}

HashingEmbedder::HashingEmbedder(int dimension, std::uint64_t seed)
    : dim_(dimension), seed_(seed) {
    if (dimension <= 0) throw FatalError("embedding dimension must be positive");
}

EmbeddingVector HashingEmbedder::token_vector(std::string_view token) const {
    SplitMix64 rng(mix_seed(seed_, fnv1a64(token)));
    EmbeddingVector v(dim_);
    for (int d = 0; d < dim_; ++d) v[d] = rng.next_normal();
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    return v;
}

EmbeddingVector HashingEmbedder::embed(const std::vector<std::string>& tokens, bool& oov) const {
    if (tokens.empty()) {
        oov = true;
        return EmbeddingVector::Zero(dim_);
    }
    oov = false;
    EmbeddingVector sum = EmbeddingVector::Zero(dim_);
    std::size_t terms = 0;
    for (const auto& t : tokens) {
        sum += token_vector(t);
        ++terms;
    }
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        sum += token_vector(tokens[i] + "_" + tokens[i + 1]);
        ++terms;
    }
    return sum / static_cast<double>(terms);
}

CorpusEmbedding embed_corpus(const std::vector<SentenceRecord>& records,
                             const Tokenizer& tokenizer, const SentenceEmbedder& embedder,
                             int workers) {
    CorpusEmbedding result;
    result.matrix.resize(static_cast<Eigen::Index>(records.size()), embedder.dimension());
    if (records.empty()) return result;

    std::vector<std::size_t> oov_per_chunk((records.size() + kDefaultChunk - 1) / kDefaultChunk, 0);
    for_each_chunk(records.size(), kDefaultChunk, workers,
                   [&](std::size_t chunk, std::size_t begin, std::size_t end) {
                       for (std::size_t i = begin; i < end; ++i) {
                           bool oov = false;
                           result.matrix.row(static_cast<Eigen::Index>(i)) =
                               embedder.embed(tokenizer.tokenize(records[i].text), oov);
                           if (oov) ++oov_per_chunk[chunk];
                       }
                   });
    for (const auto n : oov_per_chunk) result.oov_count += n;
    return result;
}

} // namespace geoling
