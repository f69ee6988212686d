#include "geoling/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "geoling/csv.hpp"
#include "geoling/error.hpp"
#include "geoling/matrix_io.hpp"
#include "geoling/parallel.hpp"
#include "geoling/rng.hpp"

namespace geoling {

SubsamplePlan subsample(std::size_t corpus_size, std::size_t q, std::uint64_t seed) {
    if (q == 0 || q > corpus_size)
        throw FatalError("subsample size " + std::to_string(q) + " not in [1, " +
                         std::to_string(corpus_size) + "]");
    SubsamplePlan plan;
    plan.q = q;
    plan.seed = seed;

    // Floyd's algorithm: O(Q) memory, uniform without replacement.
    SplitMix64 rng(seed);
    std::set<std::size_t> chosen;
    for (std::size_t i = corpus_size - q; i < corpus_size; ++i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
        if (!chosen.insert(j).second) chosen.insert(i);
    }
    plan.selected_rows.assign(chosen.begin(), chosen.end());
    return plan;
}

namespace {

struct NormalizedPoints {
    Eigen::MatrixXd rows;             // unit rows; zero rows left as zero
    std::vector<std::size_t> usable;  // indices with nonzero norm
    std::vector<bool> is_usable;
};

NormalizedPoints normalize_points(const Eigen::MatrixXd& points) {
    NormalizedPoints np;
    np.rows = points;
    np.is_usable.assign(static_cast<std::size_t>(points.rows()), false);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const double norm = np.rows.row(i).norm();
        if (norm > 1e-12) {
            np.rows.row(i) /= norm;
            np.is_usable[static_cast<std::size_t>(i)] = true;
            np.usable.push_back(static_cast<std::size_t>(i));
        } else {
            np.rows.row(i).setZero();
        }
    }
    return np;
}

// k-means++ style seeding on cosine distance: the first centroid is uniform
// over usable points, each next point is drawn with probability proportional
// to (1 - best cosine)^2.
Eigen::MatrixXd seed_centroids(const NormalizedPoints& np, int m, SplitMix64& rng) {
    const Eigen::Index d = np.rows.cols();
    Eigen::MatrixXd centroids(m, d);
    std::vector<double> best_cos(np.usable.size(), -1.0);

    const std::size_t first = np.usable[static_cast<std::size_t>(rng.next_below(np.usable.size()))];
    centroids.row(0) = np.rows.row(static_cast<Eigen::Index>(first));

    for (int c = 1; c < m; ++c) {
        std::vector<double> weight(np.usable.size());
        double total = 0.0;
        for (std::size_t i = 0; i < np.usable.size(); ++i) {
            const double cos = np.rows.row(static_cast<Eigen::Index>(np.usable[i]))
                                   .dot(centroids.row(c - 1));
            best_cos[i] = std::max(best_cos[i], cos);
            const double dist = 1.0 - best_cos[i];
            weight[i] = dist * dist;
            total += weight[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double u = rng.next_double() * total;
            double acc = 0.0;
            pick = np.usable.size() - 1;
            for (std::size_t i = 0; i < weight.size(); ++i) {
                acc += weight[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
        } else {
            // All remaining points coincide with a chosen centroid; fall back
            // to a uniform draw.
            pick = static_cast<std::size_t>(rng.next_below(np.usable.size()));
        }
        centroids.row(c) = np.rows.row(static_cast<Eigen::Index>(np.usable[pick]));
    }
    return centroids;
}

struct AssignStats {
    std::size_t changes = 0;
    double cosine_sum = 0.0;
};

// Max-cosine assignment over all usable points, ties to the smaller cluster
// id. Chunk-parallel; per-chunk stats merged in chunk order.
AssignStats assign_points(const NormalizedPoints& np, const Eigen::MatrixXd& centroids,
                          std::vector<int>& assignment, int workers) {
    const std::size_t n = np.usable.size();
    const std::size_t n_chunks = (n + kDefaultChunk - 1) / kDefaultChunk;
    std::vector<AssignStats> per_chunk(n_chunks);

    for_each_chunk(n, kDefaultChunk, workers,
                   [&](std::size_t chunk, std::size_t begin, std::size_t end) {
                       for (std::size_t u = begin; u < end; ++u) {
                           const Eigen::Index row = static_cast<Eigen::Index>(np.usable[u]);
                           const Eigen::VectorXd sims = centroids * np.rows.row(row).transpose();
                           int best = 0;
                           double best_sim = sims[0];
                           for (int c = 1; c < sims.size(); ++c) {
                               if (sims[c] > best_sim) {
                                   best_sim = sims[c];
                                   best = c;
                               }
                           }
                           if (assignment[static_cast<std::size_t>(row)] != best) {
                               assignment[static_cast<std::size_t>(row)] = best;
                               ++per_chunk[chunk].changes;
                           }
                           per_chunk[chunk].cosine_sum += best_sim;
                       }
                   });

    AssignStats total;
    for (const auto& s : per_chunk) {
        total.changes += s.changes;
        total.cosine_sum += s.cosine_sum;
    }
    return total;
}

// Normalized member means, accumulated per chunk and merged in chunk order.
void update_centroids(const NormalizedPoints& np, const std::vector<int>& assignment, int m,
                      Eigen::MatrixXd& centroids, int workers) {
    const Eigen::Index d = np.rows.cols();
    const std::size_t n = np.usable.size();
    const std::size_t n_chunks = (n + kDefaultChunk - 1) / kDefaultChunk;
    std::vector<Eigen::MatrixXd> sums(n_chunks);
    std::vector<std::vector<std::int64_t>> counts(n_chunks);

    for_each_chunk(n, kDefaultChunk, workers,
                   [&](std::size_t chunk, std::size_t begin, std::size_t end) {
                       sums[chunk] = Eigen::MatrixXd::Zero(m, d);
                       counts[chunk].assign(static_cast<std::size_t>(m), 0);
                       for (std::size_t u = begin; u < end; ++u) {
                           const std::size_t row = np.usable[u];
                           const int c = assignment[row];
                           sums[chunk].row(c) += np.rows.row(static_cast<Eigen::Index>(row));
                           counts[chunk][static_cast<std::size_t>(c)] += 1;
                       }
                   });

    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(m, d);
    std::vector<std::int64_t> total_count(static_cast<std::size_t>(m), 0);
    for (std::size_t chunk = 0; chunk < n_chunks; ++chunk) {
        total += sums[chunk];
        for (int c = 0; c < m; ++c) total_count[static_cast<std::size_t>(c)] += counts[chunk][static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < m; ++c) {
        if (total_count[static_cast<std::size_t>(c)] == 0) continue;
        const double norm = total.row(c).norm();
        if (norm > 1e-12) centroids.row(c) = total.row(c) / norm;
    }
}

// Reseeds each empty cluster from the usable point with the lowest cosine to
// its assigned centroid; the stolen point becomes the new centroid, which
// keeps the objective non-decreasing.
void reseed_empty_clusters(const NormalizedPoints& np, std::vector<int>& assignment, int m,
                           Eigen::MatrixXd& centroids) {
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(m), 0);
    for (const auto row : np.usable) sizes[static_cast<std::size_t>(assignment[row])] += 1;

    for (int c = 0; c < m; ++c) {
        if (sizes[static_cast<std::size_t>(c)] > 0) continue;
        std::size_t worst_row = np.usable[0];
        double worst_cos = 2.0;
        for (const auto row : np.usable) {
            const int current = assignment[row];
            // Do not steal a point that is itself the last member of its cluster.
            if (sizes[static_cast<std::size_t>(current)] <= 1) continue;
            const double cos = np.rows.row(static_cast<Eigen::Index>(row)).dot(centroids.row(current));
            if (cos < worst_cos) {
                worst_cos = cos;
                worst_row = row;
            }
        }
        sizes[static_cast<std::size_t>(assignment[worst_row])] -= 1;
        assignment[worst_row] = c;
        sizes[static_cast<std::size_t>(c)] = 1;
        centroids.row(c) = np.rows.row(static_cast<Eigen::Index>(worst_row));
    }
}

} // namespace

ClusterModel kmeans_cosine(const Eigen::MatrixXd& points, int m, std::uint64_t seed,
                           const KMeansOptions& options) {
    if (m < 1) throw FatalError("cluster count must be at least 1");
    if (!all_finite(points)) throw FatalError("clustering input is not finite");

    NormalizedPoints np = normalize_points(points);
    if (np.usable.size() < static_cast<std::size_t>(m))
        throw FatalError("cluster count " + std::to_string(m) + " exceeds usable rows " +
                         std::to_string(np.usable.size()));

    ClusterModel model;
    model.m = m;
    model.seed = seed;
    model.assignment.assign(static_cast<std::size_t>(points.rows()), kUnclustered);

    SplitMix64 rng(seed);
    model.centroids = seed_centroids(np, m, rng);

    const double usable_count = static_cast<double>(np.usable.size());
    bool converged = false;
    for (int iter = 0; iter < options.max_iter; ++iter) {
        const AssignStats stats =
            assign_points(np, model.centroids, model.assignment, options.workers);
        const double objective = stats.cosine_sum / usable_count;
        if (!model.objective_history.empty() &&
            objective < model.objective_history.back() - 1e-12)
            throw std::logic_error("spherical k-means objective decreased");
        model.objective_history.push_back(objective);
        model.iterations = iter + 1;

        if (static_cast<double>(stats.changes) / usable_count <= options.tol) {
            converged = true;
            break;
        }
        reseed_empty_clusters(np, model.assignment, m, model.centroids);
        update_centroids(np, model.assignment, m, model.centroids, options.workers);
    }
    if (!converged) {
        // Align the assignment with the final centroids.
        const AssignStats stats =
            assign_points(np, model.centroids, model.assignment, options.workers);
        const double objective = stats.cosine_sum / usable_count;
        if (!model.objective_history.empty() &&
            objective < model.objective_history.back() - 1e-12)
            throw std::logic_error("spherical k-means objective decreased");
        model.objective_history.push_back(objective);
        ++model.iterations;
    }

    model.sizes.assign(static_cast<std::size_t>(m), 0);
    for (const auto row : np.usable)
        model.sizes[static_cast<std::size_t>(model.assignment[row])] += 1;
    return model;
}

ClusterRanking score_clusters(const ClusterModel& model, const Eigen::MatrixXd& points,
                              const RidgeModel& ridge) {
    if (points.cols() != ridge.dimension)
        throw FatalError("cluster points dimension does not match model dimension");
    if (static_cast<std::size_t>(points.rows()) != model.assignment.size())
        throw FatalError("cluster assignment does not match point rows");

    std::vector<double> score_sum(static_cast<std::size_t>(model.m), 0.0);
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(model.m), 0);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const int c = model.assignment[static_cast<std::size_t>(i)];
        if (c == kUnclustered) continue;
        score_sum[static_cast<std::size_t>(c)] += predict_sentence(points.row(i).transpose(), ridge);
        sizes[static_cast<std::size_t>(c)] += 1;
    }

    ClusterRanking ranking;
    for (int c = 0; c < model.m; ++c) {
        if (sizes[static_cast<std::size_t>(c)] == 0) {
            ranking.empty_clusters.push_back(c);
            continue;
        }
        ranking.ranked.push_back(ClusterScore{
            c, sizes[static_cast<std::size_t>(c)],
            score_sum[static_cast<std::size_t>(c)] / static_cast<double>(sizes[static_cast<std::size_t>(c)])});
    }
    if (ranking.ranked.empty()) throw FatalError("all clusters are empty");

    std::sort(ranking.ranked.begin(), ranking.ranked.end(),
              [](const ClusterScore& a, const ClusterScore& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.cluster < b.cluster;
              });
    return ranking;
}

nlohmann::json ClusterRanking::to_json() const {
    nlohmann::json ranked_json = nlohmann::json::array();
    for (std::size_t i = 0; i < ranked.size(); ++i)
        ranked_json.push_back({{"rank", i + 1},
                               {"cluster", ranked[i].cluster},
                               {"size", ranked[i].size},
                               {"score", ranked[i].score}});
    return nlohmann::json{{"ranked", ranked_json}, {"empty_clusters", empty_clusters}};
}

void ClusterModel::save(const std::string& centroid_path, const std::string& assignment_csv_path,
                        const std::vector<std::size_t>& corpus_rows) const {
    if (corpus_rows.size() != assignment.size())
        throw FatalError("corpus row list does not match assignment length");
    save_matrix(centroid_path, centroids);
    std::ofstream out(assignment_csv_path);
    if (!out) throw FatalError("cannot write assignments: " + assignment_csv_path);
    out << "corpus_row,cluster\n";
    for (std::size_t i = 0; i < assignment.size(); ++i)
        out << corpus_rows[i] << ',' << assignment[i] << '\n';
}

ClusterModel ClusterModel::load(const std::string& centroid_path,
                                const std::string& assignment_csv_path,
                                std::vector<std::size_t>* corpus_rows) {
    ClusterModel model;
    model.centroids = load_matrix(centroid_path);
    model.m = static_cast<int>(model.centroids.rows());

    std::ifstream in(assignment_csv_path);
    if (!in) throw FatalError("cannot read assignments: " + assignment_csv_path);
    csv::Reader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields))
        throw FatalError("assignments file missing header: " + assignment_csv_path);
    if (corpus_rows != nullptr) corpus_rows->clear();
    while (reader.next(fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() < 2)
            throw FatalError("malformed assignment row in " + assignment_csv_path);
        if (corpus_rows != nullptr)
            corpus_rows->push_back(static_cast<std::size_t>(std::stoull(fields[0])));
        const int c = std::stoi(fields[1]);
        if (c != kUnclustered && (c < 0 || c >= model.m))
            throw FatalError("assignment cluster id out of range in " + assignment_csv_path);
        model.assignment.push_back(c);
    }
    model.sizes.assign(static_cast<std::size_t>(model.m), 0);
    for (const auto c : model.assignment) {
        if (c != kUnclustered) model.sizes[static_cast<std::size_t>(c)] += 1;
    }
    return model;
}

const std::unordered_set<std::string>& default_stopwords() {
    static const std::unordered_set<std::string> words = {
        "a",       "about",  "above", "after",  "again",   "against", "all",     "am",
        "an",      "and",    "any",   "are",    "aren't",  "as",      "at",      "be",
        "because", "been",   "before", "being", "below",   "between", "both",    "but",
        "by",      "can",    "can't", "cannot", "could",   "couldn't", "did",    "didn't",
        "do",      "does",   "doesn't", "doing", "don't",  "down",    "during",  "each",
        "few",     "for",    "from",  "further", "had",    "hadn't",  "has",     "hasn't",
        "have",    "haven't", "having", "he",    "he'd",   "he'll",   "he's",    "her",
        "here",    "here's", "hers",  "herself", "him",    "himself", "his",     "how",
        "how's",   "i",      "i'd",   "i'll",   "i'm",     "i've",    "if",      "in",
        "into",    "is",     "isn't", "it",     "it's",    "its",     "itself",  "let's",
        "me",      "more",   "most",  "mustn't", "my",     "myself",  "no",      "nor",
        "not",     "of",     "off",   "on",     "once",    "only",    "or",      "other",
        "ought",   "our",    "ours",  "ourselves", "out",  "over",    "own",     "same",
        "shan't",  "she",    "she'd", "she'll", "she's",   "should",  "shouldn't", "so",
        "some",    "such",   "than",  "that",   "that's",  "the",     "their",   "theirs",
        "them",    "themselves", "then", "there", "there's", "these", "they",    "they'd",
        "they'll", "they're", "they've", "this", "those",  "through", "to",      "too",
        "under",   "until",  "up",    "very",   "was",     "wasn't",  "we",      "we'd",
        "we'll",   "we're",  "we've", "were",   "weren't", "what",    "what's",  "when",
        "when's",  "where",  "where's", "which", "while",  "who",     "who's",   "whom",
        "why",     "why's",  "with",  "won't",  "would",   "wouldn't", "you",    "you'd",
        "you'll",  "you're", "you've", "your",  "yours",   "yourself", "yourselves"};
    return words;
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot read stopword file: " + path);
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) words.insert(line);
    }
    return words;
}

std::vector<TermCount> top_terms(int cluster_id, const std::vector<SentenceRecord>& records,
                                 const std::vector<int>& assignment, std::size_t k,
                                 const Tokenizer& tokenizer,
                                 const std::unordered_set<std::string>& stopwords) {
    if (records.size() != assignment.size())
        throw FatalError("top_terms: records and assignment length mismatch");

    std::map<std::string, long> counts;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (assignment[i] != cluster_id) continue;
        for (const auto& token : tokenizer.tokenize(records[i].text)) {
            if (stopwords.contains(token)) continue;
            if (token == tokenizer.url_token || token == tokenizer.mention_token) continue;
            counts[token] += 1;
        }
    }

    std::vector<TermCount> terms;
    terms.reserve(counts.size());
    for (const auto& [term, count] : counts) terms.push_back(TermCount{term, count});
    std::sort(terms.begin(), terms.end(), [](const TermCount& a, const TermCount& b) {
        if (a.count != b.count) return a.count > b.count;
        return a.term < b.term;
    });
    if (terms.size() > k) terms.resize(k);
    return terms;
}

} // namespace geoling
