#include "geoling/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "geoling/csv.hpp"
#include "geoling/error.hpp"
#include "geoling/ingest.hpp"
#include "geoling/matrix_io.hpp"
#include "geoling/rng.hpp"

namespace geoling {

namespace fs = std::filesystem;
using nlohmann::json;

namespace artifacts {

std::string sentences(const std::string& workdir) { return workdir + "/sentences.jsonl"; }
std::string targets(const std::string& workdir, const std::string& target_name) {
    return workdir + "/targets_" + target_name + ".json";
}
std::string features_matrix(const std::string& workdir) { return workdir + "/features.bin"; }
std::string features_index(const std::string& workdir) { return workdir + "/features_index.csv"; }
std::string features_meta(const std::string& workdir) { return workdir + "/features_meta.json"; }
std::string model(const std::string& workdir, const std::string& target_name) {
    return workdir + "/model_" + target_name + ".json";
}
std::string evaluation(const std::string& workdir, const std::string& target_name) {
    return workdir + "/eval_" + target_name + ".json";
}
std::string confusion_csv(const std::string& workdir, const std::string& target_name) {
    return workdir + "/confusion_" + target_name + ".csv";
}
std::string oof_csv(const std::string& workdir, const std::string& target_name) {
    return workdir + "/oof_" + target_name + ".csv";
}
std::string cluster_centroids(const std::string& workdir) {
    return workdir + "/clusters_centroids.bin";
}
std::string cluster_assignments(const std::string& workdir) {
    return workdir + "/clusters_assignments.csv";
}
std::string cluster_meta(const std::string& workdir) { return workdir + "/clusters_meta.json"; }
std::string ranking(const std::string& workdir, const std::string& target_name) {
    return workdir + "/ranking_" + target_name + ".json";
}
std::string terms_csv(const std::string& workdir, const std::string& target_name, int cluster) {
    return workdir + "/terms_" + target_name + "_cluster" + std::to_string(cluster) + ".csv";
}

} // namespace artifacts

namespace {

// Shortest-exact decimal form of a double: %.17g round-trips through strtod.
std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void ensure_workdir(const PipelineConfig& config) {
    std::error_code ec;
    fs::create_directories(config.workdir, ec);
    if (ec) throw FatalError("cannot create workdir " + config.workdir + ": " + ec.message());
}

void require_file(const std::string& path, const std::string& producer) {
    if (!fs::exists(path))
        throw FatalError("missing " + path + "; run `" + producer + "` first");
}

InputMode parse_mode(const PipelineConfig& config) {
    return config.input_mode == "coords" ? InputMode::Coords : InputMode::Fips;
}

std::unique_ptr<SentenceEmbedder> make_embedder(const PipelineConfig& config) {
    if (config.embedder == "lexicon") {
        if (config.lexicon_path.empty())
            throw FatalError("embedder=lexicon requires a lexicon path");
        return std::make_unique<LexiconEmbedder>(VectorLexicon::load(config.lexicon_path));
    }
    return std::make_unique<HashingEmbedder>(config.embed_dim, config.seed);
}

// Identifies the embedding configuration so cached cluster artifacts are
// only reused when they were produced by the same embedding.
json embedder_fingerprint(const PipelineConfig& config) {
    if (config.embedder == "lexicon")
        return json{{"kind", "lexicon"}, {"path", config.lexicon_path}};
    return json{{"kind", "hashing"}, {"dim", config.embed_dim}, {"seed", config.seed}};
}

void write_canonical_sentences(const std::string& path,
                               const std::vector<SentenceRecord>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FatalError("cannot write " + path);
    for (const auto& r : records) {
        json j{{"id", r.id}, {"text", r.text}, {"fips", r.community.code()}};
        out << j.dump() << '\n';
    }
    if (!out) throw FatalError("failed while writing " + path);
}

std::vector<SentenceRecord> load_canonical_sentences(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FatalError("cannot open sentence store " + path);
    std::vector<SentenceRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("text") ||
            !j.contains("fips") || !j["id"].is_string() || !j["text"].is_string() ||
            !j["fips"].is_string())
            throw FatalError("sentence store corrupt at " + path + ":" +
                             std::to_string(lineno));
        records.push_back({j["id"].get<std::string>(), j["text"].get<std::string>(),
                           CommunityId::parse(j["fips"].get<std::string>())});
    }
    return records;
}

TargetTable load_targets_from_files(const PipelineConfig& config) {
    if (!config.target_years.empty() &&
        config.target_years.size() != config.target_files.size())
        throw FatalError("target_years must list one year per target file");
    std::vector<YearlyTargetFile> files;
    files.reserve(config.target_files.size());
    for (std::size_t i = 0; i < config.target_files.size(); ++i) {
        int year = 0;
        if (!config.target_years.empty()) {
            year = config.target_years[i];
        } else {
            auto parsed = year_from_filename(config.target_files[i]);
            if (!parsed)
                throw FatalError("cannot infer year from filename " + config.target_files[i] +
                                 "; pass target_years explicitly");
            year = *parsed;
        }
        files.push_back(
            YearlyTargetFile::load_csv(config.target_files[i], config.target_name, year));
    }
    return union_average_targets(files, config.target_unit);
}

// Keeps only the rows of `features` whose community appears in `keep`
// (a sorted subsequence of features.communities).
CommunityFeatures subset_features(const CommunityFeatures& features,
                                  const std::vector<CommunityId>& keep) {
    CommunityFeatures out;
    out.communities = keep;
    out.matrix.resize(static_cast<Eigen::Index>(keep.size()), features.matrix.cols());
    out.counts.resize(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        auto idx = features.index_of(keep[i]);
        if (!idx) throw FatalError("internal: community lost during subsetting");
        out.matrix.row(static_cast<Eigen::Index>(i)) =
            features.matrix.row(static_cast<Eigen::Index>(*idx));
        out.counts[i] = features.counts[*idx];
    }
    return out;
}

TargetTable subset_targets(const TargetTable& targets, const std::vector<CommunityId>& keep) {
    TargetTable out;
    out.target_name = targets.target_name;
    out.unit = targets.unit;
    out.years = targets.years;
    for (const auto& id : keep) out.entries.emplace(id, targets.entries.at(id));
    out.recompute_stats();
    return out;
}

json cluster_cache_key(const PipelineConfig& config, std::size_t corpus_size, std::size_t q,
                       int dimension) {
    return json{{"clusters", config.clusters},
                {"subsample_size", q},
                {"corpus_size", corpus_size},
                {"seed", config.seed},
                {"max_iter", config.kmeans_max_iter},
                {"tol", config.kmeans_tol},
                {"dimension", dimension},
                {"embedder", embedder_fingerprint(config)}};
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FatalError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw FatalError("failed while writing " + path);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FatalError("cannot open " + path);
    json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw FatalError("invalid JSON in " + path);
    return j;
}

} // namespace

IngestSummary cmd_ingest(const PipelineConfig& config) {
    config.validate();
    ensure_workdir(config);
    IngestSummary summary;

    if (!config.sentences_path.empty()) {
        CountyCentroidTable centroids;
        const CountyCentroidTable* centroids_ptr = nullptr;
        if (parse_mode(config) == InputMode::Coords) {
            if (config.centroids_path.empty())
                throw FatalError("input_mode=coords requires a county centroid table");
            centroids = CountyCentroidTable::load_csv(config.centroids_path);
            centroids_ptr = &centroids;
        }
        IngestResult result =
            read_sentences(config.sentences_path, parse_mode(config), centroids_ptr);
        summary.rows_read = result.rows_read;
        summary.rows_dropped = result.rows_dropped;
        summary.records = result.records.size();
        std::set<CommunityId> distinct;
        for (const auto& r : result.records) distinct.insert(r.community);
        summary.communities = distinct.size();
        write_canonical_sentences(artifacts::sentences(config.workdir), result.records);
        summary.wrote_sentences = true;
    }

    if (!config.target_files.empty()) {
        TargetTable table = load_targets_from_files(config);
        table.save(artifacts::targets(config.workdir, config.target_name));
        summary.target_communities = table.entries.size();
        summary.wrote_targets = true;
    }

    if (!summary.wrote_sentences && !summary.wrote_targets)
        throw FatalError("ingest: neither a sentence corpus nor target files were given");
    return summary;
}

EmbedAggregateSummary cmd_embed_aggregate(const PipelineConfig& config) {
    config.validate();
    ensure_workdir(config);
    const std::string store = artifacts::sentences(config.workdir);
    require_file(store, "geoling ingest");
    std::vector<SentenceRecord> records = load_canonical_sentences(store);
    if (records.empty()) throw FatalError("sentence store is empty: " + store);

    Tokenizer tokenizer;
    auto embedder = make_embedder(config);
    EmbedAggregateResult agg =
        embed_and_aggregate(records, tokenizer, *embedder, config.effective_workers());

    const double oov_rate =
        static_cast<double>(agg.oov_count) / static_cast<double>(agg.sentence_count);
    if (oov_rate > 0.9)
        throw FatalError("more than 90% of sentences have no vector coverage; "
                         "the lexicon does not match this corpus");

    EmbedAggregateSummary summary;
    summary.sentences = agg.sentence_count;
    summary.oov = agg.oov_count;
    summary.communities_before = agg.features.communities.size();
    summary.dimension = embedder->dimension();

    CommunityFeatures kept = min_count_filter(agg.features, config.min_sentences);
    summary.communities_after = kept.communities.size();

    save_features(kept, artifacts::features_matrix(config.workdir),
                  artifacts::features_index(config.workdir));
    write_json_file(artifacts::features_meta(config.workdir),
                    json{{"dimension", summary.dimension},
                         {"sentences", summary.sentences},
                         {"oov", summary.oov},
                         {"oov_rate", oov_rate},
                         {"communities", summary.communities_after},
                         {"communities_unfiltered", summary.communities_before},
                         {"min_sentences", config.min_sentences},
                         {"embedder", embedder_fingerprint(config)}});
    return summary;
}

void save_oof_csv(const std::string& path, const OutOfFoldPredictions& oof) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FatalError("cannot write " + path);
    out << "fips,fold,y_true,y_pred\n";
    for (std::size_t i = 0; i < oof.communities.size(); ++i)
        out << oof.communities[i].code() << ',' << oof.fold[i] << ','
            << fmt_g17(oof.y_true[static_cast<Eigen::Index>(i)]) << ','
            << fmt_g17(oof.y_pred[static_cast<Eigen::Index>(i)]) << '\n';
    if (!out) throw FatalError("failed while writing " + path);
}

OutOfFoldPredictions load_oof_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FatalError("cannot open " + path);
    csv::Reader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row) || row.size() != 4 || row[0] != "fips" || row[1] != "fold" ||
        row[2] != "y_true" || row[3] != "y_pred")
        throw FatalError("not an out-of-fold prediction file: " + path);

    OutOfFoldPredictions oof;
    std::vector<double> y_true, y_pred;
    while (reader.next(row)) {
        if (row.size() != 4)
            throw FatalError("malformed row in " + path);
        oof.communities.push_back(CommunityId::parse(row[0]));
        try {
            oof.fold.push_back(std::stoi(row[1]));
            y_true.push_back(std::stod(row[2]));
            y_pred.push_back(std::stod(row[3]));
        } catch (const std::exception&) {
            throw FatalError("malformed row in " + path);
        }
    }
    oof.y_true = Eigen::Map<Eigen::VectorXd>(y_true.data(), static_cast<Eigen::Index>(y_true.size()));
    oof.y_pred = Eigen::Map<Eigen::VectorXd>(y_pred.data(), static_cast<Eigen::Index>(y_pred.size()));
    return oof;
}

FitSummary cmd_fit(const PipelineConfig& config) {
    config.validate();
    ensure_workdir(config);
    require_file(artifacts::features_matrix(config.workdir), "geoling embed-aggregate");
    require_file(artifacts::targets(config.workdir, config.target_name), "geoling ingest");

    CommunityFeatures features = load_features(artifacts::features_matrix(config.workdir),
                                               artifacts::features_index(config.workdir));
    TargetTable targets =
        TargetTable::load(artifacts::targets(config.workdir, config.target_name));

    std::vector<CommunityId> usable;
    for (const auto& id : features.communities)
        if (targets.entries.count(id)) usable.push_back(id);
    if (usable.empty())
        throw FatalError("no trainable communities: features and target table do not overlap");

    FitSummary summary;
    summary.dropped_features = features.communities.size() - usable.size();
    summary.dropped_targets = targets.entries.size() - usable.size();

    CommunityFeatures x = subset_features(features, usable);
    TargetTable y = subset_targets(targets, usable);

    FoldPlan plan = make_folds(usable, config.k_folds, mix_seed(config.seed, seed_stream::kFolds));
    RidgeOptions options;
    options.lambda_grid = config.lambda_grid;
    options.inner_folds = config.inner_folds;
    CrossValidationResult cv = cross_validated_fit(x, y, plan, options);

    summary.report = evaluate_predictions(cv.predictions.y_true, cv.predictions.y_pred,
                                          config.quantiles);
    summary.model = cv.model;

    cv.model.save(artifacts::model(config.workdir, config.target_name));
    json eval = summary.report.to_json();
    eval["target_name"] = config.target_name;
    write_json_file(artifacts::evaluation(config.workdir, config.target_name), eval);
    summary.report.save_confusion_csv(artifacts::confusion_csv(config.workdir, config.target_name));
    save_oof_csv(artifacts::oof_csv(config.workdir, config.target_name), cv.predictions);
    return summary;
}

EvaluationReport cmd_evaluate(const PipelineConfig& config) {
    config.validate();
    const std::string path = artifacts::oof_csv(config.workdir, config.target_name);
    require_file(path, "geoling fit");
    OutOfFoldPredictions oof = load_oof_csv(path);
    EvaluationReport report =
        evaluate_predictions(oof.y_true, oof.y_pred, config.quantiles);
    json eval = report.to_json();
    eval["target_name"] = config.target_name;
    write_json_file(artifacts::evaluation(config.workdir, config.target_name), eval);
    report.save_confusion_csv(artifacts::confusion_csv(config.workdir, config.target_name));
    return report;
}

RankSummary cmd_rank(const PipelineConfig& config) {
    config.validate();
    ensure_workdir(config);
    const std::string store = artifacts::sentences(config.workdir);
    require_file(store, "geoling ingest");
    require_file(artifacts::model(config.workdir, config.target_name), "geoling fit");

    RidgeModel model = RidgeModel::load(artifacts::model(config.workdir, config.target_name));
    std::vector<SentenceRecord> records = load_canonical_sentences(store);
    if (records.empty()) throw FatalError("sentence store is empty: " + store);

    auto embedder = make_embedder(config);
    if (embedder->dimension() != model.dimension)
        throw FatalError("embedder dimension " + std::to_string(embedder->dimension()) +
                         " does not match model dimension " +
                         std::to_string(model.dimension));

    const std::size_t corpus_size = records.size();
    const std::size_t q =
        std::min<std::size_t>(static_cast<std::size_t>(config.subsample_size), corpus_size);
    const json cache_key = cluster_cache_key(config, corpus_size, q, model.dimension);

    RankSummary summary;
    ClusterModel clusters;
    std::vector<std::size_t> corpus_rows;
    const std::string meta_path = artifacts::cluster_meta(config.workdir);
    if (fs::exists(meta_path) && fs::exists(artifacts::cluster_centroids(config.workdir)) &&
        fs::exists(artifacts::cluster_assignments(config.workdir)) &&
        read_json_file(meta_path) == cache_key) {
        clusters = ClusterModel::load(artifacts::cluster_centroids(config.workdir),
                                      artifacts::cluster_assignments(config.workdir),
                                      &corpus_rows);
        summary.cluster_cache_hit = true;
    } else {
        SubsamplePlan plan = subsample(corpus_size, q, mix_seed(config.seed, seed_stream::kSubsample));
        corpus_rows = plan.selected_rows;
    }

    // The subsampled sentences are needed in both branches: to cluster on a
    // miss, and to score and extract terms either way.
    std::vector<SentenceRecord> sample;
    sample.reserve(corpus_rows.size());
    for (std::size_t row : corpus_rows) sample.push_back(records[row]);

    Tokenizer tokenizer;
    CorpusEmbedding embedding =
        embed_corpus(sample, tokenizer, *embedder, config.effective_workers());

    if (!summary.cluster_cache_hit) {
        KMeansOptions options;
        options.max_iter = config.kmeans_max_iter;
        options.tol = config.kmeans_tol;
        options.workers = config.effective_workers();
        clusters = kmeans_cosine(embedding.matrix, config.clusters,
                                 mix_seed(config.seed, seed_stream::kKmeans), options);
        clusters.save(artifacts::cluster_centroids(config.workdir),
                      artifacts::cluster_assignments(config.workdir), corpus_rows);
        write_json_file(meta_path, cache_key);
    }

    summary.ranking = score_clusters(clusters, embedding.matrix, model);

    // Report term lists for the highest- and lowest-scoring clusters.
    const auto& ranked = summary.ranking.ranked;
    const std::size_t half = static_cast<std::size_t>(config.clouds) / 2;
    const std::size_t n_top = std::min(half, ranked.size());
    const std::size_t n_bottom = std::min(half, ranked.size() - n_top);
    std::vector<std::pair<std::size_t, std::string>> report_positions;
    for (std::size_t i = 0; i < n_top; ++i) report_positions.emplace_back(i, "top");
    for (std::size_t i = ranked.size() - n_bottom; i < ranked.size(); ++i)
        report_positions.emplace_back(i, "bottom");

    std::unordered_set<std::string> stopwords = config.stopwords_path.empty()
                                                    ? default_stopwords()
                                                    : load_stopwords(config.stopwords_path);

    json reported = json::array();
    for (const auto& [idx, position] : report_positions) {
        const ClusterScore& entry = ranked[idx];
        std::vector<TermCount> terms =
            top_terms(entry.cluster, sample, clusters.assignment,
                      static_cast<std::size_t>(config.terms_per_cloud), tokenizer, stopwords);
        json jterms = json::array();
        std::ofstream term_file(
            artifacts::terms_csv(config.workdir, config.target_name, entry.cluster),
            std::ios::binary | std::ios::trunc);
        if (!term_file)
            throw FatalError("cannot write term file for cluster " +
                             std::to_string(entry.cluster));
        term_file << "term,count\n";
        for (const auto& tc : terms) {
            jterms.push_back(json{{"term", tc.term}, {"count", tc.count}});
            term_file << csv::escape(tc.term) << ',' << tc.count << '\n';
        }
        reported.push_back(json{{"cluster", entry.cluster},
                                {"position", position},
                                {"rank", idx + 1},
                                {"score", entry.score},
                                {"size", entry.size},
                                {"terms", jterms}});
        summary.reported_clusters.push_back(entry.cluster);
    }

    json out = summary.ranking.to_json();
    out["target_name"] = config.target_name;
    out["reported"] = reported;
    write_json_file(artifacts::ranking(config.workdir, config.target_name), out);
    return summary;
}

SynthDataset synth_generate(const PipelineConfig& config) {
    config.validate();
    const int a = config.synth_communities;
    const int per_community = config.synth_sentences;
    const int tokens_per_sentence = config.synth_tokens;
    const int vocab_size = config.synth_vocab;
    if (a > 99999) throw FatalError("synth: community count exceeds the 5-digit id space");

    SplitMix64 rng(mix_seed(config.seed, seed_stream::kSynth));

    std::vector<std::string> vocab(static_cast<std::size_t>(vocab_size));
    for (int v = 0; v < vocab_size; ++v) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "tok%05d", v);
        vocab[static_cast<std::size_t>(v)] = buf;
    }

    // Each community favors a small token subset; favored tokens appear with
    // probability 1/2, which separates the community mean embeddings.
    const int n_favored = std::max(3, vocab_size / 20);

    SynthDataset dataset;
    dataset.records.reserve(static_cast<std::size_t>(a) *
                            static_cast<std::size_t>(per_community));
    for (int j = 0; j < a; ++j) {
        CommunityId fips = CommunityId::parse(std::to_string(j + 1));
        std::set<std::uint64_t> favored_set;
        while (favored_set.size() < static_cast<std::size_t>(n_favored))
            favored_set.insert(rng.next_below(static_cast<std::uint64_t>(vocab_size)));
        std::vector<std::uint64_t> favored(favored_set.begin(), favored_set.end());

        for (int s = 0; s < per_community; ++s) {
            std::string text;
            for (int t = 0; t < tokens_per_sentence; ++t) {
                const std::uint64_t pick =
                    rng.next_double() < 0.5
                        ? favored[rng.next_below(favored.size())]
                        : rng.next_below(static_cast<std::uint64_t>(vocab_size));
                if (t > 0) text += ' ';
                text += vocab[static_cast<std::size_t>(pick)];
            }
            dataset.records.push_back(
                {"s" + std::to_string(dataset.records.size()), std::move(text), fips});
        }
    }

    // Targets are a noisy linear readout of the exact community features the
    // pipeline itself will compute, so recovery quality is attributable to
    // the regression stage alone. The hashing embedder is used regardless of
    // the configured embedder: a pretrained lexicon cannot cover this
    // synthetic vocabulary.
    Tokenizer tokenizer;
    HashingEmbedder embedder(config.embed_dim, config.seed);
    EmbedAggregateResult agg =
        embed_and_aggregate(dataset.records, tokenizer, embedder, config.effective_workers());
    const Eigen::MatrixXd& x = agg.features.matrix;

    dataset.true_weights.resize(config.embed_dim);
    for (int d = 0; d < config.embed_dim; ++d) dataset.true_weights[d] = rng.next_normal();

    Eigen::VectorXd signal = x * dataset.true_weights;
    const double mu = signal.mean();
    const double sd = std::sqrt((signal.array() - mu).square().sum() /
                                static_cast<double>(signal.size()));
    if (sd <= 0.0) throw FatalError("synth: degenerate signal, try another seed");
    dataset.noise_stddev = sd / config.synth_snr;

    Eigen::VectorXd y = signal;
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += dataset.noise_stddev * rng.next_normal();
    // Downstream target files reject negative values; shift to the positive
    // axis (a constant offset changes neither correlations nor rankings).
    dataset.shift = 1.0 - y.minCoeff();
    y.array() += dataset.shift;

    dataset.targets.target_name = config.target_name;
    dataset.targets.unit = config.target_unit;
    dataset.targets.years = {2014};
    for (std::size_t i = 0; i < agg.features.communities.size(); ++i)
        dataset.targets.entries.emplace(agg.features.communities[i],
                                        y[static_cast<Eigen::Index>(i)]);
    dataset.targets.recompute_stats();
    return dataset;
}

SynthSummary cmd_synth(const PipelineConfig& config) {
    config.validate();
    ensure_workdir(config);
    SynthDataset dataset = synth_generate(config);

    SynthSummary summary;
    summary.records = dataset.records.size();
    summary.sentences_path = config.workdir + "/synth_sentences.jsonl";
    summary.targets_path =
        config.workdir + "/synth_" + config.target_name + "_2014.csv";
    summary.truth_path = config.workdir + "/synth_truth.json";

    write_canonical_sentences(summary.sentences_path, dataset.records);

    std::ofstream csv_out(summary.targets_path, std::ios::binary | std::ios::trunc);
    if (!csv_out) throw FatalError("cannot write " + summary.targets_path);
    csv_out << "fips,value\n";
    for (const auto& [id, value] : dataset.targets.entries)
        csv_out << id.code() << ',' << fmt_g17(value) << '\n';
    if (!csv_out) throw FatalError("failed while writing " + summary.targets_path);

    json truth{{"target_name", config.target_name},
               {"dimension", config.embed_dim},
               {"seed", config.seed},
               {"snr", config.synth_snr},
               {"noise_stddev", dataset.noise_stddev},
               {"shift", dataset.shift},
               {"weights", std::vector<double>(dataset.true_weights.data(),
                                               dataset.true_weights.data() +
                                                   dataset.true_weights.size())}};
    write_json_file(summary.truth_path, truth);
    return summary;
}

ValidationReport cmd_validate(const PipelineConfig& config) {
    config.validate();

    std::vector<SentenceRecord> records;
    if (!config.sentences_path.empty()) {
        CountyCentroidTable centroids;
        const CountyCentroidTable* centroids_ptr = nullptr;
        if (parse_mode(config) == InputMode::Coords) {
            if (config.centroids_path.empty())
                throw FatalError("input_mode=coords requires a county centroid table");
            centroids = CountyCentroidTable::load_csv(config.centroids_path);
            centroids_ptr = &centroids;
        }
        records = read_sentences(config.sentences_path, parse_mode(config), centroids_ptr).records;
    } else {
        const std::string store = artifacts::sentences(config.workdir);
        require_file(store, "geoling ingest");
        records = load_canonical_sentences(store);
    }

    TargetTable targets;
    if (!config.target_files.empty()) {
        targets = load_targets_from_files(config);
    } else {
        const std::string path = artifacts::targets(config.workdir, config.target_name);
        require_file(path, "geoling ingest");
        targets = TargetTable::load(path);
    }

    return validate_dataset(records, targets);
}

} // namespace geoling
