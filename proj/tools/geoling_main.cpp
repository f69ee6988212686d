#include <iomanip>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "geoling/config.hpp"
#include "geoling/error.hpp"
#include "geoling/pipeline.hpp"

namespace {

// Flags are recorded as (config key, value) pairs during parsing and applied
// after the config file, so the precedence is: defaults, then file, then
// command line.
struct CliState {
    std::string config_file;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::vector<std::string> target_files; // repeated --targets, kept verbatim
};

void add_kv_option(CLI::App* cmd, CliState& state, const std::string& flag,
                   const std::string& key, const std::string& desc) {
    cmd->add_option_function<std::string>(
        flag, [&state, key](const std::string& value) { state.overrides.emplace_back(key, value); },
        desc);
}

void add_common(CLI::App* cmd, CliState& state) {
    cmd->add_option("--config", state.config_file, "key=value settings file");
    add_kv_option(cmd, state, "--workdir", "workdir", "artifact directory (default .)");
    add_kv_option(cmd, state, "--seed", "seed", "global random seed");
    add_kv_option(cmd, state, "--workers", "workers", "worker threads, 0 = all cores");
    cmd->add_flag_function(
        "--verbose,-v",
        [&state](std::int64_t) { state.overrides.emplace_back("verbose", "true"); },
        "print extra progress detail");
}

void add_corpus_inputs(CLI::App* cmd, CliState& state) {
    add_kv_option(cmd, state, "--sentences", "sentences", "sentence corpus (JSONL or CSV)");
    cmd->add_option_function<std::vector<std::string>>(
        "--targets",
        [&state](const std::vector<std::string>& values) {
            for (const auto& v : values) state.target_files.push_back(v);
        },
        "yearly target CSV file (repeatable)");
    add_kv_option(cmd, state, "--years", "target_years",
                  "comma-separated years, one per target file (default: from filenames)");
    add_kv_option(cmd, state, "--target-name", "target_name", "name of the target variable");
    add_kv_option(cmd, state, "--target-unit", "target_unit", "unit label for reports");
    add_kv_option(cmd, state, "--input-mode", "input_mode", "fips or coords");
    add_kv_option(cmd, state, "--centroids", "centroids",
                  "county centroid CSV (required for coords mode)");
}

void add_embedder_options(CLI::App* cmd, CliState& state) {
    add_kv_option(cmd, state, "--embedder", "embedder", "lexicon or hashing");
    add_kv_option(cmd, state, "--embed-dim", "embed_dim", "hashing embedder dimension");
    add_kv_option(cmd, state, "--lexicon", "lexicon", "word/bigram vector file (text or .gz)");
}

geoling::PipelineConfig build_config(const CliState& state) {
    geoling::PipelineConfig config;
    if (!state.config_file.empty()) config.apply_file(state.config_file);
    for (const auto& [key, value] : state.overrides) config.apply_key_value(key, value);
    if (!state.target_files.empty()) config.target_files = state.target_files;
    config.validate();
    return config;
}

std::string percent(double fraction) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << fraction * 100.0 << "%";
    return out.str();
}

void print_metrics(const geoling::EvaluationReport& report) {
    std::cout << std::setprecision(4) << "held-out pearson r = " << report.pearson << "\n"
              << "mean absolute error = " << report.mae << "\n"
              << report.quantiles << "-quantile bin accuracy = " << report.bin_accuracy
              << " (n = " << report.n << ")\n";
}

int run_ingest(const geoling::PipelineConfig& config) {
    geoling::IngestSummary s = geoling::cmd_ingest(config);
    if (s.wrote_sentences)
        std::cout << "sentences: read " << s.rows_read << " rows, dropped " << s.rows_dropped
                  << ", kept " << s.records << " across " << s.communities << " communities -> "
                  << geoling::artifacts::sentences(config.workdir) << "\n";
    if (s.wrote_targets)
        std::cout << "targets: " << s.target_communities << " communities -> "
                  << geoling::artifacts::targets(config.workdir, config.target_name) << "\n";
    return 0;
}

int run_embed_aggregate(const geoling::PipelineConfig& config) {
    geoling::EmbedAggregateSummary s = geoling::cmd_embed_aggregate(config);
    const double oov_rate = static_cast<double>(s.oov) / static_cast<double>(s.sentences);
    std::cout << "embedded " << s.sentences << " sentences at dimension " << s.dimension
              << " (" << s.oov << " without coverage, " << percent(oov_rate) << ")\n"
              << "aggregated " << s.communities_before << " communities, kept "
              << s.communities_after << " with at least " << config.min_sentences
              << " sentences -> " << geoling::artifacts::features_matrix(config.workdir)
              << "\n";
    return 0;
}

int run_fit(const geoling::PipelineConfig& config) {
    geoling::FitSummary s = geoling::cmd_fit(config);
    if (s.dropped_features > 0 || s.dropped_targets > 0)
        std::cout << "note: dropped " << s.dropped_features
                  << " communities without target and " << s.dropped_targets
                  << " target rows without features\n";
    print_metrics(s.report);
    if (config.verbose) {
        std::cout << "per-fold ridge strength:";
        for (const auto& fold : s.model.folds) std::cout << " " << fold.lambda;
        std::cout << "\n";
    }
    std::cout << "model -> " << geoling::artifacts::model(config.workdir, config.target_name)
              << "\n"
              << "predictions -> "
              << geoling::artifacts::oof_csv(config.workdir, config.target_name) << "\n";
    return 0;
}

int run_evaluate(const geoling::PipelineConfig& config) {
    geoling::EvaluationReport report = geoling::cmd_evaluate(config);
    print_metrics(report);
    return 0;
}

int run_rank(const geoling::PipelineConfig& config) {
    geoling::RankSummary s = geoling::cmd_rank(config);
    std::cout << (s.cluster_cache_hit ? "reused cached clustering"
                                      : "computed sentence clustering")
              << " (" << config.clusters << " clusters)\n";
    const auto& ranked = s.ranking.ranked;
    std::cout << std::setprecision(4);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const bool is_reported =
            std::find(s.reported_clusters.begin(), s.reported_clusters.end(),
                      ranked[i].cluster) != s.reported_clusters.end();
        if (!is_reported && !config.verbose) continue;
        std::cout << "#" << (i + 1) << " cluster " << ranked[i].cluster
                  << " score=" << ranked[i].score << " size=" << ranked[i].size << "\n";
    }
    if (!s.ranking.empty_clusters.empty())
        std::cout << s.ranking.empty_clusters.size() << " empty clusters excluded\n";
    std::cout << "ranking -> " << geoling::artifacts::ranking(config.workdir, config.target_name)
              << "\n";
    return 0;
}

int run_synth(const geoling::PipelineConfig& config) {
    geoling::SynthSummary s = geoling::cmd_synth(config);
    std::cout << "generated " << s.records << " sentences across " << config.synth_communities
              << " communities\n"
              << "sentences -> " << s.sentences_path << "\n"
              << "targets -> " << s.targets_path << "\n"
              << "ground truth -> " << s.truth_path << "\n";
    return 0;
}

int run_validate(const geoling::PipelineConfig& config) {
    geoling::ValidationReport report = geoling::cmd_validate(config);
    std::cout << "usable communities: " << report.usable.size() << "\n"
              << "communities with sentences but no target: " << report.missing_target.size()
              << "\n"
              << "communities with a target but no sentences: " << report.no_sentences.size()
              << "\n"
              << "duplicate sentence ids: " << report.duplicate_ids.size() << "\n";
    if (config.verbose) {
        auto preview = [](const auto& items, auto render) {
            std::string out;
            std::size_t shown = 0;
            for (const auto& item : items) {
                if (shown++ == 10) {
                    out += " ...";
                    break;
                }
                out += " " + render(item);
            }
            return out;
        };
        if (!report.missing_target.empty())
            std::cout << "  no target:"
                      << preview(report.missing_target,
                                 [](const geoling::CommunityId& id) { return id.code(); })
                      << "\n";
        if (!report.no_sentences.empty())
            std::cout << "  no sentences:"
                      << preview(report.no_sentences,
                                 [](const geoling::CommunityId& id) { return id.code(); })
                      << "\n";
        if (!report.duplicate_ids.empty())
            std::cout << "  duplicates:"
                      << preview(report.duplicate_ids, [](const std::string& s) { return s; })
                      << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predicts community-level outcomes from geotagged short texts and ranks "
                 "topic clusters by association with the outcome"};
    app.require_subcommand(1);
    CliState state;

    CLI::App* ingest = app.add_subcommand(
        "ingest", "Normalize raw sentences and yearly target files into the workdir");
    add_common(ingest, state);
    add_corpus_inputs(ingest, state);

    CLI::App* embed = app.add_subcommand(
        "embed-aggregate", "Embed every sentence and mean-pool per community");
    add_common(embed, state);
    add_embedder_options(embed, state);
    add_kv_option(embed, state, "--min-sentences", "min_sentences",
                  "drop communities with fewer sentences");

    CLI::App* fit = app.add_subcommand(
        "fit", "Cross-validated ridge regression of the target on community features");
    add_common(fit, state);
    add_kv_option(fit, state, "--target-name", "target_name", "name of the target variable");
    add_kv_option(fit, state, "--folds", "k_folds", "outer cross-validation folds");
    add_kv_option(fit, state, "--inner-folds", "inner_folds", "inner folds for ridge tuning");
    add_kv_option(fit, state, "--lambda-grid", "lambda_grid",
                  "comma-separated ridge strengths to try");
    add_kv_option(fit, state, "--quantiles", "quantiles", "bins for quantile accuracy");

    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "Recompute metrics from stored out-of-fold predictions");
    add_common(evaluate, state);
    add_kv_option(evaluate, state, "--target-name", "target_name",
                  "name of the target variable");
    add_kv_option(evaluate, state, "--quantiles", "quantiles", "bins for quantile accuracy");

    CLI::App* rank = app.add_subcommand(
        "rank", "Cluster sentence embeddings and rank clusters by predicted outcome");
    add_common(rank, state);
    add_embedder_options(rank, state);
    add_kv_option(rank, state, "--target-name", "target_name", "name of the target variable");
    add_kv_option(rank, state, "--clusters", "clusters", "number of clusters");
    add_kv_option(rank, state, "--subsample", "subsample_size",
                  "sentences to draw for clustering");
    add_kv_option(rank, state, "--kmeans-max-iter", "kmeans_max_iter", "iteration cap");
    add_kv_option(rank, state, "--kmeans-tol", "kmeans_tol",
                  "stop when the changed-assignment fraction drops to this");
    add_kv_option(rank, state, "--clouds", "clouds",
                  "total clusters to report (half top, half bottom)");
    add_kv_option(rank, state, "--terms-per-cloud", "terms_per_cloud",
                  "terms listed per reported cluster");
    add_kv_option(rank, state, "--stopwords", "stopwords",
                  "stopword file, one word per line (default: built-in English list)");

    CLI::App* synth = app.add_subcommand(
        "synth", "Generate a synthetic corpus with known ground-truth weights");
    add_common(synth, state);
    add_kv_option(synth, state, "--target-name", "target_name", "name of the target variable");
    add_kv_option(synth, state, "--communities", "synth_communities", "number of communities");
    add_kv_option(synth, state, "--sentences-per-community", "synth_sentences",
                  "sentences per community");
    add_kv_option(synth, state, "--tokens-per-sentence", "synth_tokens", "tokens per sentence");
    add_kv_option(synth, state, "--vocab", "synth_vocab", "vocabulary size");
    add_kv_option(synth, state, "--snr", "synth_snr", "signal-to-noise ratio of the targets");
    add_kv_option(synth, state, "--embed-dim", "embed_dim", "embedding dimension");

    CLI::App* validate = app.add_subcommand(
        "validate", "Check corpus/target overlap and report problems without writing");
    add_common(validate, state);
    add_corpus_inputs(validate, state);

    CLI11_PARSE(app, argc, argv);

    try {
        geoling::PipelineConfig config = build_config(state);
        if (ingest->parsed()) return run_ingest(config);
        if (embed->parsed()) return run_embed_aggregate(config);
        if (fit->parsed()) return run_fit(config);
        if (evaluate->parsed()) return run_evaluate(config);
        if (rank->parsed()) return run_rank(config);
        if (synth->parsed()) return run_synth(config);
        if (validate->parsed()) return run_validate(config);
        std::cerr << "error: no command given\n";
        return 1;
    } catch (const geoling::FatalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
