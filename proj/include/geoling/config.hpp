#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace geoling {

enum class EmbedderKind { Lexicon, Hashing };

/// All pipeline settings. Defaults here; a key=value config file overrides
/// defaults; command-line flags override the file.
struct PipelineConfig {
    // paths
    std::string sentences_path;
    std::vector<std::string> target_files;
    std::vector<int> target_years; // parallel to target_files; empty -> from filenames
    std::string target_name = "target";
    std::string target_unit;
    std::string lexicon_path;
    std::string centroids_path;
    std::string stopwords_path;
    std::string workdir = ".";

    // modes
    std::string input_mode = "fips"; // fips | coords
    std::string embedder = "hashing"; // lexicon | hashing
    int embed_dim = 64;               // hashing embedder dimension

    // regression
    int k_folds = 10;
    int inner_folds = 5;
    std::vector<double> lambda_grid; // empty -> default grid
    int quantiles = 10;

    // aggregation
    std::int64_t min_sentences = 50;

    // clustering
    int clusters = 2000;
    std::int64_t subsample_size = 1000000;
    int kmeans_max_iter = 100;
    double kmeans_tol = 0.0;
    int clouds = 4;      // report clouds/2 top + clouds/2 bottom clusters
    int terms_per_cloud = 30;

    // synthetic data
    int synth_communities = 300;
    int synth_sentences = 200; // per community
    int synth_tokens = 8;      // per sentence
    int synth_vocab = 400;
    double synth_snr = 10.0;   // stddev(signal) / stddev(noise)

    std::uint64_t seed = 42;
    int workers = 0; // 0 -> hardware concurrency
    bool verbose = false;

    int effective_workers() const;
    void validate() const;

    /// Applies `key=value` lines; '#' starts a comment. Unknown keys are fatal.
    void apply_file(const std::string& path);
    void apply_key_value(const std::string& key, const std::string& value);
};

std::vector<double> parse_double_list(const std::string& csv);

} // namespace geoling
