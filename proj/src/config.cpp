#include "geoling/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

#include "geoling/error.hpp"

namespace geoling {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        return std::stoi(value);
    } catch (const std::exception&) {
        throw FatalError("config: invalid integer for " + key + ": '" + value + "'");
    }
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        return std::stod(value);
    } catch (const std::exception&) {
        throw FatalError("config: invalid number for " + key + ": '" + value + "'");
    }
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> items;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

} // namespace

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> values;
    for (const auto& item : split_list(csv)) values.push_back(std::stod(item));
    return values;
}

int PipelineConfig::effective_workers() const {
    if (workers > 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void PipelineConfig::validate() const {
    if (input_mode != "fips" && input_mode != "coords")
        throw FatalError("config: input_mode must be fips or coords");
    if (embedder != "lexicon" && embedder != "hashing")
        throw FatalError("config: embedder must be lexicon or hashing");
    if (embed_dim < 1) throw FatalError("config: embed_dim must be positive");
    if (k_folds < 2) throw FatalError("config: k_folds must be at least 2");
    if (inner_folds < 2) throw FatalError("config: inner_folds must be at least 2");
    if (quantiles < 2) throw FatalError("config: quantiles must be at least 2");
    if (min_sentences < 1) throw FatalError("config: min_sentences must be at least 1");
    if (clusters < 1) throw FatalError("config: clusters must be at least 1");
    if (subsample_size < 1) throw FatalError("config: subsample_size must be at least 1");
    if (kmeans_max_iter < 1) throw FatalError("config: kmeans_max_iter must be at least 1");
    if (kmeans_tol < 0.0 || kmeans_tol >= 1.0)
        throw FatalError("config: kmeans_tol must be in [0, 1)");
    if (clouds < 2) throw FatalError("config: clouds must be at least 2");
    if (terms_per_cloud < 1) throw FatalError("config: terms_per_cloud must be at least 1");
    if (synth_communities < 2 || synth_sentences < 1 || synth_tokens < 1 || synth_vocab < 2)
        throw FatalError("config: synth sizes out of range");
    if (synth_snr <= 0.0) throw FatalError("config: synth_snr must be positive");
    if (workers < 0) throw FatalError("config: workers must be non-negative");
    for (const double l : lambda_grid) {
        if (!(l > 0.0)) throw FatalError("config: lambda_grid values must be positive");
    }
}

void PipelineConfig::apply_key_value(const std::string& key, const std::string& value) {
    if (key == "sentences") sentences_path = value;
    else if (key == "targets") target_files = split_list(value);
    else if (key == "target_years") {
        target_years.clear();
        for (const auto& item : split_list(value)) target_years.push_back(parse_int(key, item));
    } else if (key == "target_name") target_name = value;
    else if (key == "target_unit") target_unit = value;
    else if (key == "lexicon") lexicon_path = value;
    else if (key == "centroids") centroids_path = value;
    else if (key == "stopwords") stopwords_path = value;
    else if (key == "workdir") workdir = value;
    else if (key == "input_mode") input_mode = value;
    else if (key == "embedder") embedder = value;
    else if (key == "embed_dim") embed_dim = parse_int(key, value);
    else if (key == "k_folds") k_folds = parse_int(key, value);
    else if (key == "inner_folds") inner_folds = parse_int(key, value);
    else if (key == "lambda_grid") {
        try {
            lambda_grid = parse_double_list(value);
        } catch (const std::exception&) {
            throw FatalError("config: invalid lambda_grid: '" + value + "'");
        }
    } else if (key == "quantiles") quantiles = parse_int(key, value);
    else if (key == "min_sentences") min_sentences = parse_int(key, value);
    else if (key == "clusters") clusters = parse_int(key, value);
    else if (key == "subsample_size") subsample_size = parse_int(key, value);
    else if (key == "kmeans_max_iter") kmeans_max_iter = parse_int(key, value);
    else if (key == "kmeans_tol") kmeans_tol = parse_real(key, value);
    else if (key == "clouds") clouds = parse_int(key, value);
    else if (key == "terms_per_cloud") terms_per_cloud = parse_int(key, value);
    else if (key == "synth_communities") synth_communities = parse_int(key, value);
    else if (key == "synth_sentences") synth_sentences = parse_int(key, value);
    else if (key == "synth_tokens") synth_tokens = parse_int(key, value);
    else if (key == "synth_vocab") synth_vocab = parse_int(key, value);
    else if (key == "synth_snr") synth_snr = parse_real(key, value);
    else if (key == "seed") {
        try {
            seed = std::stoull(value);
        } catch (const std::exception&) {
            throw FatalError("config: invalid seed: '" + value + "'");
        }
    } else if (key == "workers") workers = parse_int(key, value);
    else if (key == "verbose") verbose = (value == "1" || value == "true" || value == "yes");
    else throw FatalError("config: unknown key '" + key + "'");
}

void PipelineConfig::apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot read config file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw FatalError("config: line " + std::to_string(line_no) + " is not key=value");
        apply_key_value(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

} // namespace geoling
