#include <doctest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "geoling/error.hpp"
#include "geoling/ingest.hpp"
#include "geoling/pipeline.hpp"
#include "geoling/rng.hpp"
#include "temp_dir.hpp"

using namespace geoling;
using testutil::TempDir;

namespace {

// Small but fully functional pipeline configuration rooted in a temp dir.
PipelineConfig small_config(const TempDir& dir) {
    PipelineConfig config;
    config.workdir = dir.path.string();
    config.target_name = "probe";
    config.embed_dim = 12;
    config.synth_communities = 30;
    config.synth_sentences = 40;
    config.synth_vocab = 80;
    config.min_sentences = 10;
    config.k_folds = 5;
    config.inner_folds = 3;
    config.clusters = 5;
    config.subsample_size = 600;
    config.seed = 7;
    config.workers = 2;
    return config;
}

nlohmann::json parse_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

} // namespace

TEST_CASE("synthetic corpus generation is deterministic in the seed") {
    TempDir dir("synth");
    PipelineConfig config = small_config(dir);

    SynthDataset a = synth_generate(config);
    SynthDataset b = synth_generate(config);
    REQUIRE(a.records.size() == b.records.size());
    REQUIRE(a.records.size() ==
            static_cast<std::size_t>(config.synth_communities * config.synth_sentences));
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].id == b.records[i].id);
        CHECK(a.records[i].text == b.records[i].text);
        CHECK(a.records[i].community == b.records[i].community);
    }
    CHECK((a.true_weights - b.true_weights).cwiseAbs().maxCoeff() == 0.0);
    for (const auto& [id, v] : a.targets.entries) CHECK(b.targets.entries.at(id) == v);

    PipelineConfig other = config;
    other.seed = 8;
    SynthDataset c = synth_generate(other);
    CHECK(a.records[0].text != c.records[0].text);

    // every target strictly positive (file format rejects negatives)
    for (const auto& [id, v] : a.targets.entries) CHECK(v > 0.0);
    CHECK(a.noise_stddev > 0.0);
}

TEST_CASE("synth files round trip exactly through ingest") {
    TempDir dir("synth_files");
    PipelineConfig config = small_config(dir);
    SynthDataset dataset = synth_generate(config);
    SynthSummary files = cmd_synth(config);
    CHECK(files.records == dataset.records.size());

    // targets CSV carries full precision
    YearlyTargetFile loaded = YearlyTargetFile::load_csv(files.targets_path, "probe", 2014);
    REQUIRE(loaded.rows.size() == dataset.targets.entries.size());
    for (const auto& [id, value] : loaded.rows)
        CHECK(value == dataset.targets.entries.at(id));

    // the year is recoverable from the generated filename
    CHECK(year_from_filename(files.targets_path) == 2014);

    // ground truth file matches the in-memory dataset
    nlohmann::json truth = parse_file(files.truth_path);
    REQUIRE(truth["weights"].size() == static_cast<std::size_t>(config.embed_dim));
    for (int d = 0; d < config.embed_dim; ++d)
        CHECK(truth["weights"][static_cast<std::size_t>(d)].get<double>() ==
              dataset.true_weights[d]);
    CHECK(truth["noise_stddev"].get<double>() == dataset.noise_stddev);
}

TEST_CASE("full pipeline stages produce consistent artifacts") {
    TempDir dir("pipeline");
    PipelineConfig config = small_config(dir);

    SynthSummary files = cmd_synth(config);
    config.sentences_path = files.sentences_path;
    config.target_files = {files.targets_path};

    IngestSummary ingest = cmd_ingest(config);
    CHECK(ingest.wrote_sentences);
    CHECK(ingest.wrote_targets);
    CHECK(ingest.records == files.records);
    CHECK(ingest.rows_dropped == 0);
    CHECK(ingest.communities == static_cast<std::size_t>(config.synth_communities));
    CHECK(ingest.target_communities == ingest.communities);

    EmbedAggregateSummary agg = cmd_embed_aggregate(config);
    CHECK(agg.sentences == files.records);
    CHECK(agg.dimension == config.embed_dim);
    CHECK(agg.communities_after == ingest.communities);

    // the stored features are exactly the matrix the targets were built from
    CommunityFeatures features =
        load_features(artifacts::features_matrix(config.workdir),
                      artifacts::features_index(config.workdir));
    SynthDataset dataset = synth_generate(config);
    Eigen::VectorXd noiseless = features.matrix * dataset.true_weights;
    TargetTable targets = TargetTable::load(artifacts::targets(config.workdir, "probe"));
    Eigen::VectorXd y(static_cast<Eigen::Index>(targets.entries.size()));
    Eigen::Index i = 0;
    for (const auto& [id, v] : targets.entries) y[i++] = v;
    // correlation between noiseless signal and stored target is high by
    // construction (snr 10)
    CHECK(pearson(noiseless, y) > 0.9);

    FitSummary fit = cmd_fit(config);
    CHECK(fit.report.n == static_cast<long>(ingest.communities));
    CHECK(fit.report.pearson > 0.5);
    CHECK(fit.dropped_features == 0);
    CHECK(fit.dropped_targets == 0);

    // evaluate recomputes identical metrics from the stored predictions
    EvaluationReport eval = cmd_evaluate(config);
    CHECK(eval.pearson == fit.report.pearson);
    CHECK(eval.mae == fit.report.mae);
    CHECK(eval.bin_accuracy == fit.report.bin_accuracy);

    // model artifact reproduces predictions bitwise
    RidgeModel model = RidgeModel::load(artifacts::model(config.workdir, "probe"));
    SplitMix64 rng(3);
    Eigen::VectorXd x(config.embed_dim);
    for (int d = 0; d < config.embed_dim; ++d) x[d] = rng.next_normal();
    CHECK(predict_sentence(x, model) == predict_sentence(x, fit.model));

    ValidationReport validation = cmd_validate(config);
    CHECK(validation.usable.size() == ingest.communities);
    CHECK(validation.duplicate_ids.empty());
}

TEST_CASE("rank caches the clustering across targets") {
    TempDir dir("rank");
    PipelineConfig config = small_config(dir);

    SynthSummary files = cmd_synth(config);
    config.sentences_path = files.sentences_path;
    config.target_files = {files.targets_path};
    cmd_ingest(config);
    cmd_embed_aggregate(config);
    cmd_fit(config);

    RankSummary first = cmd_rank(config);
    CHECK_FALSE(first.cluster_cache_hit);
    CHECK_FALSE(first.ranking.ranked.empty());

    const std::string centroids = testutil::read_file(artifacts::cluster_centroids(config.workdir));
    const std::string assignments =
        testutil::read_file(artifacts::cluster_assignments(config.workdir));
    REQUIRE_FALSE(centroids.empty());

    // second target: shifted copy of the first target file
    TargetTable targets = TargetTable::load(artifacts::targets(config.workdir, "probe"));
    PipelineConfig second = config;
    second.target_name = "probe2";
    {
        std::ofstream out(dir.file("second_2014.csv"));
        out << "fips,value\n";
        for (const auto& [id, v] : targets.entries) out << id.code() << ',' << (v * 2.0 + 1.0) << '\n';
    }
    second.sentences_path.clear();
    second.target_files = {dir.file("second_2014.csv")};
    cmd_ingest(second);
    cmd_fit(second);

    RankSummary again = cmd_rank(second);
    CHECK(again.cluster_cache_hit);
    CHECK(testutil::read_file(artifacts::cluster_centroids(config.workdir)) == centroids);
    CHECK(testutil::read_file(artifacts::cluster_assignments(config.workdir)) == assignments);

    // changing a clustering parameter invalidates the cache
    PipelineConfig changed = config;
    changed.clusters = config.clusters + 1;
    RankSummary recomputed = cmd_rank(changed);
    CHECK_FALSE(recomputed.cluster_cache_hit);

    // ranking artifact has the declared shape
    nlohmann::json ranking = parse_file(artifacts::ranking(config.workdir, "probe"));
    REQUIRE(ranking.contains("ranked"));
    REQUIRE(ranking.contains("reported"));
    CHECK(ranking["target_name"] == "probe");
    for (const auto& entry : ranking["reported"]) {
        CHECK(entry.contains("cluster"));
        CHECK(entry.contains("terms"));
        const std::string pos = entry["position"].get<std::string>();
        CHECK((pos == "top" || pos == "bottom"));
    }
}

TEST_CASE("pipeline commands fail cleanly when prerequisites are missing") {
    TempDir dir("missing");
    PipelineConfig config = small_config(dir);

    CHECK_THROWS_AS(cmd_embed_aggregate(config), FatalError);
    CHECK_THROWS_AS(cmd_fit(config), FatalError);
    CHECK_THROWS_AS(cmd_rank(config), FatalError);
    CHECK_THROWS_AS(cmd_evaluate(config), FatalError);
    CHECK_THROWS_AS(cmd_ingest(config), FatalError); // nothing to ingest

    try {
        cmd_fit(config);
        FAIL("expected an error");
    } catch (const FatalError& e) {
        // the message names the missing file and the producing stage
        CHECK(std::string(e.what()).find("features.bin") != std::string::npos);
        CHECK(std::string(e.what()).find("embed-aggregate") != std::string::npos);
    }
}

TEST_CASE("constant targets are rejected during fitting") {
    TempDir dir("constant");
    PipelineConfig config = small_config(dir);
    SynthSummary files = cmd_synth(config);
    config.sentences_path = files.sentences_path;

    // overwrite the target file with a constant column
    {
        std::ofstream out(dir.file("const_2014.csv"));
        out << "fips,value\n";
        for (int c = 1; c <= config.synth_communities; ++c)
            out << CommunityId::parse(std::to_string(c)).code() << ",5.0\n";
    }
    config.target_files = {dir.file("const_2014.csv")};
    cmd_ingest(config);
    cmd_embed_aggregate(config);
    CHECK_THROWS_AS(cmd_fit(config), FatalError);
}

TEST_CASE("out-of-fold csv round trips and rejects foreign files") {
    TempDir dir("oof");
    OutOfFoldPredictions oof;
    oof.communities = {CommunityId::parse("1"), CommunityId::parse("2"),
                       CommunityId::parse("3")};
    oof.fold = {2, 1, 2};
    oof.y_true = Eigen::Vector3d(0.1, 0.2 + 1e-17, 3e300);
    oof.y_pred = Eigen::Vector3d(-0.5, 1.0 / 3.0, 2.5);

    save_oof_csv(dir.file("oof.csv"), oof);
    OutOfFoldPredictions back = load_oof_csv(dir.file("oof.csv"));
    REQUIRE(back.communities.size() == 3);
    CHECK(back.communities == oof.communities);
    CHECK(back.fold == oof.fold);
    for (int i = 0; i < 3; ++i) {
        CHECK(back.y_true[i] == oof.y_true[i]); // %.17g round trip is exact
        CHECK(back.y_pred[i] == oof.y_pred[i]);
    }

    testutil::write_file(dir.file("foreign.csv"), "a,b\n1,2\n");
    CHECK_THROWS_AS(load_oof_csv(dir.file("foreign.csv")), FatalError);
}

TEST_CASE("ingest summary matches fixture bookkeeping") {
    TempDir dir("fixture");
    PipelineConfig config;
    config.workdir = dir.path.string();
    config.target_name = "ahd";
    testutil::write_file(dir.file("s.jsonl"),
                         "{\"id\":\"a\",\"fips\":\"01001\",\"text\":\"x\"}\n"
                         "{\"id\":\"b\",\"fips\":\"01001\",\"text\":\"y\"}\n"
                         "{\"id\":\"c\",\"fips\":\"01003\",\"text\":\"z\"}\n"
                         "broken\n");
    testutil::write_file(dir.file("ahd_2014.csv"), "fips,value\n01001,40\n01003,50\n");
    testutil::write_file(dir.file("ahd_2015.csv"), "fips,value\n01001,46\n");
    config.sentences_path = dir.file("s.jsonl");
    config.target_files = {dir.file("ahd_2014.csv"), dir.file("ahd_2015.csv")};

    IngestSummary summary = cmd_ingest(config);
    CHECK(summary.rows_read == 4);
    CHECK(summary.rows_dropped == 1);
    CHECK(summary.records == 3);
    CHECK(summary.communities == 2);
    CHECK(summary.target_communities == 2);

    TargetTable targets = TargetTable::load(artifacts::targets(config.workdir, "ahd"));
    CHECK(targets.entries.at(CommunityId::parse("01001")) == 43.0);
    CHECK(targets.entries.at(CommunityId::parse("01003")) == 50.0);
    CHECK(targets.years == std::vector<int>{2014, 2015});

    // years can also be given explicitly when filenames carry none
    PipelineConfig explicit_years = config;
    std::filesystem::copy_file(dir.file("ahd_2014.csv"), dir.file("early.csv"));
    std::filesystem::copy_file(dir.file("ahd_2015.csv"), dir.file("late.csv"));
    explicit_years.target_files = {dir.file("early.csv"), dir.file("late.csv")};
    CHECK_THROWS_AS(cmd_ingest(explicit_years), FatalError); // year not inferable
    explicit_years.target_years = {2014, 2015};
    IngestSummary with_years = cmd_ingest(explicit_years);
    CHECK(with_years.target_communities == 2);
}
