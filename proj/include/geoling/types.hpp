#pragma once

#include <Eigen/Dense>
#include <compare>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace geoling {

/// Identifier of a community (US county FIPS semantics): exactly five decimal
/// digits, leading zeros significant. Kept as a string so "01001" never
/// collapses to 1001 on a round trip through CSV.
class CommunityId {
  public:
    CommunityId() = default;

    /// Accepts 1-5 digit strings and zero-pads to five characters.
    /// Throws FatalError on anything else.
    static CommunityId parse(std::string_view raw);

    const std::string& code() const { return code_; }
    auto operator<=>(const CommunityId&) const = default;

  private:
    explicit CommunityId(std::string code) : code_(std::move(code)) {}
    std::string code_;
};

struct SentenceRecord {
    std::string id;
    std::string text;
    CommunityId community;
};

/// Sentence embeddings are dense fixed-length real vectors.
using EmbeddingVector = Eigen::VectorXd;

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m);

/// One target variable over communities, with summary statistics and the
/// source years. Entries iterate in ascending FIPS order.
struct TargetTable {
    std::string target_name;
    std::string unit;
    std::map<CommunityId, double> entries;
    double mean = 0.0;
    double stddev = 0.0; // sample stddev (n-1), 0 for a single entry
    std::vector<int> years;

    void recompute_stats();
    bool stats_consistent(double rel_tol = 1e-9) const;

    nlohmann::json to_json() const;
    static TargetTable from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static TargetTable load(const std::string& path);
};

/// Outcome of the pre-flight join between a sentence corpus and a target
/// table. `usable` is the ascending intersection the pipeline trains on.
struct ValidationReport {
    std::vector<CommunityId> missing_target; // sentences present, no target value
    std::vector<CommunityId> no_sentences;   // target value present, no sentences
    std::vector<std::string> duplicate_ids;
    std::vector<CommunityId> usable;
};

/// Throws FatalError("no trainable communities...") when the intersection is
/// empty; otherwise reports warnings and the usable set.
ValidationReport validate_dataset(const std::vector<SentenceRecord>& records,
                                  const TargetTable& targets);

} // namespace geoling

template <> struct std::hash<geoling::CommunityId> {
    std::size_t operator()(const geoling::CommunityId& id) const noexcept {
        return std::hash<std::string>{}(id.code());
    }
};
