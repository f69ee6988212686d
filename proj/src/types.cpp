#include "geoling/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "geoling/error.hpp"

namespace geoling {

CommunityId CommunityId::parse(std::string_view raw) {
    if (raw.empty() || raw.size() > 5)
        throw FatalError("invalid community id: '" + std::string(raw) + "'");
    for (const char c : raw) {
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw FatalError("invalid community id: '" + std::string(raw) + "'");
    }
    std::string code(5 - raw.size(), '0');
    code.append(raw);
    return CommunityId(std::move(code));
}

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    return m.allFinite();
}

void TargetTable::recompute_stats() {
    const std::size_t n = entries.size();
    if (n == 0) {
        mean = 0.0;
        stddev = 0.0;
        return;
    }
    double sum = 0.0;
    for (const auto& [id, v] : entries) sum += v;
    mean = sum / static_cast<double>(n);
    if (n < 2) {
        stddev = 0.0;
        return;
    }
    double ss = 0.0;
    for (const auto& [id, v] : entries) ss += (v - mean) * (v - mean);
    stddev = std::sqrt(ss / static_cast<double>(n - 1));
}

bool TargetTable::stats_consistent(double rel_tol) const {
    TargetTable copy = *this;
    copy.recompute_stats();
    const auto close = [rel_tol](double a, double b) {
        return std::abs(a - b) <= rel_tol * std::max({1.0, std::abs(a), std::abs(b)});
    };
    return close(mean, copy.mean) && close(stddev, copy.stddev);
}

nlohmann::json TargetTable::to_json() const {
    nlohmann::json entries_json = nlohmann::json::object();
    for (const auto& [id, v] : entries) entries_json[id.code()] = v;
    return nlohmann::json{{"target_name", target_name}, {"unit", unit},
                          {"years", years},             {"mean", mean},
                          {"stddev", stddev},           {"entries", entries_json}};
}

TargetTable TargetTable::from_json(const nlohmann::json& j) {
    TargetTable t;
    t.target_name = j.at("target_name").get<std::string>();
    t.unit = j.value("unit", std::string{});
    t.years = j.at("years").get<std::vector<int>>();
    t.mean = j.at("mean").get<double>();
    t.stddev = j.at("stddev").get<double>();
    for (const auto& [key, value] : j.at("entries").items())
        t.entries.emplace(CommunityId::parse(key), value.get<double>());
    if (t.entries.empty()) throw FatalError("target table has no entries");
    for (const auto& [id, v] : t.entries) {
        if (!std::isfinite(v))
            throw FatalError("target table value for " + id.code() + " is not finite");
    }
    return t;
}

void TargetTable::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw FatalError("cannot write target table: " + path);
    out << to_json().dump(2) << '\n';
}

TargetTable TargetTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot read target table: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

ValidationReport validate_dataset(const std::vector<SentenceRecord>& records,
                                  const TargetTable& targets) {
    ValidationReport report;

    std::set<CommunityId> with_sentences;
    std::unordered_set<std::string> seen_ids;
    std::set<std::string> duplicates;
    for (const auto& r : records) {
        with_sentences.insert(r.community);
        if (!seen_ids.insert(r.id).second) duplicates.insert(r.id);
    }
    report.duplicate_ids.assign(duplicates.begin(), duplicates.end());

    for (const auto& id : with_sentences) {
        if (targets.entries.contains(id)) report.usable.push_back(id);
        else report.missing_target.push_back(id);
    }
    for (const auto& [id, v] : targets.entries) {
        if (!with_sentences.contains(id)) report.no_sentences.push_back(id);
    }

    if (report.usable.empty())
        throw FatalError("no trainable communities: sentence corpus and target table do not overlap");
    return report;
}

} // namespace geoling
