#include "geoling/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geoling/csv.hpp"
#include "geoling/error.hpp"

namespace geoling {

namespace {

constexpr double kEarthRadiusKm = 6371.0088;
constexpr double kDegToRad = 0.017453292519943295;

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end && std::isfinite(out);
}

bool valid_coords(double lat, double lon) {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
           lon >= -180.0 && lon <= 180.0;
}

std::optional<CommunityId> try_parse_fips(const std::string& raw) {
    if (raw.empty() || raw.size() > 5) return std::nullopt;
    for (const char c : raw) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    }
    return CommunityId::parse(raw);
}

struct ParsedRow {
    std::string id;
    std::string text;
    std::optional<std::string> fips;
    std::optional<double> lat, lon;
};

// Turns one parsed row into a record, or nullopt when the row is malformed
// for the configured mode.
std::optional<SentenceRecord> admit_row(const ParsedRow& row, InputMode mode,
                                        const CountyCentroidTable* centroids) {
    if (row.id.empty()) return std::nullopt;
    if (mode == InputMode::Fips) {
        if (!row.fips) return std::nullopt;
        const auto id = try_parse_fips(*row.fips);
        if (!id) return std::nullopt;
        return SentenceRecord{row.id, row.text, *id};
    }
    if (!row.lat || !row.lon || !valid_coords(*row.lat, *row.lon)) return std::nullopt;
    const auto nearest = centroids->nearest(*row.lat, *row.lon);
    if (!nearest) return std::nullopt;
    return SentenceRecord{row.id, row.text, *nearest};
}

} // namespace

double great_circle_km(double lat1, double lon1, double lat2, double lon2) {
    const double phi1 = lat1 * kDegToRad;
    const double phi2 = lat2 * kDegToRad;
    const double dphi = (lat2 - lat1) * kDegToRad;
    const double dlambda = (lon2 - lon1) * kDegToRad;
    const double sp = std::sin(dphi / 2.0);
    const double sl = std::sin(dlambda / 2.0);
    const double a = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

CountyCentroidTable CountyCentroidTable::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot read centroid file: " + path);
    csv::Reader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields) || fields.size() < 3)
        throw FatalError("centroid file missing header: " + path);

    CountyCentroidTable table;
    while (reader.next(fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() < 3) throw FatalError("malformed centroid row in " + path);
        double lat = 0.0, lon = 0.0;
        if (!parse_double(fields[1], lat) || !parse_double(fields[2], lon) ||
            !valid_coords(lat, lon))
            throw FatalError("invalid centroid coordinates in " + path);
        table.entries[CommunityId::parse(fields[0])] = Point{lat, lon};
    }
    if (table.entries.empty()) throw FatalError("centroid file is empty: " + path);
    return table;
}

std::optional<CommunityId> CountyCentroidTable::nearest(double lat, double lon) const {
    std::optional<CommunityId> best;
    double best_dist = 0.0;
    // Map iteration is ascending FIPS, so keeping the first of equal
    // distances implements the smaller-FIPS tie rule.
    for (const auto& [id, p] : entries) {
        const double d = great_circle_km(lat, lon, p.lat, p.lon);
        if (!best || d < best_dist) {
            best = id;
            best_dist = d;
        }
    }
    return best;
}

namespace {

IngestResult read_sentences_jsonl(std::istream& in, InputMode mode,
                                  const CountyCentroidTable* centroids) {
    IngestResult result;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++result.rows_read;
        ParsedRow row;
        try {
            const auto j = nlohmann::json::parse(line);
            row.id = j.value("id", std::string{});
            row.text = j.value("text", std::string{});
            if (j.contains("fips")) {
                if (j["fips"].is_string()) row.fips = j["fips"].get<std::string>();
                else if (j["fips"].is_number_integer())
                    row.fips = std::to_string(j["fips"].get<long long>());
            }
            if (j.contains("lat") && j["lat"].is_number()) row.lat = j["lat"].get<double>();
            if (j.contains("lon") && j["lon"].is_number()) row.lon = j["lon"].get<double>();
        } catch (const nlohmann::json::exception&) {
            ++result.rows_dropped;
            continue;
        }
        if (auto record = admit_row(row, mode, centroids)) result.records.push_back(*record);
        else ++result.rows_dropped;
    }
    return result;
}

IngestResult read_sentences_csv(std::istream& in, InputMode mode,
                                const CountyCentroidTable* centroids) {
    csv::Reader reader(in);
    std::vector<std::string> header;
    if (!reader.next(header)) throw FatalError("sentence CSV has no header");
    const auto column = [&header](const std::string& name) -> int {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
    };
    const int id_col = column("id");
    const int text_col = column("text");
    const int fips_col = column("fips");
    const int lat_col = column("lat");
    const int lon_col = column("lon");
    if (id_col < 0 || text_col < 0)
        throw FatalError("sentence CSV header must name id and text columns");
    if (mode == InputMode::Fips && fips_col < 0)
        throw FatalError("sentence CSV header must name a fips column in fips mode");
    if (mode == InputMode::Coords && (lat_col < 0 || lon_col < 0))
        throw FatalError("sentence CSV header must name lat and lon columns in coords mode");

    IngestResult result;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        ++result.rows_read;
        const auto get = [&fields](int col) -> std::string {
            return (col >= 0 && col < static_cast<int>(fields.size())) ? fields[col]
                                                                       : std::string{};
        };
        ParsedRow row;
        row.id = get(id_col);
        row.text = get(text_col);
        if (fips_col >= 0 && !get(fips_col).empty()) row.fips = get(fips_col);
        double lat = 0.0, lon = 0.0;
        if (lat_col >= 0 && parse_double(get(lat_col), lat)) row.lat = lat;
        if (lon_col >= 0 && parse_double(get(lon_col), lon)) row.lon = lon;
        if (auto record = admit_row(row, mode, centroids)) result.records.push_back(*record);
        else ++result.rows_dropped;
    }
    return result;
}

} // namespace

IngestResult read_sentences(const std::string& path, InputMode mode,
                            const CountyCentroidTable* centroids) {
    if (mode == InputMode::Coords && (centroids == nullptr || centroids->entries.empty()))
        throw FatalError("coords mode requires a centroid table");

    std::ifstream in(path);
    if (!in) throw FatalError("cannot read sentence file: " + path);

    // Sniff the format: JSONL rows start with '{'.
    int first = in.peek();
    while (first == '\n' || first == '\r' || first == ' ') {
        in.get();
        first = in.peek();
    }
    IngestResult result = (first == '{') ? read_sentences_jsonl(in, mode, centroids)
                                         : read_sentences_csv(in, mode, centroids);

    if (result.rows_read > 0 && result.rows_dropped * 2 > result.rows_read) {
        std::ostringstream msg;
        msg << "input mostly invalid: dropped " << result.rows_dropped << " of "
            << result.rows_read << " rows in " << path;
        throw FatalError(msg.str());
    }
    return result;
}

YearlyTargetFile YearlyTargetFile::load_csv(const std::string& path,
                                            const std::string& target_name, int year) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot read target file: " + path);
    csv::Reader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields) || fields.size() < 2)
        throw FatalError("target file missing header: " + path);

    YearlyTargetFile file;
    file.target_name = target_name;
    file.year = year;
    std::set<CommunityId> seen;
    while (reader.next(fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() < 2) throw FatalError("malformed target row in " + path);
        const CommunityId id = CommunityId::parse(fields[0]);
        double value = 0.0;
        if (!parse_double(fields[1], value) || value < 0.0)
            throw FatalError("invalid target value for " + id.code() + " in " + path);
        if (!seen.insert(id).second)
            throw FatalError("duplicate community " + id.code() + " in " + path);
        file.rows.emplace_back(id, value);
    }
    if (file.rows.empty()) throw FatalError("target file has no rows: " + path);
    return file;
}

std::optional<int> year_from_filename(const std::string& path) {
    const std::string name = std::filesystem::path(path).filename().string();
    std::optional<int> year;
    for (std::size_t i = 0; i + 4 <= name.size(); ++i) {
        const bool four_digits =
            std::all_of(name.begin() + i, name.begin() + i + 4,
                        [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
        const bool bounded_left = i == 0 || !std::isdigit(static_cast<unsigned char>(name[i - 1]));
        const bool bounded_right =
            i + 4 == name.size() || !std::isdigit(static_cast<unsigned char>(name[i + 4]));
        if (four_digits && bounded_left && bounded_right)
            year = std::stoi(name.substr(i, 4));
    }
    return year;
}

TargetTable union_average_targets(const std::vector<YearlyTargetFile>& files,
                                  const std::string& unit) {
    if (files.empty()) throw FatalError("union_average_targets needs at least one file");
    for (const auto& f : files) {
        if (f.target_name != files.front().target_name)
            throw FatalError("mixed target names: '" + f.target_name + "' vs '" +
                             files.front().target_name + "'");
    }

    // Collect (year, value) per community and average in sorted order so the
    // result does not depend on the order the files were passed in.
    std::map<CommunityId, std::vector<std::pair<int, double>>> values;
    std::set<int> years;
    for (const auto& f : files) {
        years.insert(f.year);
        for (const auto& [id, v] : f.rows) values[id].emplace_back(f.year, v);
    }

    TargetTable table;
    table.target_name = files.front().target_name;
    table.unit = unit;
    table.years.assign(years.begin(), years.end());
    for (auto& [id, pairs] : values) {
        std::sort(pairs.begin(), pairs.end());
        double sum = 0.0;
        for (const auto& [year, v] : pairs) sum += v;
        table.entries[id] = sum / static_cast<double>(pairs.size());
    }
    table.recompute_stats();
    return table;
}

} // namespace geoling
