#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geoling/types.hpp"

namespace geoling {

enum class InputMode { Fips, Coords };

/// County reference points for the coordinate fallback: rows with lat/lon are
/// assigned to the nearest centroid by great-circle distance.
struct CountyCentroidTable {
    struct Point {
        double lat = 0.0;
        double lon = 0.0;
    };
    std::map<CommunityId, Point> entries;

    /// CSV `fips,lat,lon` with header.
    static CountyCentroidTable load_csv(const std::string& path);

    /// Nearest centroid; exact distance ties go to the smaller FIPS.
    /// Returns nullopt only when the table is empty.
    std::optional<CommunityId> nearest(double lat, double lon) const;
};

double great_circle_km(double lat1, double lon1, double lat2, double lon2);

struct IngestResult {
    std::vector<SentenceRecord> records;
    std::size_t rows_read = 0;
    std::size_t rows_dropped = 0;
};

/// Reads a sentence corpus from JSONL ({"id","text","fips"} or
/// {"id","text","lat","lon"}) or headered CSV with the same column names; the
/// format is sniffed from the first line. Malformed rows are dropped and
/// counted; more than 50% dropped is fatal.
IngestResult read_sentences(const std::string& path, InputMode mode,
                            const CountyCentroidTable* centroids = nullptr);

struct YearlyTargetFile {
    std::string target_name;
    int year = 0;
    std::vector<std::pair<CommunityId, double>> rows;

    /// CSV `fips,value` with header. Duplicate FIPS, non-finite or negative
    /// values are fatal.
    static YearlyTargetFile load_csv(const std::string& path, const std::string& target_name,
                                     int year);
};

/// Last run of exactly four digits in the basename, e.g. "ahd_2014.csv" -> 2014.
std::optional<int> year_from_filename(const std::string& path);

/// Combines yearly files into one table: a community present in several years
/// gets the arithmetic mean of those values; a community present in a single
/// year keeps that value as-is. Bitwise independent of file order.
TargetTable union_average_targets(const std::vector<YearlyTargetFile>& files,
                                  const std::string& unit = "");

} // namespace geoling
