#include <doctest.h>

#include <algorithm>
#include <set>

#include "geoling/error.hpp"
#include "geoling/ingest.hpp"
#include "geoling/rng.hpp"
#include "temp_dir.hpp"

using namespace geoling;
using testutil::TempDir;
using testutil::write_file;

TEST_CASE("jsonl rows pass through in fips mode") {
    TempDir dir("jsonl");
    write_file(dir.file("s.jsonl"),
               "{\"id\":\"t1\",\"fips\":\"01001\",\"text\":\"hello\"}\n"
               "{\"id\":\"t2\",\"fips\":1001,\"text\":\"numeric fips\"}\n");
    IngestResult r = read_sentences(dir.file("s.jsonl"), InputMode::Fips);
    CHECK(r.rows_read == 2);
    CHECK(r.rows_dropped == 0);
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].id == "t1");
    CHECK(r.records[0].text == "hello");
    CHECK(r.records[0].community.code() == "01001");
    CHECK(r.records[1].community.code() == "01001");
}

TEST_CASE("csv corpus with quoted text") {
    TempDir dir("csv");
    write_file(dir.file("s.csv"),
               "id,text,fips\n"
               "t1,\"hello, world\",01001\n"
               "t2,plain,6037\n");
    IngestResult r = read_sentences(dir.file("s.csv"), InputMode::Fips);
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].text == "hello, world");
    CHECK(r.records[1].community.code() == "06037");
}

TEST_CASE("malformed rows are dropped and counted") {
    TempDir dir("drop");
    write_file(dir.file("s.jsonl"),
               "{\"id\":\"t1\",\"fips\":\"01001\",\"text\":\"ok\"}\n"
               "{\"id\":\"t2\",\"fips\":\"notdigits\",\"text\":\"bad fips\"}\n"
               "not json at all\n"
               "{\"id\":\"\",\"fips\":\"01001\",\"text\":\"missing id\"}\n"
               "{\"id\":\"t5\",\"fips\":\"01003\",\"text\":\"ok\"}\n"
               "{\"id\":\"t6\",\"fips\":\"01005\",\"text\":\"ok\"}\n");
    IngestResult r = read_sentences(dir.file("s.jsonl"), InputMode::Fips);
    CHECK(r.rows_read == 6);
    CHECK(r.rows_dropped == 3);
    CHECK(r.records.size() == 3);
}

TEST_CASE("mostly invalid input is fatal") {
    TempDir dir("invalid");
    write_file(dir.file("s.jsonl"),
               "{\"id\":\"t1\",\"fips\":\"01001\",\"text\":\"ok\"}\n"
               "junk1\njunk2\njunk3\n");
    CHECK_THROWS_AS(read_sentences(dir.file("s.jsonl"), InputMode::Fips), FatalError);
}

TEST_CASE("missing sentence file names the path") {
    try {
        read_sentences("/nonexistent/corpus.jsonl", InputMode::Fips);
        FAIL("expected an error");
    } catch (const FatalError& e) {
        CHECK(std::string(e.what()).find("/nonexistent/corpus.jsonl") != std::string::npos);
    }
}

TEST_CASE("coords mode assigns nearest centroid") {
    TempDir dir("coords");
    write_file(dir.file("c.csv"),
               "fips,lat,lon\n"
               "06037,34.05,-118.24\n"
               "36061,40.78,-73.97\n");
    CountyCentroidTable centroids = CountyCentroidTable::load_csv(dir.file("c.csv"));

    write_file(dir.file("s.jsonl"),
               "{\"id\":\"t1\",\"lat\":34.05,\"lon\":-118.24,\"text\":\"exactly LA\"}\n"
               "{\"id\":\"t2\",\"lat\":40.0,\"lon\":-75.0,\"text\":\"near NY\"}\n"
               "{\"id\":\"t3\",\"lat\":200.0,\"lon\":0.0,\"text\":\"bad lat\"}\n");
    IngestResult r = read_sentences(dir.file("s.jsonl"), InputMode::Coords, &centroids);
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].community.code() == "06037");
    CHECK(r.records[1].community.code() == "36061");
    CHECK(r.rows_dropped == 1);

    CHECK_THROWS_AS(read_sentences(dir.file("s.jsonl"), InputMode::Coords, nullptr),
                    FatalError);
}

TEST_CASE("equidistant point goes to the smaller fips") {
    CountyCentroidTable table;
    table.entries[CommunityId::parse("20001")] = {0.0, 10.0};
    table.entries[CommunityId::parse("10001")] = {0.0, 30.0};
    // Longitude 20 on the equator is exactly halfway; the great-circle
    // distances are bitwise equal by symmetry of the formula.
    CHECK(great_circle_km(0.0, 20.0, 0.0, 10.0) == great_circle_km(0.0, 20.0, 0.0, 30.0));
    auto nearest = table.nearest(0.0, 20.0);
    REQUIRE(nearest.has_value());
    CHECK(nearest->code() == "10001");
}

TEST_CASE("great circle distances are sane") {
    CHECK(great_circle_km(34.0, -118.0, 34.0, -118.0) == 0.0);
    // One degree of longitude on the equator: 2*pi*R/360 ~ 111.195 km
    CHECK(great_circle_km(0.0, 0.0, 0.0, 1.0) == doctest::Approx(111.195).epsilon(1e-3));
    // symmetric
    CHECK(great_circle_km(10.0, 20.0, 30.0, 40.0) ==
          great_circle_km(30.0, 40.0, 10.0, 20.0));
}

TEST_CASE("read_sentences is deterministic") {
    TempDir dir("determ");
    std::string content;
    SplitMix64 rng(5);
    for (int i = 0; i < 200; ++i)
        content += "{\"id\":\"t" + std::to_string(i) + "\",\"fips\":\"" +
                   std::to_string(1 + rng.next_below(99)) + "\",\"text\":\"word" +
                   std::to_string(rng.next_below(50)) + "\"}\n";
    write_file(dir.file("s.jsonl"), content);

    IngestResult a = read_sentences(dir.file("s.jsonl"), InputMode::Fips);
    IngestResult b = read_sentences(dir.file("s.jsonl"), InputMode::Fips);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].id == b.records[i].id);
        CHECK(a.records[i].community == b.records[i].community);
    }
}

TEST_CASE("yearly target file validation") {
    TempDir dir("targets");
    write_file(dir.file("ok_2014.csv"), "fips,value\n01001,40.0\n1003,50.0\n");
    YearlyTargetFile f = YearlyTargetFile::load_csv(dir.file("ok_2014.csv"), "ahd", 2014);
    REQUIRE(f.rows.size() == 2);
    CHECK(f.rows[0].first.code() == "01001");
    CHECK(f.rows[0].second == 40.0);
    CHECK(f.rows[1].first.code() == "01003");
    CHECK(f.year == 2014);

    write_file(dir.file("dup.csv"), "fips,value\n01001,40.0\n01001,41.0\n");
    CHECK_THROWS_AS(YearlyTargetFile::load_csv(dir.file("dup.csv"), "ahd", 2014), FatalError);

    write_file(dir.file("neg.csv"), "fips,value\n01001,-4.0\n");
    CHECK_THROWS_AS(YearlyTargetFile::load_csv(dir.file("neg.csv"), "ahd", 2014), FatalError);

    write_file(dir.file("nan.csv"), "fips,value\n01001,notanumber\n");
    CHECK_THROWS_AS(YearlyTargetFile::load_csv(dir.file("nan.csv"), "ahd", 2014), FatalError);

    write_file(dir.file("empty.csv"), "fips,value\n");
    CHECK_THROWS_AS(YearlyTargetFile::load_csv(dir.file("empty.csv"), "ahd", 2014),
                    FatalError);
}

TEST_CASE("year is the last bounded four-digit run in the filename") {
    CHECK(year_from_filename("data/ahd_2014.csv") == 2014);
    CHECK(year_from_filename("ahd-2014-2015.csv") == 2015);
    CHECK(year_from_filename("ahd_20145.csv") == std::nullopt); // five digits
    CHECK(year_from_filename("ahd.csv") == std::nullopt);
    CHECK(year_from_filename("/tmp/1999/ahd.csv") == std::nullopt); // directory ignored
}

TEST_CASE("union averaging follows the both-years-mean, single-year-passthrough rule") {
    YearlyTargetFile y2014{"ahd", 2014, {}};
    y2014.rows.emplace_back(CommunityId::parse("01001"), 40.0);
    y2014.rows.emplace_back(CommunityId::parse("01003"), 50.0);
    YearlyTargetFile y2015{"ahd", 2015, {}};
    y2015.rows.emplace_back(CommunityId::parse("01001"), 46.0);
    y2015.rows.emplace_back(CommunityId::parse("01005"), 12.0);

    TargetTable t = union_average_targets({y2014, y2015}, "deaths per 100k");
    REQUIRE(t.entries.size() == 3);
    CHECK(t.entries.at(CommunityId::parse("01001")) == 43.0);
    CHECK(t.entries.at(CommunityId::parse("01003")) == 50.0);
    CHECK(t.entries.at(CommunityId::parse("01005")) == 12.0);
    CHECK(t.years == std::vector<int>{2014, 2015});
    CHECK(t.target_name == "ahd");
    CHECK(t.unit == "deaths per 100k");
    CHECK(t.stats_consistent());

    // single file: identity on its rows
    TargetTable single = union_average_targets({y2014});
    REQUIRE(single.entries.size() == 2);
    CHECK(single.entries.at(CommunityId::parse("01001")) == 40.0);

    YearlyTargetFile other{"diabetes", 2014, {{CommunityId::parse("01001"), 1.0}}};
    CHECK_THROWS_AS(union_average_targets({y2014, other}), FatalError);
}

TEST_CASE("union averaging is bitwise symmetric in file order") {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<YearlyTargetFile> files;
        const int n_files = 2 + static_cast<int>(rng.next_below(3));
        for (int f = 0; f < n_files; ++f) {
            YearlyTargetFile file{"t", 2010 + f, {}};
            for (int c = 1; c <= 30; ++c) {
                if (rng.next_double() < 0.6)
                    file.rows.emplace_back(CommunityId::parse(std::to_string(c)),
                                           rng.next_double() * 100.0);
            }
            if (file.rows.empty())
                file.rows.emplace_back(CommunityId::parse("99"), 1.0);
            files.push_back(std::move(file));
        }

        TargetTable forward = union_average_targets(files);
        std::vector<YearlyTargetFile> reversed(files.rbegin(), files.rend());
        TargetTable backward = union_average_targets(reversed);
        std::vector<YearlyTargetFile> shuffled = files;
        rng.shuffle(shuffled);
        TargetTable randomized = union_average_targets(shuffled);

        REQUIRE(forward.entries.size() == backward.entries.size());
        for (const auto& [id, v] : forward.entries) {
            CHECK(backward.entries.at(id) == v);   // bitwise
            CHECK(randomized.entries.at(id) == v); // bitwise
        }
        CHECK(forward.mean == backward.mean);
        CHECK(forward.stddev == randomized.stddev);

        // output communities = union of inputs
        std::set<CommunityId> expected;
        for (const auto& f : files)
            for (const auto& [id, v] : f.rows) expected.insert(id);
        CHECK(expected.size() == forward.entries.size());
    }
}
