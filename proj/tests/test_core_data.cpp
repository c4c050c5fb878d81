#include "fluhgam/errors.hpp"
#include "fluhgam/geography.hpp"
#include "fluhgam/panel.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <random>

using namespace fluhgam;

namespace {

std::vector<GeoUnit> line_units(int n, double spacing = 2.0) {
    std::vector<GeoUnit> units;
    for (int i = 0; i < n; ++i) {
        units.push_back({"U" + std::to_string(i), "R0", 1000.0, spacing * i, 0.0});
    }
    return units;
}

std::vector<PanelRow> complete_rows(int n_days, int n_units, std::int64_t value = 3) {
    std::vector<PanelRow> rows;
    const Date start = Date::parse("2022-10-03");
    for (int u = 0; u < n_units; ++u) {
        for (int t = 0; t < n_days; ++t) {
            rows.push_back({start + t, "U" + std::to_string(u), value});
        }
    }
    return rows;
}

} // namespace

TEST_CASE("dates parse, format, and expose the weekday") {
    const Date d = Date::parse("2022-10-03"); // a Monday
    CHECK(d.day_of_week() == 0);
    CHECK(d.to_string() == "2022-10-03");
    CHECK((d + 6).day_of_week() == 6);
    CHECK((d + 7) - d == 7);
    CHECK_THROWS_AS(Date::parse("2022-13-01"), SchemaError);
    CHECK_THROWS_AS(Date::parse("20221001"), SchemaError);
    CHECK(Date::parse("2024-02-29").to_string() == "2024-02-29");
    CHECK_THROWS_AS(Date::parse("2023-02-29"), SchemaError);
}

TEST_CASE("build_adjacency weights edges by inverse centroid distance") {
    auto units = line_units(2);
    const AdjacencyGraph g = build_adjacency(units, {{"U0", "U1"}});
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].weight == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("build_adjacency rejects self-loops, unknown units, coincident centroids") {
    auto units = line_units(2);
    CHECK_THROWS_AS(build_adjacency(units, {{"U0", "U0"}}), ValidationError);
    CHECK_THROWS_AS(build_adjacency(units, {{"U0", "UX"}}), UnknownUnit);
    units[1].centroid_x = units[0].centroid_x;
    CHECK_THROWS_AS(build_adjacency(units, {{"U0", "U1"}}), CoincidentCentroids);
}

TEST_CASE("a path graph is connected with one edge per pair") {
    const auto units = line_units(3);
    const AdjacencyGraph g = build_adjacency(units, {{"U0", "U1"}, {"U1", "U2"}});
    CHECK(g.edges.size() == 2);
    CHECK_THROWS_AS(build_adjacency(units, {{"U0", "U1"}}), DisconnectedGraph);
}

TEST_CASE("graph_laplacian of a weighted pair") {
    const auto units = line_units(2);
    const AdjacencyGraph g = build_adjacency(units, {{"U0", "U1"}});
    const Eigen::MatrixXd lap = graph_laplacian(g, {"U0", "U1"});
    CHECK(lap(0, 0) == doctest::Approx(0.5));
    CHECK(lap(0, 1) == doctest::Approx(-0.5));
    CHECK(lap(1, 0) == doctest::Approx(-0.5));
    CHECK(lap(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("path-graph Laplacian eigenvalues match a brute-force eigensolve") {
    // Unit weights: centroids at spacing 1.
    const auto units = line_units(3, 1.0);
    const AdjacencyGraph g = build_adjacency(units, {{"U0", "U1"}, {"U1", "U2"}});
    const Eigen::MatrixXd lap = graph_laplacian(g, {"U0", "U1", "U2"});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    CHECK(eig.eigenvalues()(0) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(eig.eigenvalues()(1) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(eig.eigenvalues()(2) == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("Laplacian is PSD with zero row sums; connected graphs have one null mode") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coord(0.0, 50.0);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 6 + trial;
        std::vector<GeoUnit> units;
        for (int i = 0; i < n; ++i) {
            units.push_back({"U" + std::to_string(i), "R0", 1.0, coord(rng), coord(rng)});
        }
        std::vector<std::pair<std::string, std::string>> pairs;
        for (int i = 0; i + 1 < n; ++i) pairs.emplace_back(units[i].unit_id, units[i + 1].unit_id);
        pairs.emplace_back(units[0].unit_id, units[n - 1].unit_id);
        const AdjacencyGraph g = build_adjacency(units, pairs);
        std::vector<std::string> order;
        for (const auto& u : units) order.push_back(u.unit_id);
        const Eigen::MatrixXd lap = graph_laplacian(g, order);

        for (int i = 0; i < n; ++i) CHECK(lap.row(i).sum() == doctest::Approx(0.0).epsilon(1e-12));

        std::normal_distribution<double> normal(0.0, 1.0);
        for (int k = 0; k < 1000; ++k) {
            Eigen::VectorXd v(n);
            for (int i = 0; i < n; ++i) v(i) = normal(rng);
            CHECK(v.dot(lap * v) >= -1e-10);
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
        const double scale = eig.eigenvalues()(n - 1);
        int zeros = 0;
        for (int i = 0; i < n; ++i) {
            if (std::abs(eig.eigenvalues()(i)) <= 1e-8 * scale) ++zeros;
        }
        CHECK(zeros == 1);
    }
}

TEST_CASE("validate_panel accepts complete data without drops") {
    std::vector<std::string> warnings;
    const AdmissionsPanel panel = validate_panel(complete_rows(63, 3), &warnings);
    CHECK(panel.n_days() == 63);
    CHECK(panel.units().size() == 3);
    CHECK(warnings.empty());
    CHECK(panel.count(Date::parse("2022-10-03"), std::string("U0")) == 3);
}

TEST_CASE("validate_panel drops units missing more than the threshold, with a warning") {
    auto rows = complete_rows(60, 2);
    // U1 keeps only half its days.
    std::erase_if(rows, [](const PanelRow& r) {
        return r.unit_id == "U1" && (r.date.days_since_epoch() % 2 == 0);
    });
    std::vector<std::string> warnings;
    const AdmissionsPanel panel = validate_panel(rows, &warnings);
    CHECK(panel.units() == std::vector<std::string>{"U0"});
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("U1") != std::string::npos);
}

TEST_CASE("validate_panel rejects negative counts and isolated gaps") {
    auto rows = complete_rows(30, 1);
    rows[5].count = -1;
    CHECK_THROWS_AS(validate_panel(rows, nullptr), NegativeCount);

    auto gappy = complete_rows(100, 1);
    gappy.erase(gappy.begin() + 50); // one missing day: below threshold, still rejected
    CHECK_THROWS_AS(validate_panel(gappy, nullptr), GappyUnit);

    CHECK_THROWS_AS(validate_panel({}, nullptr), EmptyPanel);
}

TEST_CASE("validate_panel is idempotent on valid data") {
    const AdmissionsPanel first = validate_panel(complete_rows(35, 4), nullptr);
    std::vector<PanelRow> round_trip;
    for (const auto& unit : first.units()) {
        for (std::int64_t t = 0; t < first.n_days(); ++t) {
            const Date d = first.start_date() + t;
            round_trip.push_back({d, unit, first.count(d, unit)});
        }
    }
    const AdmissionsPanel second = validate_panel(round_trip, nullptr);
    CHECK(second.units() == first.units());
    CHECK(second.start_date() == first.start_date());
    CHECK(second.raw_counts() == first.raw_counts());
}

TEST_CASE("strict mode turns any gap into an error") {
    auto rows = complete_rows(40, 2);
    rows.pop_back();
    PanelValidationOptions opts;
    opts.strict = true;
    CHECK_THROWS_AS(validate_panel(rows, opts, nullptr), GappyUnit);
}

TEST_CASE("calendar day-of-week is a pure function of the date") {
    const CalendarFeatures cal;
    const Date monday = Date::parse("2022-10-03");
    for (int k = 0; k < 21; ++k) {
        CHECK(cal.day_of_week(monday + k) == k % 7);
    }
}
