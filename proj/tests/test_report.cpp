#include <doctest.h>

#include "hybrideval/error.hpp"
#include "hybrideval/report.hpp"
#include "report_fixtures.hpp"
#include "test_support.hpp"

#include <regex>

using namespace hybrideval;

namespace {

std::size_t count_of(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

}  // namespace

TEST_CASE("palette") {
    CHECK(class_color("fungal") == "blue");
    CHECK(class_color("healthy") == "green");
    CHECK(class_color("virus") == "red");
    CHECK(class_color("unknown") == "violet");
    CHECK(class_color("tomato") == class_color("tomato"));
    CHECK(class_color("tomato") != "blue");
    CHECK(legend_order({"virus", "zeta", "unknown", "alpha", "fungal", "virus"}) ==
          std::vector<std::string>{"fungal", "virus", "unknown", "alpha", "zeta"});
}

TEST_CASE("confusion heatmap golden") {
    const auto svg = confusion_svg(fixtures::h3_confusion(), "H3");
    CHECK(fixtures::matches_golden("confusion_h3.svg", svg));
    CHECK(svg == confusion_svg(fixtures::h3_confusion(), "H3"));
    CHECK(count_of(svg, "<rect x=\"1") + count_of(svg, "<rect x=\"2") + count_of(svg, "<rect x=\"3") == 9);
    // Diagonal cells are fully saturated, the lone error is faint.
    CHECK(svg.find("data-true=\"2\" data-pred=\"2\" data-intensity=\"1.00\"") != std::string::npos);
    CHECK(svg.find("data-true=\"2\" data-pred=\"0\" data-intensity=\"0.01\"") != std::string::npos);
    CHECK(svg.find(">112</text>") != std::string::npos);
}

TEST_CASE("scatter golden and colors") {
    Matrix coords;
    std::vector<std::string> labels;
    fixtures::scatter_fixture(coords, labels);
    const auto svg = scatter_svg(coords, labels, "t-SNE (H3)");
    CHECK(fixtures::matches_golden("scatter.svg", svg));
    CHECK(count_of(svg, "r=\"3\" fill=\"blue\"") == 4);
    CHECK(count_of(svg, "r=\"3\" fill=\"green\"") == 4);
    CHECK(count_of(svg, "r=\"3\" fill=\"red\"") == 4);
    CHECK(count_of(svg, "r=\"3\" fill=\"violet\"") == 3);
    // Legend in palette order.
    const auto f = svg.find(">fungal<"), h = svg.find(">healthy<"), v = svg.find(">virus<"), u = svg.find(">unknown<");
    CHECK((f < h && h < v && v < u && u != std::string::npos));
}

TEST_CASE("points map inside the plot area") {
    Matrix coords;
    std::vector<std::string> labels;
    fixtures::scatter_fixture(coords, labels);
    const auto svg = scatter_svg(coords, labels);
    const std::regex circle(R"re(<circle cx="([0-9.]+)" cy="([0-9.]+)" r="3")re");
    std::size_t n = 0;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), circle); it != std::sregex_iterator(); ++it, ++n) {
        const double x = std::stod((*it)[1]), y = std::stod((*it)[2]);
        CHECK(x >= 20.0 + 23.0 - 1e-9);
        CHECK(x <= 480.0 - 23.0 + 1e-9);
        CHECK(y >= 40.0 + 21.0 - 1e-9);
        CHECK(y <= 460.0 - 21.0 + 1e-9);
    }
    CHECK(n == 15);
}

TEST_CASE("a single point lands in the center") {
    Matrix one(1, 2);
    one(0, 0) = 3.7;
    one(0, 1) = -2.0;
    const auto svg = scatter_svg(one, {"virus"});
    CHECK(svg.find("<circle cx=\"250.00\" cy=\"250.00\" r=\"3\" fill=\"red\"/>") != std::string::npos);
}

TEST_CASE("scatter input checks") {
    Matrix bad(2, 2);
    bad(1, 0) = std::nan("");
    CHECK_THROWS_AS(scatter_svg(bad, {"a", "b"}), Error);
    CHECK_THROWS_AS(scatter_svg(Matrix(2, 2), {"a"}), Error);
}

TEST_CASE("markdown tables golden") {
    const auto md = tables_markdown(fixtures::table_metrics(), fixtures::table_scores());
    CHECK(fixtures::matches_golden("tables.md", md));
    // H4 has four rows, so the weighted F1 sits in row (4 - 1) / 2 = 1.
    CHECK(md.find("| healthy | 0.97 | 1.00 | 0.99 | 0.96 |") != std::string::npos);
    CHECK(md.find("| unknown\\* | 0.00 | 0.00 | 0.00 |  |") != std::string::npos);
    CHECK(md.find("| H3 | 0.61 | 0.56 | 0.77 | 0.34 |") != std::string::npos);
    CHECK(md.find("[2] Davies-Bouldin index: lower is better.") != std::string::npos);
}

TEST_CASE("table values are rounded half-up from the raw numbers") {
    const auto t = summarize("H3", fixtures::h3_confusion());
    const auto md = tables_markdown({t}, {});
    CHECK(md.find("| virus | " + format_half_up(t.per_class[2].precision, 2) + " | 0.99 | ") != std::string::npos);
    CHECK(md.find("| healthy | 1.00 | 1.00 | 1.00 | " + format_half_up(t.weighted_f1, 2) + " |") != std::string::npos);
    CHECK(md.find("No clustering scores available") != std::string::npos);
    CHECK(md.find("\\*") == std::string::npos);
}

TEST_CASE("undefined ratios are flagged") {
    const auto t = summarize("H4", fixtures::h4_confusion());
    CHECK(t.undefined_ratio == std::vector<bool>{false, false, false, true});
}

TEST_CASE("render writes the files") {
    testing::TempDir dir("report");
    render_confusion_svg(fixtures::h3_confusion(), dir.path() / "c.svg", "H3");
    CHECK(testing::slurp(dir.path() / "c.svg") == confusion_svg(fixtures::h3_confusion(), "H3"));
    render_tables(fixtures::table_metrics(), {}, dir.path() / "t.md");
    CHECK(std::filesystem::exists(dir.path() / "t.md"));
    CHECK_THROWS_AS(render_tables({}, {}, "/proc/hybrideval-cannot-write/t.md"), Error);
}

TEST_CASE("gallery lists mistakes first") {
    std::vector<EvalRecord> recs{{"b", 0, 0, {1, 0}}, {"a", 1, 0, {0.6, 0.4}}, {"c", 1, 1, {0, 1}}};
    const auto g = gallery_entries(recs, {"fungal", "virus"});
    REQUIRE(g.size() == 3);
    CHECK(g[0].id == "a");
    CHECK_FALSE(g[0].correct);
    CHECK(g[1].id == "b");
    const auto json = gallery_json("H1", g);
    CHECK(json.find("\"incorrect\": 1") != std::string::npos);
}
