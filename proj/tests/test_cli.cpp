#include <doctest.h>

#include "pipeline_fixtures.hpp"

namespace fs = std::filesystem;
using fixtures::run_cli;

namespace {

// Every regular file under `root`, keyed by relative path.
std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = testing::slurp(e.path());
    }
    return out;
}

void write_fixture_interchange(const fs::path& root) {
    fixtures::write_interchange(root, "H0", 3.0, 4, 11);
    fixtures::write_interchange(root, "H3", 8.0, 1, 12);
}

}  // namespace

TEST_CASE("help and usage errors") {
    testing::TempDir dir("cli");
    auto r = run_cli("--help", dir.path());
    CHECK(r.code == 0);
    CHECK(r.out.find("pipeline") != std::string::npos);
    CHECK(run_cli("manifest --no-such-flag", dir.path()).code == 64);
    CHECK(run_cli("manifest", dir.path()).code == 64);
    CHECK(run_cli("frobnicate", dir.path()).code == 64);
    CHECK(run_cli("manifest --pools x --treatments H9", dir.path()).code == 64);
}

TEST_CASE("manifest at full scale prints the split table") {
    testing::TempDir dir("cli");
    const auto listing = dir.path() / "pools.csv";
    fixtures::write_listing(listing, 750, 6380, 8000);
    const auto r = run_cli("manifest --pools '" + listing.string() + "' --out '" + (dir.path() / "run").string() + "'",
                           dir.path());
    REQUIRE(r.code == 0);
    CHECK(r.out.find("5,614") != std::string::npos);
    CHECK(r.out.find("1,404") != std::string::npos);
    CHECK(r.out.find("(shared by 5 treatments)") != std::string::npos);
    for (const char* t : {"H0", "H1", "H2", "H3", "H4"}) {
        CHECK(fs::exists(dir.path() / "run" / "manifests" / (std::string(t) + ".json")));
    }
}

TEST_CASE("a missing synthetic pool is a data error") {
    testing::TempDir dir("cli");
    const auto listing = dir.path() / "pools.csv";
    fixtures::write_listing(listing, 60, 0, 0);
    const auto r = run_cli("manifest --pools '" + listing.string() + "' --treatments H1 --real-per-class 40 --out '" +
                               (dir.path() / "run").string() + "'",
                           dir.path());
    CHECK(r.code == 2);
    CHECK(r.err.find("synthetic") != std::string::npos);
    // H0 needs only real images.
    CHECK(run_cli("manifest --pools '" + listing.string() + "' --treatments H0 --real-per-class 40 --out '" +
                      (dir.path() / "run").string() + "'",
                  dir.path())
              .code == 0);
}

TEST_CASE("malformed predictions exit 3 and name the line") {
    testing::TempDir dir("cli");
    const auto bad = dir.path() / "p.csv";
    testing::write_text(bad, "id,true_label,pred_label,p_a,p_b\nx,a,b,0.2,0.8\ny,a,c,0.5,0.5\n");
    const auto r = run_cli("eval --predictions '" + bad.string() + "' --out '" + dir.path().string() + "'", dir.path());
    CHECK(r.code == 3);
    CHECK(r.err.find("line 3") != std::string::npos);
}

TEST_CASE("eval writes metrics") {
    testing::TempDir dir("cli");
    write_fixture_interchange(dir.path() / "fx");
    const auto r = run_cli("eval --predictions '" + (dir.path() / "fx" / "H3" / "predictions.csv").string() +
                               "' --treatment H3 --out '" + dir.path().string() + "'",
                           dir.path());
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir.path() / "eval" / "H3" / "metrics.json"));
}

TEST_CASE("infeasible perplexity exits 4 and names the bound") {
    testing::TempDir dir("cli");
    write_fixture_interchange(dir.path() / "fx");
    const auto r = run_cli("project --embeddings '" + (dir.path() / "fx" / "H0" / "embeddings.csv").string() +
                               "' --sidecar '" + (dir.path() / "fx" / "H0" / "embeddings.json").string() +
                               "' --method tsne --perplexity 30 --out '" + dir.path().string() + "'",
                           dir.path());
    CHECK(r.code == 4);
    CHECK(r.err.find("N=60") != std::string::npos);
}

TEST_CASE("report with missing inputs exits 5 and lists them") {
    testing::TempDir dir("cli");
    const auto r = run_cli("report --treatments H2 --out '" + dir.path().string() + "'", dir.path());
    CHECK(r.code == 5);
    CHECK(r.err.find("missing report inputs") != std::string::npos);
    CHECK(r.err.find("metrics.json") != std::string::npos);
}

TEST_CASE("pipeline without a trainer runs from interchange files") {
    testing::TempDir dir("cli");
    write_fixture_interchange(dir.path() / "fx");
    const auto args = [&](const std::string& out) {
        return "pipeline --skip-train --treatments H0,H3 --predictions '" + (dir.path() / "fx").string() + "' --out '" +
               (dir.path() / out).string() + "' " + fixtures::kQuickProjection;
    };
    const auto r = run_cli(args("a"), dir.path());
    REQUIRE(r.code == 0);
    CHECK(r.out.find("pipeline complete: 2 treatments") != std::string::npos);
    for (const char* f : {"confusion.svg", "tsne.svg", "umap.svg", "metrics.md", "cluster_scores.json"}) {
        CHECK(fs::exists(dir.path() / "a" / "report" / "H3" / f));
    }
    CHECK(fs::exists(dir.path() / "a" / "report" / "summary.md"));

    // Same inputs, same seed: byte-identical outputs.
    REQUIRE(run_cli(args("b"), dir.path()).code == 0);
    const auto a = tree_bytes(dir.path() / "a"), b = tree_bytes(dir.path() / "b");
    CHECK(a.size() == b.size());
    for (const auto& [name, bytes] : a) {
        INFO(name);
        CHECK((b.count(name) && b.at(name) == bytes));
    }
}

TEST_CASE("pipeline runs the trainer command per treatment") {
    testing::TempDir dir("cli");
    write_fixture_interchange(dir.path() / "fx");
    const auto listing = dir.path() / "pools.csv";
    fixtures::write_listing(listing, 60, 400, 0);
    const std::string common = "pipeline --pools '" + listing.string() + "' --treatments H0,H3 --real-per-class 40 " +
                               fixtures::kQuickProjection + " --out '";

    const auto ok = run_cli(common + (dir.path() / "ok").string() + "' --trainer-cmd \"test -f {manifest} && cp " +
                                (dir.path() / "fx").string() + "/{treatment}/* {out}/\"",
                            dir.path());
    CHECK(ok.code == 0);
    CHECK(fs::exists(dir.path() / "ok" / "report" / "H0" / "metrics.md"));

    const auto bad = run_cli(common + (dir.path() / "bad").string() + "' --trainer-cmd \"echo boom; exit 7\"",
                             dir.path());
    CHECK(bad.code == 7);
    CHECK(bad.err.find("H0.trainer.log") != std::string::npos);
    CHECK(testing::slurp(dir.path() / "bad" / "logs" / "H0.trainer.log").find("boom") != std::string::npos);
}

TEST_CASE("pipeline needs a trainer or --skip-train") {
    testing::TempDir dir("cli");
    const auto r = run_cli("pipeline --out '" + dir.path().string() + "'", dir.path());
    CHECK(r.code == 64);
    CHECK(r.err.find("--trainer-cmd") != std::string::npos);
}
