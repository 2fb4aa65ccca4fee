#include "helpers.hpp"

#include "dynenh/cli.hpp"

#include <doctest.h>

#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using dynenh::cli::run;

namespace {

struct CliResult {
    int status;
    std::string out, err;
};

CliResult invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "dynenh");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    auto* old_out = std::cout.rdbuf(out.rdbuf());
    auto* old_err = std::cerr.rdbuf(err.rdbuf());
    const int status = run(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<fs::path> subdirs(const fs::path& root) {
    std::vector<fs::path> out;
    if (fs::exists(root))
        for (const auto& e : fs::directory_iterator(root))
            if (e.is_directory()) out.push_back(e.path());
    return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 1") {
    CHECK(invoke({}).status == 1);
    CHECK(invoke({"frobnicate"}).status == 1);
    CHECK(invoke({"train", "--no-such-flag"}).status == 1);
    CHECK(invoke({"train", "--set", "novalue"}).status == 1);
    CHECK(invoke({"train", "--set", "unknown_key=3", "--data", "/nonexistent"}).status == 1);
    const CliResult help = invoke({"--help"});
    CHECK(help.status == 0);
    CHECK(help.out.find("DYNENH_CACHE_DIR") != std::string::npos);
    CHECK(help.out.find("wls_lambda=") != std::string::npos);
}

TEST_CASE("git blob hash matches git hash-object") {
    CHECK(dynenh::cli::git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    CHECK(dynenh::cli::git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("run directories are unique and locked") {
    testutil::TempDir tmp("rundirs");
    const fs::path a = dynenh::cli::create_run_dir(tmp.path, "fc");
    const fs::path b = dynenh::cli::create_run_dir(tmp.path, "fc");
    CHECK(a != b);
    CHECK(fs::is_directory(a));
    {
        dynenh::cli::DirLock lock(a);
        CHECK_THROWS(dynenh::cli::DirLock(a));
    }
    dynenh::cli::DirLock again(a);
}

TEST_CASE("end to end: synth, missing targets, train, eval, report") {
    testutil::TempDir tmp("e2e");
    const std::string data = (tmp.path / "data").string(), runs = (tmp.path / "runs").string();
    REQUIRE(invoke({"synth-data", "--out", data, "--classes", "4", "--per-class", "6", "--extent", "40"}).status == 0);

    const std::vector<std::string> common = {"--data", data, "--set", "input_extent=32", "--set", "crop_extent=32"};
    auto with = [&](std::vector<std::string> head, std::vector<std::string> tail = {}) {
        head.insert(head.end(), common.begin(), common.end());
        head.insert(head.end(), tail.begin(), tail.end());
        return head;
    };

    const CliResult missing = invoke(with({"train", "--runs", runs, "--approach", "a1", "--epochs", "1"}));
    CHECK(missing.status == 2);
    CHECK(missing.err.find("gen-targets") != std::string::npos);
    CHECK(subdirs(runs).empty());

    REQUIRE(invoke(with({"gen-targets"}, {"--methods", "imsharp,gf"})).status == 0);
    REQUIRE(invoke(with({"train", "--runs", runs, "--approach", "a1", "--method", "imsharp", "--epochs", "1",
                         "--batch-size", "4"}))
                .status == 0);
    const auto dirs = subdirs(runs);
    REQUIRE(dirs.size() == 1);
    const fs::path rd = dirs.front();
    CHECK(fs::exists(rd / "log.csv"));
    CHECK(fs::exists(rd / "config.txt"));
    CHECK(slurp(rd / "inputs.sha1").size() == 41);
    CHECK(slurp(rd / "log.csv").rfind("phase,epoch,loss_total,loss_mse,loss_class,train_accuracy,val_accuracy\n", 0) == 0);

    REQUIRE(invoke({"eval", rd.string(), "--split", "test", "--dump-enhanced", "2"}).status == 0);
    CHECK(slurp(rd / "metrics_test.csv").find("accuracy") != std::string::npos);
    CHECK(fs::exists(rd / "enhanced"));
    REQUIRE(invoke({"report", rd.string()}).status == 0);
    const std::string s1 = slurp(rd / "summary.csv"), svg1 = slurp(rd / "loss.svg");
    REQUIRE(invoke({"report", rd.string()}).status == 0);
    CHECK(slurp(rd / "summary.csv") == s1);
    CHECK(slurp(rd / "loss.svg") == svg1);
    CHECK(s1.rfind("split,stream,metric,value\n", 0) == 0);

    REQUIRE(invoke({"export-filters", rd.string(), "--split", "train", "--limit", "3"}).status == 0);
    std::size_t planes = 0;
    for (const auto& e : fs::directory_iterator(rd / "filters")) planes += e.path().extension() == ".plane";
    CHECK(planes == 3);

    CHECK(invoke({"eval", (tmp.path / "nowhere").string()}).status != 0);
}

}
