#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sqfree/harness.hpp"

using namespace sqfree;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> v;
    std::istringstream is(s);
    for (std::string line; std::getline(is, line);) v.push_back(line);
    return v;
}

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> v;
    std::istringstream is(line);
    for (std::string f; std::getline(is, f, ',');) v.push_back(f);
    return v;
}

}  // namespace

TEST(Parse, Integers) {
    EXPECT_EQ(parse_integer("1_000_000"), 1'000'000u);
    EXPECT_EQ(parse_integer("1e12"), 1'000'000'000'000u);
    EXPECT_EQ(parse_integer("42"), 42u);
    EXPECT_THROW(parse_integer("25e-1"), usage_error);
    EXPECT_THROW(parse_integer("-3"), usage_error);
    EXPECT_THROW(parse_integer("abc"), usage_error);
    EXPECT_THROW(parse_integer(""), usage_error);
}

TEST(Parse, OffsetsAndPsi) {
    EXPECT_EQ(parse_offsets("0,2,6"), (OffsetTuple{0, 2, 6}));
    EXPECT_THROW(parse_offsets("0,2,2"), usage_error);
    EXPECT_THROW(parse_offsets("3,1"), usage_error);
    EXPECT_EQ(parse_psi("loglog").kind, PsiKind::loglog);
    EXPECT_EQ(parse_psi("pow23").kind, PsiKind::two_thirds_power);
    const PsiChoice c = parse_psi("const:3.5");
    EXPECT_EQ(c.kind, PsiKind::constant);
    EXPECT_DOUBLE_EQ(c.c, 3.5);
    EXPECT_THROW(parse_psi("cubic"), usage_error);
}

TEST(Cli, CountExample) {
    const CliRun r = cli({"count", "--x", "0", "--h", "10", "--offsets", "0"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ls = lines(r.out);
    ASSERT_EQ(ls.size(), 2u);
    EXPECT_EQ(ls[0], "x,h,offsets,r,q");
    EXPECT_EQ(ls[1], "0,10,0,1,7");
}

TEST(Cli, UnderscoreSeparatorsAccepted) {
    const CliRun a = cli({"count", "--x", "1_000_000", "--h", "1_000", "--offsets", "0,1"});
    const CliRun b = cli({"count", "--x", "1000000", "--h", "1000", "--offsets", "0,1"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"frobnicate"}).code, 2);
    EXPECT_EQ(cli({"count", "--x", "0", "--offsets", "0"}).code, 2);
    EXPECT_EQ(cli({"count", "--x", "0", "--h", "0", "--offsets", "0"}).code, 2);
    EXPECT_EQ(cli({"count", "--x", "-5", "--h", "3", "--offsets", "0"}).code, 2);
    EXPECT_EQ(cli({"count", "--x", "0", "--h", "3", "--offsets", "1,0"}).code, 2);
    EXPECT_EQ(cli({"count", "--x", "0", "--h", "3", "--offsets", "0", "--format", "xml"}).code, 2);
    EXPECT_EQ(cli({"selberg", "--x", "0", "--h", "100", "--offsets", "0", "--z", "2"}).code, 2);
    EXPECT_EQ(cli({"density", "--offsets", "0,1", "--prime-cutoff", "2"}).code, 2);
    EXPECT_EQ(cli({"sweep", "--x", "100"}).code, 2);
    const CliRun r = cli({"count", "--x", "0", "--h", "0", "--offsets", "0"});
    EXPECT_TRUE(r.out.empty());
    EXPECT_FALSE(r.err.empty());
}

TEST(Cli, HelpExitsCleanly) {
    const CliRun r = cli({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("count"), std::string::npos);
}

TEST(Cli, DensityEnclosesKnownConstant) {
    const CliRun r = cli({"density", "--offsets", "0", "--prime-cutoff", "1e6"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto row = fields(lines(r.out)[1]);
    const double lower = std::stod(row[3]), upper = std::stod(row[4]);
    EXPECT_LE(lower, 0.607927101854026628);
    EXPECT_GE(upper, 0.607927101854026628);
    EXPECT_EQ(row[7], "false");
}

TEST(Cli, DegenerateDensity) {
    const CliRun r = cli({"density", "--offsets", "0,1,2,3", "--prime-cutoff", "1000"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto row = fields(lines(r.out)[1]);
    EXPECT_EQ(row[3], "0");
    EXPECT_EQ(row[4], "0");
    EXPECT_EQ(row[7], "true");
}

TEST(Cli, SelbergAutoLevelHolds) {
    const CliRun r = cli({"selberg", "--x", "1e6", "--h", "5000", "--offsets", "0,2", "--z", "auto",
                          "--prime-cutoff", "1e5", "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j.size(), 1u);
    EXPECT_GE(j[0]["bound"].get<double>(), j[0]["exact"].get<double>());
    EXPECT_TRUE(j[0]["holds"].get<bool>());
    EXPECT_LE(j[0]["bound"].get<double>(), j[0]["theorem2_rhs"].get<double>() + 1e-6);
}

TEST(Cli, BuchstabReconciles) {
    const CliRun r = cli({"buchstab", "--x", "5e5", "--h", "800", "--offsets", "0,1,3", "--lambda0", "7",
                          "--prime-cutoff", "1e5"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto header = fields(lines(r.out)[0]);
    const auto row = fields(lines(r.out)[1]);
    const auto col = [&](const std::string& name) {
        return row[std::find(header.begin(), header.end(), name) - header.begin()];
    };
    EXPECT_EQ(col("reconciliation"), "0");
    EXPECT_EQ(std::stoull(col("r0")) - std::stoull(col("sigma")), std::stoull(col("q")));
}

TEST(Cli, BuchstabPsiClampedWithWarning) {
    const CliRun r = cli({"buchstab", "--x", "1e6", "--h", "100", "--offsets", "0", "--psi", "const:2",
                          "--prime-cutoff", "1e5"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST(Cli, JsonMirrorsCsv) {
    const std::vector<std::string> base{"sweep", "--x", "1000,20000", "--h", "300", "--offsets", "0", "--offsets",
                                        "0,1", "--prime-cutoff", "1e5"};
    auto json_args = base;
    json_args.insert(json_args.end(), {"--format", "json"});
    const CliRun c = cli(base), j = cli(json_args);
    ASSERT_EQ(c.code, 0) << c.err;
    ASSERT_EQ(j.code, 0) << j.err;
    const auto ls = lines(c.out);
    const auto header = fields(ls[0]);
    const auto arr = nlohmann::ordered_json::parse(j.out);
    ASSERT_EQ(arr.size() + 1, ls.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto row = fields(ls[i + 1]);
        std::size_t k = 0;
        for (const auto& [key, value] : arr[i].items()) {
            ASSERT_EQ(key, header[k]);
            if (value.is_number_float()) {
                EXPECT_DOUBLE_EQ(value.get<double>(), std::stod(row[k])) << key;
            } else if (value.is_number()) {
                EXPECT_EQ(std::to_string(value.get<std::uint64_t>()), row[k]) << key;
            } else if (value.is_string()) {
                EXPECT_EQ(value.get<std::string>(), row[k]) << key;
            }
            ++k;
        }
        EXPECT_EQ(k, header.size());
    }
}

TEST(Cli, SweepCardinality) {
    const CliRun grid = cli({"sweep", "--x", "1000,2000,3000", "--h", "100", "--offsets", "0", "--prime-cutoff", "1e4"});
    ASSERT_EQ(grid.code, 0) << grid.err;
    EXPECT_EQ(lines(grid.out).size(), 4u);
    const CliRun rnd = cli({"sweep", "--random", "5", "--seed", "3", "--max-x", "1e5", "--max-h", "500", "--max-r", "2",
                            "--prime-cutoff", "1e4"});
    ASSERT_EQ(rnd.code, 0) << rnd.err;
    EXPECT_EQ(lines(rnd.out).size(), 6u);
}

TEST(Cli, DeterministicAcrossRunsAndThreads) {
    const std::vector<std::string> base{"sweep", "--random", "6", "--seed", "99", "--max-x", "1e6", "--max-h", "3000",
                                        "--max-r", "3", "--prime-cutoff", "1e5"};
    auto one = base, four = base;
    one.insert(one.end(), {"--threads", "1"});
    four.insert(four.end(), {"--threads", "4"});
    const CliRun a = cli(one), b = cli(one), c = cli(four);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out, c.out);
    const CliRun other = cli({"sweep", "--random", "6", "--seed", "100", "--max-x", "1e6", "--max-h", "3000",
                              "--max-r", "3", "--prime-cutoff", "1e5"});
    EXPECT_NE(a.out, other.out);
}

TEST(Cli, SquareMultiples) {
    const CliRun r = cli({"squaremul", "--x", "1e6", "--h", "1e3", "--d-lo", "100", "--d-hi", "2000"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(fields(lines(r.out)[1])[5], "5");
    const CliRun t = cli({"squaremul", "--x", "1e8", "--scaling-table"});
    ASSERT_EQ(t.code, 0) << t.err;
    EXPECT_EQ(lines(t.out).size(), 5u);
}

TEST(Cli, WritesOutputFile) {
    const auto path = std::filesystem::temp_directory_path() / "sqfree_harness_test.csv";
    const CliRun r = cli({"count", "--x", "0", "--h", "100", "--offsets", "0", "--out", path.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), "x,h,offsets,r,q\n0,100,0,1,61\n");
    std::filesystem::remove(path);
}

TEST(Binary, ExitCodesAndOutput) {
    const std::string bin = SQFREE_CLI_PATH;
    FILE* p = popen((bin + " count --x 0 --h 100 --offsets 0 2>/dev/null").c_str(), "r");
    ASSERT_NE(p, nullptr);
    std::string out;
    char buf[256];
    while (fgets(buf, sizeof buf, p)) out += buf;
    EXPECT_EQ(WEXITSTATUS(pclose(p)), 0);
    EXPECT_EQ(out, "x,h,offsets,r,q\n0,100,0,1,61\n");
    const int bad = std::system((bin + " count --x 0 --h 0 --offsets 0 >/dev/null 2>&1").c_str());
    EXPECT_EQ(WEXITSTATUS(bad), 2);
}
