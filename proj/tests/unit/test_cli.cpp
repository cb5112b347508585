#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "helpers.hpp"
#include "ipdc/cli.hpp"
#include "ipdc/dataset.hpp"

using namespace ipdc;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir()
    {
        static int counter = 0;
        path = fs::temp_directory_path() / ("ipdc_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& contents) const
    {
        const auto p = path / name;
        std::ofstream(p) << contents;
        return p.string();
    }
    std::string at(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// n = 200 rows with an X1*X2 interaction driving y.
void write_problem(const TempDir& dir, Index n = 200, Index p = 12)
{
    RngStream rng(31, 0);
    const Matrix x = testing::random_normal(n, p, rng);
    Matrix y = 3.0 * x.col(0).cwiseProduct(x.col(1)) + testing::random_normal(n, 1, rng);
    dir.file("x.csv", to_csv(x));
    dir.file("y.csv", to_csv(y));
}

} // namespace

TEST_CASE("cli dcorr")
{
    TempDir dir;
    const auto a = dir.file("a.csv", "1\n4\n2\n8\n");
    const auto c = dir.file("c.csv", "3\n3\n3\n3\n");
    auto r = invoke({"dcorr", a, a});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["dcorr"].get<double>() == doctest::Approx(1.0).epsilon(1e-10));

    r = invoke({"dcorr", c, a});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["dcorr"].get<double>() == 0.0);

    const auto t = dir.file("t.csv", "0\n1\n");
    r = invoke({"dcorr", t, t});
    REQUIRE(r.code == 0);
    j = nlohmann::json::parse(r.out);
    CHECK(j["dcov2"].get<double>() == doctest::Approx(0.25));
    CHECK(j["s1"].get<double>() == doctest::Approx(0.5));

    const auto bad = dir.file("bad.csv", "1\nx\n3\n4\n");
    CHECK(invoke({"dcorr", bad, a}).code == cli::kDataError);
    const auto short_file = dir.file("s.csv", "1\n2\n3\n");
    CHECK(invoke({"dcorr", short_file, a}).code == cli::kDataError);
}

TEST_CASE("cli screen")
{
    TempDir dir;
    write_problem(dir);
    auto r = invoke({"screen", "--x", dir.at("x.csv"), "--y", dir.at("y.csv"), "--rule", "topk", "--d", "auto",
                     "--out", dir.at("s.json"), "--threads", "1"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir.at("s.json")));
    CHECK(j["d_main_used"] == 37);
    CHECK(j["m_hat"].size() == 12); // k exceeds p
    CHECK(j["version"].is_string());
    CHECK(j["config"]["rule"] == "topk");
    bool found = false;
    for (const auto& pr : j["i_hat"])
        found |= pr[0] == 1 && pr[1] == 2;
    CHECK(found);

    r = invoke({"screen", "--x", dir.at("x.csv"), "--y", dir.at("y.csv"), "--baseline", "dcsis2"});
    REQUIRE(r.code == 0);
    CHECK_FALSE(nlohmann::json::parse(r.out).contains("omega_inter"));

    r = invoke({"screen", "--x", dir.at("x.csv"), "--y", dir.at("y.csv"), "--rule", "threshold"});
    CHECK(r.code == cli::kConfigError);
    CHECK(r.err.find("tau1") != std::string::npos);
    CHECK(r.err.find("tau2") != std::string::npos);

    CHECK(invoke({"screen", "--x", dir.at("x.csv"), "--y", dir.at("y.csv"), "--threads", "zero"}).code ==
          cli::kConfigError);
    CHECK(invoke({"screen", "--x", dir.at("missing.csv"), "--y", dir.at("y.csv")}).code == cli::kDataError);
    CHECK(invoke({"screen", "--bogus"}).code == cli::kConfigError);
}

TEST_CASE("cli screen auto size on n = 200")
{
    TempDir dir;
    write_problem(dir, 200, 60);
    const auto r = invoke({"screen", "--x", dir.at("x.csv"), "--y", dir.at("y.csv")});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["m_hat"].size() == 37);
}

TEST_CASE("cli select")
{
    TempDir dir;
    write_problem(dir, 120, 8);
    REQUIRE(invoke({"screen", "--x", dir.at("x.csv"), "--y", dir.at("y.csv"), "--d", "4", "--out",
                    dir.at("s.json")})
                .code == 0);

    auto r = invoke({"select", "--x", dir.at("x.csv"), "--y", dir.at("y.csv"), "--screen", dir.at("s.json"),
                     "--lambda", "1e9"});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["row_support"].empty());

    const std::vector<std::string> base{"select", "--x", dir.at("x.csv"), "--y", dir.at("y.csv"), "--screen",
                                        dir.at("s.json"), "--lambda", "cv", "--folds", "5", "--seed", "7"};
    auto a = base;
    a.insert(a.end(), {"--out", dir.at("a.json")});
    auto b = base;
    b.insert(b.end(), {"--out", dir.at("b.json")});
    REQUIRE(invoke(a).code == 0);
    REQUIRE(invoke(b).code == 0);
    CHECK(slurp(dir.at("a.json")) == slurp(dir.at("b.json")));
    const auto j = nlohmann::json::parse(slurp(dir.at("a.json")));
    bool found = false;
    for (const auto& t : j["per_response_support"][0])
        found |= t == "I:1:2";
    CHECK(found);

    r = invoke({"select", "--x", dir.at("x.csv"), "--y", dir.at("y.csv"), "--screen", dir.at("none.json"),
                "--out", dir.at("c.json")});
    CHECK(r.code == cli::kDataError);
    CHECK_FALSE(fs::exists(dir.at("c.json")));

    // Screen result computed for different p.
    write_problem(dir, 120, 5);
    r = invoke({"select", "--x", dir.at("x.csv"), "--y", dir.at("y.csv"), "--screen", dir.at("s.json")});
    CHECK(r.code == cli::kDataError);

    CHECK(invoke({"select", "--x", dir.at("x.csv"), "--y", dir.at("y.csv"), "--screen", dir.at("s.json"),
                  "--folds", "1", "--lambda", "abc"})
              .code == cli::kConfigError);
}

TEST_CASE("cli simulate")
{
    TempDir dir;
    const std::vector<std::string> base{"simulate", "--model", "3", "--n", "100", "--p", "40", "--reps", "3",
                                        "--test-n", "200", "--methods", "ipdc,sis2_max,dcsis2", "--seed", "5"};
    auto a = base;
    a.insert(a.end(), {"--out", dir.at("a.json"), "--threads", "1"});
    auto b = base;
    b.insert(b.end(), {"--out", dir.at("b.json"), "--csv", dir.at("b.csv"), "--threads", "3"});
    REQUIRE(invoke(a).code == 0);
    REQUIRE(invoke(b).code == 0);
    const std::string csv = slurp(dir.at("a.csv"));
    CHECK(csv == slurp(dir.at("b.csv")));
    CHECK(slurp(dir.at("a.json")) == slurp(dir.at("b.json")));
    std::istringstream lines(csv);
    std::string line;
    int rows = 0;
    while (std::getline(lines, line))
        ++rows;
    CHECK(rows == 4); // header + 3 methods

    const auto one = invoke({"simulate", "--model", "1", "--p", "20", "--reps", "1", "--test-n", "100"});
    REQUIRE(one.code == 0);
    std::istringstream t(one.out);
    std::string header, row;
    std::getline(t, header);
    std::getline(t, row);
    // Every *_se column of the single replicate row is zero.
    std::vector<std::string> h, v;
    for (std::stringstream hs(header); std::getline(hs, line, ',');)
        h.push_back(line);
    for (std::stringstream vs(row); std::getline(vs, line, ',');)
        v.push_back(line);
    for (std::size_t i = 0; i < h.size() && i < v.size(); ++i)
        if (h[i].ends_with("_se") && !v[i].empty())
            CHECK(std::stod(v[i]) == 0.0);

    CHECK(invoke({"simulate", "--model", "9"}).code == cli::kConfigError);
    CHECK(invoke({"simulate", "--methods", "ipdc,foo"}).code == cli::kConfigError);
}

TEST_CASE("cli honours IPDC_THREADS and rejects bad values")
{
    TempDir dir;
    write_problem(dir, 50, 6);
    ::setenv("IPDC_THREADS", "bad", 1);
    CHECK(invoke({"screen", "--x", dir.at("x.csv"), "--y", dir.at("y.csv")}).code == cli::kConfigError);
    ::setenv("IPDC_THREADS", "2", 1);
    CHECK(invoke({"screen", "--x", dir.at("x.csv"), "--y", dir.at("y.csv")}).code == 0);
    ::unsetenv("IPDC_THREADS");
}
