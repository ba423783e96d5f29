#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Sandbox {
    fs::path dir;
    explicit Sandbox(const std::string& name) : dir(fs::temp_directory_path() / ("conservd_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Sandbox() { fs::remove_all(dir); }

    int run(const std::string& args, const std::string& env = "") const {
        std::string cmd = "cd '" + dir.string() + "' && " + env + " '" CONSERVD_BINARY "' " + args + " >out.txt 2>err.txt";
        int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    std::string read(const std::string& file) const {
        std::ifstream f(dir / file, std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }
    nlohmann::json json(const std::string& file) const { return nlohmann::json::parse(read(file)); }
};

std::vector<double> escape_curve(const nlohmann::json& j) {
    std::vector<double> p;
    for (const auto& r : j.at("estimate").at("rungs")) p.push_back(r.at("p").get<double>());
    return p;
}

}  // namespace

TEST_CASE("analyze exit codes") {
    Sandbox s("analyze");
    CHECK(s.run("analyze --registry brownian --criterion g1iii") == 0);
    CHECK(s.json("analyze.json").at("exit_code") == 0);
    CHECK(s.run("analyze --registry gim-trutnau-2d --criterion g1i --C 5 --beta 1 --alpha 0.8") == 0);
    CHECK(s.run("analyze --registry gim-trutnau-2d --zero-drift --criterion g1i --auto") == 2);
    auto v = s.json("analyze.json").at("criteria").at(0);
    CHECK(v.at("verdict") == "violated");
    CHECK(v.at("witness").at("point").is_array());
}

TEST_CASE("configuration errors exit with 64") {
    Sandbox s("config");
    CHECK(s.run("analyze --registry nonesuch") == 64);
    CHECK(s.run("analyze") == 64);
    CHECK(s.run("analyze --registry brownian --A 1 0 0 1") == 64);
    CHECK(s.run("analyze --registry brownian --criterion nonesuch") == 64);
    {
        std::ofstream f(s.dir / "bad.toml");
        f << "[problem]\nregistry = \"brownian\"\ncolour = 3\n";
    }
    CHECK(s.run("analyze --config bad.toml") == 64);
    CHECK(s.read("err.txt").find("colour") != std::string::npos);
    CHECK(s.run("analyze --config missing.toml") == 64);
}

TEST_CASE("config file with command-line override") {
    Sandbox s("override");
    {
        std::ofstream f(s.dir / "run.toml");
        f << "[problem]\nregistry = \"brownian\"\n[criteria]\ncriterion = \"g1iii\"\n[sampling]\nseed = 11\nsamples = 500\n";
    }
    CHECK(s.run("analyze --config run.toml") == 0);
    CHECK(s.json("analyze.json").at("sampling").at("seed") == 11);
    CHECK(s.run("analyze --config run.toml --seed 12") == 0);
    CHECK(s.json("analyze.json").at("sampling").at("seed") == 12);
    CHECK(s.run("analyze --config run.toml", "CONSERVD_SEED=13") == 0);
    CHECK(s.json("analyze.json").at("sampling").at("seed") == 13);
    CHECK(s.run("analyze --config run.toml --seed 14", "CONSERVD_SEED=13") == 0);
    CHECK(s.json("analyze.json").at("sampling").at("seed") == 14);
}

TEST_CASE("feller exit codes") {
    Sandbox s("feller");
    CHECK(s.run("feller --registry gim-trutnau-1d") == 0);
    auto j = s.json("feller.json").at("feller");
    CHECK(j.dump().find("diverges") != std::string::npos);
    CHECK(s.run("feller --A 1 --phi 1") == 0);
    CHECK(s.run("feller --A \"(1+x1^2)^2\" --phi 1") == 2);
    CHECK(s.run("feller --registry brownian") == 64);
    CHECK(s.read("feller.csv").rfind("side,L,h,Phi,Phi_alt\n", 0) == 0);
}

TEST_CASE("reports are byte-identical across runs") {
    Sandbox s("determinism");
    const std::string args = "analyze --registry gim-trutnau-1d --criterion cor13i --C 3 --beta 1 --alpha 5/6 "
                             "--samples 2000 --seed 5 --json a.json --csv a.csv";
    CHECK(s.run(args) == 0);
    std::string j1 = s.read("a.json"), c1 = s.read("a.csv");
    CHECK(s.run(args) == 0);
    CHECK(s.read("a.json") == j1);
    CHECK(s.read("a.csv") == c1);
    CHECK_FALSE(j1.empty());
    CHECK(c1.rfind("n,a_n,b_n,c_n,vol_n,bnorm_n,A_hat_n,log_q_n\n", 0) == 0);
}

TEST_CASE("output directory and plot-data") {
    Sandbox s("outdir");
    CHECK(s.run("plot-data --registry brownian --criterion g1iii --samples 500 --out-dir out") == 0);
    CHECK(fs::exists(s.dir / "out" / "plot.csv"));
    CHECK_FALSE(fs::exists(s.dir / "out" / "analyze.json"));
}

TEST_CASE("simulate Brownian motion") {
    Sandbox s("sim_bm");
    CHECK(s.run("simulate --registry brownian --paths 20000 --T 1 --radii 2,4,8") == 0);
    auto p = escape_curve(s.json("simulate.json"));
    REQUIRE(p.size() == 3);
    CHECK(p[0] > p[1]);
    CHECK(p[1] >= p[2]);
    CHECK(s.read("simulate.csv").rfind("radius,escaped,p,lo,hi\n", 0) == 0);
}

TEST_CASE("simulate the one-dimensional example") {
    Sandbox s("sim_1d");
    CHECK(s.run("simulate --registry gim-trutnau-1d --paths 10000") == 0);
    auto p = escape_curve(s.json("simulate.json"));
    REQUIRE(p.size() >= 2);
    for (std::size_t k = 1; k < p.size(); ++k) CHECK(p[k] <= p[k - 1]);
    CHECK(p.back() < p.front());
}

TEST_CASE("simulate the two-dimensional time-change example") {
    // Expected: a finished run whose escape probability at the largest radius stays below 5%.
    Sandbox s("sim_2d");
    CHECK(s.run("simulate --registry gim-trutnau-2d --paths 100000 --T 0.5") == 0);
    if (fs::exists(s.dir / "simulate.json")) {
        auto p = escape_curve(s.json("simulate.json"));
        REQUIRE_FALSE(p.empty());
        CHECK(p.back() < 0.05);
    }
}

TEST_CASE("examples") {
    Sandbox s("examples");
    CHECK(s.run("examples brownian --json ex.json") == 0);
    auto j = s.json("ex.json");
    CHECK(j.at("report_version") == 1);
    CHECK(s.run("examples gim-trutnau-1d") == 0);
    CHECK(s.read("out.txt").find("cor13i") != std::string::npos);
    CHECK(s.run("examples nonesuch") == 64);
}
