#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "sdisp/io_util.hpp"
#include "sdisp/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

#ifndef SDISP_CLI_PATH
#define SDISP_CLI_PATH "sdisp"
#endif

int run(const std::string& args) {
    const std::string cmd = std::string(SDISP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

// Deterministic content hash of every regular file under a directory.
std::map<std::string, std::size_t> tree_digest(const fs::path& root) {
    std::map<std::string, std::size_t> digest;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        const std::string rel = fs::relative(e.path(), root).string();
        digest[rel] = std::hash<std::string>{}(sdisp::read_file(e.path().string()));
    }
    return digest;
}

struct CliFixture {
    fs::path dir;
    fs::path conf;

    CliFixture() {
        dir = fs::temp_directory_path() / ("sdisp_cli_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        conf = dir / "run.conf";
    }
    ~CliFixture() { fs::remove_all(dir); }

    void write_conf(const std::string& extra) {
        std::ostringstream ss;
        ss << "bars = out/data/bars.csv\n"
           << "market = out/data/market.csv\n"
           << "out = out\n"
           << extra;
        sdisp::write_file(conf.string(), ss.str());
    }
    std::string flag() const { return "--config " + conf.string(); }
};

} // namespace

TEST_CASE("cli: init writes a loadable template and refuses to clobber") {
    CliFixture fx;
    const std::string conf = (fx.dir / "t.conf").string();
    CHECK(run("init --config " + conf) == 0);
    CHECK(fs::exists(conf));
    CHECK(run("init --config " + conf) == 1);          // exists, no --force
    CHECK(run("init --force --config " + conf) == 0);
}

TEST_CASE("cli: validation failures exit 1 before any work") {
    CliFixture fx;
    fx.write_conf("");
    CHECK(run("moments " + fx.flag()) == 1);           // bars path missing
    CHECK(fs::exists(fx.dir / "out" / "panel.csv") == false);

    sdisp::write_file((fx.dir / "bad.conf").string(), "no_such_key = 1\n");
    CHECK(run("moments --config " + (fx.dir / "bad.conf").string()) == 1);

    CHECK(run("moments --config " + (fx.dir / "missing.conf").string()) == 1);
}

TEST_CASE("cli: full chained pipeline, deterministic outputs") {
    CliFixture fx;
    // ~50 months of weekdays so the dispersion predictor can feed the
    // regression and OOS stages end to end.
    fx.write_conf("threads = 2\n"
                  "min_breadth = 10\n"
                  "percentile_pairs = 95-5,75-25\n"
                  "moment = both\n"
                  "horizons = 1\n"
                  "oos_start = 2017-06\n"
                  "sim_stocks = 20\n"
                  "sim_days = 1050\n"
                  "sim_months = 300\n"
                  "seed = 11\n");

    REQUIRE(run("simulate " + fx.flag()) == 0);
    // Market series for regress/oos must cover the bar months: replace the
    // simulated market with one spanning the panel (2015-01 onward).
    {
        std::ostringstream ss;
        sdisp::Rng rng(77);
        for (int t = 0; t < 60; ++t) {
            int y = 2015 + t / 12, m = 1 + t % 12;
            char buf[16];
            std::snprintf(buf, sizeof buf, "%04d-%02d", y, m);
            ss << buf << ',' << sdisp::format_num(0.04 * rng.normal()) << ",0.002\n";
        }
        sdisp::write_file((fx.dir / "out" / "data" / "market.csv").string(), ss.str());
    }

    REQUIRE(run("moments " + fx.flag()) == 0);
    REQUIRE(fs::exists(fx.dir / "out" / "panel.csv"));
    REQUIRE(run("dispersion " + fx.flag()) == 0);

    // 2 pairs x 2 aggregations x 2 moments = 8 predictor series.
    std::size_t n_series = 0;
    for (const auto& e : fs::directory_iterator(fx.dir / "out" / "predictors"))
        if (e.is_regular_file()) ++n_series;
    CHECK(n_series == 8);

    REQUIRE(run("regress " + fx.flag()) == 0);
    REQUIRE(run("oos " + fx.flag()) == 0);
    REQUIRE(run("backtest " + fx.flag()) == 0);
    CHECK(fs::exists(fx.dir / "out" / "regress_univariate.csv"));
    CHECK(fs::exists(fx.dir / "out" / "oos_summary.csv"));
    CHECK(fs::exists(fx.dir / "out" / "backtest.csv"));

    // Re-running the analysis stages reproduces the tree byte for byte.
    auto before = tree_digest(fx.dir / "out");
    REQUIRE(run("moments " + fx.flag()) == 0);
    REQUIRE(run("dispersion " + fx.flag()) == 0);
    REQUIRE(run("regress " + fx.flag()) == 0);
    REQUIRE(run("oos " + fx.flag()) == 0);
    REQUIRE(run("backtest " + fx.flag()) == 0);
    auto after = tree_digest(fx.dir / "out");
    CHECK(before == after);
}

TEST_CASE("cli: degenerate statistic exits 3") {
    CliFixture fx;
    fs::create_directories(fx.dir / "out" / "data");
    // A perfectly constant market makes the historical-average benchmark
    // exact, so MSFE_B == 0 and the out-of-sample R2 is degenerate.
    {
        std::ostringstream mkt, pred;
        sdisp::Rng rng(5);
        for (int t = 0; t < 80; ++t) {
            int y = 2010 + t / 12, m = 1 + t % 12;
            char buf[16];
            std::snprintf(buf, sizeof buf, "%04d-%02d", y, m);
            mkt << buf << ",0.015625,0.001\n"; // dyadic, prefix means exact
            pred << buf << ',' << sdisp::format_num(rng.normal()) << '\n';
        }
        sdisp::write_file((fx.dir / "out" / "data" / "market.csv").string(), mkt.str());
        sdisp::write_file((fx.dir / "noise.csv").string(), pred.str());
    }
    fx.write_conf("horizons = 1\npredictors = noise.csv\noos_start = 2014-01\n");
    CHECK(run("oos " + fx.flag()) == 3);
}

TEST_CASE("cli: output directory lock is single-entrant") {
    CliFixture fx;
    fx.write_conf("sim_stocks = 2\nsim_days = 10\nsim_months = 60\n");
    fs::create_directories(fx.dir / "out");
    sdisp::write_file((fx.dir / "out" / ".sdisp.lock").string(), "");
    CHECK(run("simulate " + fx.flag()) == 1);
    fs::remove(fx.dir / "out" / ".sdisp.lock");
    CHECK(run("simulate " + fx.flag()) == 0);
}
