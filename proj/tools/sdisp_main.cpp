// sdisp — skewness-dispersion research pipeline.
//
// Subcommands: init, simulate, moments, dispersion, regress, oos, backtest.
// Every stage reads a flat key=value config, validates it completely before
// doing any work, and writes deterministic text outputs under --out.

#include "CLI11.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <fcntl.h>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sdisp/allocation.hpp"
#include "sdisp/dates.hpp"
#include "sdisp/dispersion.hpp"
#include "sdisp/error.hpp"
#include "sdisp/ingest.hpp"
#include "sdisp/io_util.hpp"
#include "sdisp/moments.hpp"
#include "sdisp/oos.hpp"
#include "sdisp/regression.hpp"
#include "sdisp/synthetic.hpp"

namespace fs = std::filesystem;
using namespace sdisp;

namespace {

// ===========================================================================
// Config
// ===========================================================================

struct PercentilePair {
    double a, b;
};

struct RunConfig {
    fs::path config_dir;

    std::string bars, market, controls_dir, trading_calendar, nber_calendar, fomc_calendar, sentiment;
    std::string out = "out";
    std::string predictors; // comma-separated files or a directory; default <out>/predictors
    int threads = 0;

    std::vector<std::string> moments{"skew", "kurt"};
    std::vector<PercentilePair> pairs{{95, 5}, {90, 10}, {85, 15}, {80, 20}, {75, 25}};
    std::vector<Aggregation> aggregations{Aggregation::kMean, Aggregation::kMedian};
    std::vector<int> horizons{1, 3, 6, 12};
    YearMonth oos_start{2005, 12};
    int min_breadth = kDefaultMinBreadth;
    int min_valid_count = kDefaultMinValidCount;
    double gamma = 3.0;
    double weight_floor = -0.5;
    double weight_cap = 1.5;

    uint64_t seed = 42;
    int sim_stocks = 500;
    int sim_days = 252;
    double sim_volatility = 0.02;
    double sim_skew_mix = 0.6;
    int sim_months = 600;
    double sim_beta = -0.1;
    double sim_rho = 0.5;
    double sim_noise_vol = 0.4359;

    std::string resolve(const std::string& p) const {
        if (p.empty()) return p;
        fs::path path(p);
        return path.is_absolute() ? path.string() : (config_dir / path).string();
    }
    fs::path out_dir() const { return resolve(out); }
};

const char* kConfigTemplate = R"(# sdisp run configuration. One "key = value" per line; '#' starts a comment.
# Relative paths are resolved against this file's directory.

# --- inputs -----------------------------------------------------------------
bars = out/data/bars.csv          # intraday bars: TICKER,YYYY-MM-DD,HH:MM,PRICE (header optional)
market = out/data/market.csv      # monthly market: YYYY-MM,log_excess_return,risk_free
controls_dir =                    # optional: directory of YYYY-MM,value control series
trading_calendar =                # optional: YYYY-MM-DD per line; ",half" suffix marks half days (excluded)
nber_calendar =                   # optional: recession months, YYYY-MM per line
fomc_calendar =                   # optional: FOMC meeting months, YYYY-MM per line
sentiment =                       # optional: YYYY-MM,value series for regime splits

# --- outputs ----------------------------------------------------------------
out = out                         # output directory (also --out)
threads = 0                       # OpenMP threads; 0 = all cores (also --threads)

# --- dispersion construction -------------------------------------------------
moment = both                     # skew | kurt | both
percentile_pairs = 95-5,90-10,85-15,80-20,75-25
aggregations = mean,median        # last-five-trading-days aggregation
min_breadth = 100                 # minimum names per daily cross-section
min_valid_count = 10              # minimum trade-backed grid points per stock-day

# --- regressions / out-of-sample ---------------------------------------------
horizons = 1,3,6,12               # forecast horizons, months
oos_start = 2005-12               # first expanding-window estimation endpoint
predictors =                      # regression predictor series; default: <out>/predictors

# --- allocation ---------------------------------------------------------------
gamma = 3                         # relative risk aversion
weight_floor = -0.5
weight_cap = 1.5

# --- simulate ------------------------------------------------------------------
seed = 42                         # also --seed
sim_stocks = 500
sim_days = 252
sim_volatility = 0.02
sim_skew_mix = 0.6
sim_months = 600                  # length of the monthly synthetic market/predictor set
sim_beta = -0.1
sim_rho = 0.5
sim_noise_vol = 0.4359
)";

std::map<std::string, std::string, std::less<>> parse_kv(const std::string& text) {
    std::map<std::string, std::string, std::less<>> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        const std::size_t eq = sv.find('=');
        if (eq == std::string_view::npos)
            raise(Errc::kValidation, "config line " + std::to_string(lineno) + ": expected key = value");
        std::string key(trim(sv.substr(0, eq)));
        std::string_view val = sv.substr(eq + 1);
        const std::size_t hash = val.find('#');
        if (hash != std::string_view::npos) val = val.substr(0, hash);
        kv[key] = std::string(trim(val));
    }
    return kv;
}

template <typename F>
void take(std::map<std::string, std::string, std::less<>>& kv, const char* key, F&& apply) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    if (!it->second.empty()) apply(it->second);
    kv.erase(it);
}

double want_double(const std::string& v, const char* key) {
    double d;
    if (!parse_double(v, d)) raise(Errc::kValidation, std::string("config key '") + key + "': bad number '" + v + "'");
    return d;
}

int want_int(const std::string& v, const char* key) {
    int i;
    if (!parse_int(v, i)) raise(Errc::kValidation, std::string("config key '") + key + "': bad integer '" + v + "'");
    return i;
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    fs::path p(path);
    if (!fs::exists(p)) raise(Errc::kValidation, "config file '" + path + "' does not exist");
    cfg.config_dir = fs::absolute(p).parent_path();
    auto kv = parse_kv(read_file(path));

    take(kv, "bars", [&](const std::string& v) { cfg.bars = v; });
    take(kv, "market", [&](const std::string& v) { cfg.market = v; });
    take(kv, "controls_dir", [&](const std::string& v) { cfg.controls_dir = v; });
    take(kv, "trading_calendar", [&](const std::string& v) { cfg.trading_calendar = v; });
    take(kv, "nber_calendar", [&](const std::string& v) { cfg.nber_calendar = v; });
    take(kv, "fomc_calendar", [&](const std::string& v) { cfg.fomc_calendar = v; });
    take(kv, "sentiment", [&](const std::string& v) { cfg.sentiment = v; });
    take(kv, "out", [&](const std::string& v) { cfg.out = v; });
    take(kv, "predictors", [&](const std::string& v) { cfg.predictors = v; });
    take(kv, "threads", [&](const std::string& v) { cfg.threads = want_int(v, "threads"); });

    take(kv, "moment", [&](const std::string& v) {
        if (v == "both")
            cfg.moments = {"skew", "kurt"};
        else if (v == "skew" || v == "kurt")
            cfg.moments = {v};
        else
            raise(Errc::kValidation, "config key 'moment': want skew|kurt|both, got '" + v + "'");
    });
    take(kv, "percentile_pairs", [&](const std::string& v) {
        cfg.pairs.clear();
        for (std::string_view tok : split(v, ',')) {
            auto ab = split(trim(tok), '-');
            if (ab.size() != 2) raise(Errc::kValidation, "config key 'percentile_pairs': bad pair '" + std::string(tok) + "'");
            PercentilePair pp{want_double(std::string(ab[0]), "percentile_pairs"),
                              want_double(std::string(ab[1]), "percentile_pairs")};
            if (!(pp.a > 50.0 && pp.a <= 100.0 && pp.b >= 0.0 && pp.b < 50.0))
                raise(Errc::kValidation, "config key 'percentile_pairs': need a in (50,100], b in [0,50)");
            cfg.pairs.push_back(pp);
        }
        if (cfg.pairs.empty()) raise(Errc::kValidation, "config key 'percentile_pairs': empty");
    });
    take(kv, "aggregations", [&](const std::string& v) {
        cfg.aggregations.clear();
        for (std::string_view tok : split(v, ',')) {
            std::string_view t = trim(tok);
            if (t == "mean")
                cfg.aggregations.push_back(Aggregation::kMean);
            else if (t == "median")
                cfg.aggregations.push_back(Aggregation::kMedian);
            else
                raise(Errc::kValidation, "config key 'aggregations': want mean|median");
        }
        if (cfg.aggregations.empty()) raise(Errc::kValidation, "config key 'aggregations': empty");
    });
    take(kv, "horizons", [&](const std::string& v) {
        cfg.horizons.clear();
        for (std::string_view tok : split(v, ',')) {
            int h = want_int(std::string(trim(tok)), "horizons");
            if (h < 1) raise(Errc::kValidation, "config key 'horizons': must be positive");
            cfg.horizons.push_back(h);
        }
        if (cfg.horizons.empty()) raise(Errc::kValidation, "config key 'horizons': empty");
    });
    take(kv, "oos_start", [&](const std::string& v) {
        try {
            cfg.oos_start = parse_year_month(v);
        } catch (const Error& e) {
            raise(Errc::kValidation, std::string("config key 'oos_start': ") + e.what());
        }
    });
    take(kv, "min_breadth", [&](const std::string& v) { cfg.min_breadth = want_int(v, "min_breadth"); });
    take(kv, "min_valid_count", [&](const std::string& v) { cfg.min_valid_count = want_int(v, "min_valid_count"); });
    take(kv, "gamma", [&](const std::string& v) { cfg.gamma = want_double(v, "gamma"); });
    take(kv, "weight_floor", [&](const std::string& v) { cfg.weight_floor = want_double(v, "weight_floor"); });
    take(kv, "weight_cap", [&](const std::string& v) { cfg.weight_cap = want_double(v, "weight_cap"); });
    take(kv, "seed", [&](const std::string& v) {
        long long s;
        try {
            s = std::stoll(v);
        } catch (...) {
            raise(Errc::kValidation, "config key 'seed': bad integer '" + v + "'");
        }
        cfg.seed = uint64_t(s);
    });
    take(kv, "sim_stocks", [&](const std::string& v) { cfg.sim_stocks = want_int(v, "sim_stocks"); });
    take(kv, "sim_days", [&](const std::string& v) { cfg.sim_days = want_int(v, "sim_days"); });
    take(kv, "sim_volatility", [&](const std::string& v) { cfg.sim_volatility = want_double(v, "sim_volatility"); });
    take(kv, "sim_skew_mix", [&](const std::string& v) { cfg.sim_skew_mix = want_double(v, "sim_skew_mix"); });
    take(kv, "sim_months", [&](const std::string& v) { cfg.sim_months = want_int(v, "sim_months"); });
    take(kv, "sim_beta", [&](const std::string& v) { cfg.sim_beta = want_double(v, "sim_beta"); });
    take(kv, "sim_rho", [&](const std::string& v) { cfg.sim_rho = want_double(v, "sim_rho"); });
    take(kv, "sim_noise_vol", [&](const std::string& v) { cfg.sim_noise_vol = want_double(v, "sim_noise_vol"); });

    // Empty values are tolerated (documented defaults); unknown keys are not.
    for (auto& [k, v] : kv)
        if (!v.empty()) raise(Errc::kValidation, "unknown config key '" + k + "'");

    if (cfg.gamma <= 0.0) raise(Errc::kValidation, "gamma must be positive");
    if (!(cfg.weight_floor < cfg.weight_cap)) raise(Errc::kValidation, "weight_floor must be below weight_cap");
    return cfg;
}

void require_file(const std::string& path, const char* what) {
    if (path.empty()) raise(Errc::kValidation, std::string(what) + " path not configured");
    if (!fs::exists(path)) raise(Errc::kValidation, std::string(what) + " file '" + path + "' does not exist");
}

// ===========================================================================
// Output-directory lock (single-entrant per out dir)
// ===========================================================================

class OutDirLock {
public:
    explicit OutDirLock(const fs::path& out_dir) : path_(out_dir / ".sdisp.lock") {
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0)
            raise(Errc::kValidation,
                  "output directory is locked by another run (" + path_.string() + " exists)");
    }
    ~OutDirLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            std::error_code ec;
            fs::remove(path_, ec);
        }
    }
    OutDirLock(const OutDirLock&) = delete;
    OutDirLock& operator=(const OutDirLock&) = delete;

private:
    fs::path path_;
    int fd_ = -1;
};

void apply_threads(const RunConfig& cfg) {
#ifdef _OPENMP
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif
}

// ===========================================================================
// Shared loading helpers
// ===========================================================================

MonthlyMarketSeries load_market(const RunConfig& cfg) {
    const std::string path = cfg.resolve(cfg.market);
    require_file(path, "market");
    std::ifstream in(path);
    return load_market_series(in);
}

std::vector<MonthlyPredictorSeries> load_series_dir(const std::string& dir) {
    std::vector<MonthlyPredictorSeries> out;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
        std::ifstream in(f);
        out.push_back(load_predictor_series(in, f.stem().string()));
    }
    return out;
}

std::vector<MonthlyPredictorSeries> load_predictors(const RunConfig& cfg) {
    std::vector<MonthlyPredictorSeries> out;
    if (cfg.predictors.empty()) {
        const std::string dir = (cfg.out_dir() / "predictors").string();
        if (!fs::is_directory(dir))
            raise(Errc::kValidation, "no predictors configured and '" + dir + "' is not a directory");
        out = load_series_dir(dir);
    } else {
        for (std::string_view tok : split(cfg.predictors, ',')) {
            const std::string path = cfg.resolve(std::string(trim(tok)));
            if (fs::is_directory(path)) {
                auto sub = load_series_dir(path);
                out.insert(out.end(), std::make_move_iterator(sub.begin()), std::make_move_iterator(sub.end()));
                continue;
            }
            require_file(path, "predictor");
            std::ifstream in(path);
            out.push_back(load_predictor_series(in, fs::path(path).stem().string()));
        }
    }
    if (out.empty()) raise(Errc::kValidation, "no predictor series found");
    return out;
}

std::optional<EventCalendar> load_calendar_opt(const RunConfig& cfg, const std::string& raw, CalendarLabel label) {
    if (raw.empty()) return std::nullopt;
    const std::string path = cfg.resolve(raw);
    require_file(path, "calendar");
    std::ifstream in(path);
    return load_calendar(in, label);
}

std::optional<MonthlyPredictorSeries> load_sentiment_opt(const RunConfig& cfg) {
    if (cfg.sentiment.empty()) return std::nullopt;
    const std::string path = cfg.resolve(cfg.sentiment);
    require_file(path, "sentiment");
    std::ifstream in(path);
    return load_predictor_series(in, "sentiment");
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) raise(Errc::kIo, "cannot create '" + p.string() + "'");
    return out;
}

// ===========================================================================
// init / simulate
// ===========================================================================

int cmd_init(const std::string& config_path, bool force) {
    if (fs::exists(config_path) && !force)
        raise(Errc::kValidation, "'" + config_path + "' exists; use --force to overwrite");
    write_file(config_path, kConfigTemplate);
    std::cout << "wrote " << config_path << "\n";
    return 0;
}

int cmd_simulate(const RunConfig& cfg) {
    const fs::path out = cfg.out_dir();
    const fs::path data = out / "data";
    fs::create_directories(data / "controls");
    fs::create_directories(data / "predictors");
    OutDirLock lock(out);

    // Intraday panel -> bar file.
    IntradayPanelSpec pspec;
    pspec.n_stocks = cfg.sim_stocks;
    pspec.n_days = cfg.sim_days;
    pspec.volatility_scale = cfg.sim_volatility;
    pspec.skew_mix = cfg.sim_skew_mix;
    pspec.seed = cfg.seed;
    const auto grids = generate_intraday_panel(pspec);
    {
        auto f = open_out(data / "bars.csv");
        write_bar_file(f, grids);
    }

    // Long monthly DGP for the regression/oos/backtest stages.
    PredictiveDgpSpec dspec;
    dspec.months = cfg.sim_months;
    dspec.beta = cfg.sim_beta;
    dspec.predictor_autocorr = cfg.sim_rho;
    dspec.noise_vol = cfg.sim_noise_vol;
    dspec.seed = Rng::derive(cfg.seed, 0x6d6f6e);
    PredictiveDgp dgp = generate_predictive_dgp(dspec);
    dgp.predictor.name = "sim_x";
    {
        auto f = open_out(data / "market.csv");
        write_market_series(f, dgp.market);
    }
    {
        auto f = open_out(data / "predictors" / "sim_x.csv");
        write_predictor_series(f, dgp.predictor);
    }

    // Controls: an independent persistent series and pure noise.
    {
        PredictiveDgpSpec cspec;
        cspec.months = cfg.sim_months;
        cspec.beta = 0.0;
        cspec.predictor_autocorr = 0.9;
        cspec.noise_vol = 1.0;
        cspec.seed = Rng::derive(cfg.seed, 0x637472);
        PredictiveDgp c = generate_predictive_dgp(cspec);
        c.predictor.name = "ctl_ar";
        auto f = open_out(data / "controls" / "ctl_ar.csv");
        write_predictor_series(f, c.predictor);
    }
    {
        Rng rng(Rng::derive(cfg.seed, 0x6e6f69));
        MonthlyPredictorSeries noise;
        noise.name = "ctl_noise";
        for (int t = 0; t < cfg.sim_months; ++t)
            noise.observations.emplace_back(dgp.market.first + t, rng.normal());
        auto f = open_out(data / "controls" / "ctl_noise.csv");
        write_predictor_series(f, noise);
    }

    // Event calendars and a sentiment series spanning the monthly sample.
    {
        Rng rng(Rng::derive(cfg.seed, 0x63616c));
        EventCalendar fomc{CalendarLabel::kFomcMeeting, {}};
        for (int t = 0; t < cfg.sim_months; ++t)
            if (rng.uniform01() < 0.5) fomc.months.insert(dgp.market.first + t);
        auto f = open_out(data / "fomc.csv");
        write_calendar(f, fomc);

        EventCalendar nber{CalendarLabel::kNberRecession, {}};
        const int start = cfg.sim_months / 3;
        for (int t = start; t < start + cfg.sim_months / 10; ++t) nber.months.insert(dgp.market.first + t);
        auto g = open_out(data / "nber.csv");
        write_calendar(g, nber);

        MonthlyPredictorSeries senti;
        senti.name = "sentiment";
        double level = 0.0;
        for (int t = 0; t < cfg.sim_months; ++t) {
            level = 0.95 * level + rng.normal();
            senti.observations.emplace_back(dgp.market.first + t, level);
        }
        auto h = open_out(data / "sentiment.csv");
        write_predictor_series(h, senti);
    }

    std::cout << "simulate: " << grids.size() << " stock-days -> " << (data / "bars.csv").string() << "\n"
              << "simulate: " << cfg.sim_months << " months -> " << (data / "market.csv").string() << "\n";
    return 0;
}

// ===========================================================================
// moments
// ===========================================================================

int cmd_moments(const RunConfig& cfg) {
    const std::string bars = cfg.resolve(cfg.bars);
    require_file(bars, "bars");
    std::optional<TradingCalendarFile> calendar;
    if (!cfg.trading_calendar.empty()) {
        const std::string path = cfg.resolve(cfg.trading_calendar);
        require_file(path, "trading_calendar");
        std::ifstream in(path);
        calendar = load_trading_calendar(in);
    }
    const fs::path out = cfg.out_dir();
    fs::create_directories(out);
    OutDirLock lock(out);

    const auto t_start = std::chrono::steady_clock::now();
    TickTable table = load_bar_file(bars);
    const auto groups = group_ticker_days(table);

    std::size_t half_day_excluded = 0, liquidity_excluded = 0;
    std::vector<IntradayReturnGrid> grids;
    {
        const std::size_t n = groups.size();
        std::vector<IntradayReturnGrid> all(n);
        std::vector<char> keep(n, 0);
        std::exception_ptr eptr;
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
            try {
                const TickGroup& g = groups[std::size_t(i)];
                if (calendar && calendar->half_days.count(g.date)) continue; // logged below
                IntradayReturnGrid grid = build_return_grid(table, g);
                if (grid.valid_count < cfg.min_valid_count) {
                    all[std::size_t(i)].valid_count = -1; // liquidity marker
                    continue;
                }
                all[std::size_t(i)] = std::move(grid);
                keep[std::size_t(i)] = 1;
            } catch (...) {
#pragma omp critical
                if (!eptr) eptr = std::current_exception();
            }
        }
        if (eptr) std::rethrow_exception(eptr);
        for (std::size_t i = 0; i < n; ++i) {
            if (keep[i]) {
                grids.push_back(std::move(all[i]));
            } else if (all[i].valid_count == -1) {
                ++liquidity_excluded;
            } else {
                ++half_day_excluded;
            }
        }
    }

    MomentPanel panel = build_moment_panel(std::move(grids));
    {
        auto f = open_out(out / "panel.csv");
        write_panel(f, panel);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    std::cout << "moments: " << table.stats.parsed << " ticks (" << table.stats.malformed_lines.size()
              << " malformed lines), " << groups.size() << " stock-days\n"
              << "moments: " << panel.report.processed << " records, " << liquidity_excluded
              << " excluded (liquidity < " << cfg.min_valid_count << "), " << panel.report.excluded_zero_variance
              << " excluded (zero variance), " << half_day_excluded << " excluded (half day)\n"
              << "moments: wall time " << format_num(secs) << " s -> " << (out / "panel.csv").string() << "\n";
    return 0;
}

// ===========================================================================
// dispersion
// ===========================================================================

int cmd_dispersion(const RunConfig& cfg) {
    const fs::path out = cfg.out_dir();
    const fs::path panel_path = out / "panel.csv";
    if (!fs::exists(panel_path))
        raise(Errc::kValidation, "panel '" + panel_path.string() + "' not found; run moments first");
    std::optional<TradingCalendarFile> calfile;
    if (!cfg.trading_calendar.empty()) {
        const std::string path = cfg.resolve(cfg.trading_calendar);
        require_file(path, "trading_calendar");
        std::ifstream in(path);
        calfile = load_trading_calendar(in);
    }
    OutDirLock lock(out);

    MomentPanel panel;
    {
        std::ifstream in(panel_path);
        panel = read_panel(in);
    }

    // Month identity: explicit exchange calendar when supplied, otherwise the
    // panel's own dates.
    TradingCalendar calendar;
    if (calfile) {
        calendar = calfile->calendar;
    } else {
        std::vector<Date> days;
        for (const auto& r : panel.records)
            if (days.empty() || days.back() != r.date) days.push_back(r.date);
        calendar = TradingCalendar::from_days(std::move(days));
    }

    fs::create_directories(out / "predictors");
    auto longf = open_out(out / "dispersion_long.csv");
    longf << "month,moment,upper,lower,aggregation,value\n";

    std::size_t n_series = 0;
    for (const std::string& mname : cfg.moments) {
        const Moment moment = mname == "skew" ? Moment::kSkewness : Moment::kKurtosis;
        const auto snaps = cross_sections(panel, moment);
        for (const PercentilePair& pp : cfg.pairs) {
            const auto daily = daily_dispersion_series(snaps, pp.a, pp.b, cfg.min_breadth);
            for (Aggregation agg : cfg.aggregations) {
                DispersionSeries series;
                series.moment = moment;
                series.upper_pct = pp.a;
                series.lower_pct = pp.b;
                series.aggregation = agg;
                series.observations = monthly_aggregate(daily, calendar, agg);
                auto f = open_out(out / "predictors" / (series.name() + ".csv"));
                for (const auto& [ym, v] : series.observations) {
                    f << format_year_month(ym) << ',' << format_num(v) << '\n';
                    longf << format_year_month(ym) << ',' << moment_name(moment) << ',' << format_num(pp.a) << ','
                          << format_num(pp.b) << ',' << aggregation_name(agg) << ',' << format_num(v) << '\n';
                }
                ++n_series;
            }
        }
    }
    std::cout << "dispersion: " << n_series << " series -> " << (out / "predictors").string() << "\n";
    return 0;
}

// ===========================================================================
// regress
// ===========================================================================

void write_regression_row(std::ostream& out, const PredictiveRegressionResult& r) {
    out << r.predictor << ',' << method_name(r.method) << ',' << r.sample_filter << ',' << r.horizon << ','
        << format_num(r.alpha);
    for (std::size_t i = 0; i < r.betas.size(); ++i)
        out << ',' << format_num(r.betas[i]) << ',' << format_num(r.tstats[i]);
    out << ',' << format_num(r.adj_r2) << ',' << r.n_obs << '\n';
}

int cmd_regress(const RunConfig& cfg) {
    const MonthlyMarketSeries market = load_market(cfg);
    const std::vector<MonthlyPredictorSeries> predictors = load_predictors(cfg);
    std::vector<MonthlyPredictorSeries> controls;
    if (!cfg.controls_dir.empty()) {
        const std::string dir = cfg.resolve(cfg.controls_dir);
        if (!fs::is_directory(dir)) raise(Errc::kValidation, "controls_dir '" + dir + "' is not a directory");
        controls = load_series_dir(dir);
    }
    const auto nber = load_calendar_opt(cfg, cfg.nber_calendar, CalendarLabel::kNberRecession);
    const auto fomc = load_calendar_opt(cfg, cfg.fomc_calendar, CalendarLabel::kFomcMeeting);
    const auto sentiment = load_sentiment_opt(cfg);
    const fs::path out = cfg.out_dir();
    fs::create_directories(out);
    OutDirLock lock(out);

    std::vector<SampleFilter> filters{SampleFilter::full()};
    if (nber) filters.push_back(SampleFilter::exclude_months(nber->months, "ex_nber"));
    if (sentiment) {
        filters.push_back(SampleFilter::regime(*sentiment, RegimeRule::kAboveMedian, "sentiment_high"));
        filters.push_back(SampleFilter::regime(*sentiment, RegimeRule::kBelowMedian, "sentiment_low"));
    }

    // A filter can leave too few observations (thin FOMC partitions and the
    // like); such rows are skipped and counted rather than aborting the table.
    std::size_t skipped = 0;
    auto emit = [&skipped](std::ostream& os, auto&& run) {
        try {
            write_regression_row(os, run());
        } catch (const Error& e) {
            if (e.code() != Errc::kInsufficientSample) throw;
            ++skipped;
        }
    };

    auto uni = open_out(out / "regress_univariate.csv");
    uni << "predictor,method,filter,h,alpha,beta1,t1,adj_r2,n_obs\n";
    for (const MonthlyPredictorSeries& p : predictors) {
        const MonthlySeriesView view(p);
        for (int h : cfg.horizons) {
            for (const SampleFilter& f : filters) {
                emit(uni, [&] { return run_univariate(view, market, h, f); });
                emit(uni, [&] { return run_nonoverlapping(view, market, h, f); });
                emit(uni, [&] { return run_ivx(view, market, h, f); });
            }
        }
        if (fomc && !fomc->months.empty() && !p.observations.empty()) {
            // One-month-ahead regressions on the FOMC partition.
            const auto parts = partition_fomc(p.observations.front().first, p.observations.back().first, *fomc);
            for (const SampleFilter& f : parts) emit(uni, [&] { return run_univariate(view, market, 1, f); });
        }
    }

    if (!controls.empty()) {
        auto bi = open_out(out / "regress_bivariate.csv");
        bi << "predictor,method,filter,h,alpha,beta1,t1,beta2,t2,adj_r2,n_obs\n";
        const SampleFilter full = SampleFilter::full();
        for (const MonthlyPredictorSeries& p : predictors) {
            const MonthlySeriesView view(p);
            for (const MonthlyPredictorSeries& c : controls) {
                const MonthlySeriesView cview(c);
                for (int h : cfg.horizons) {
                    emit(bi, [&] { return run_bivariate(view, cview, market, h, full); });
                    emit(bi, [&] { return run_ivx(view, cview, market, h, full); });
                }
            }
        }
    }
    std::cout << "regress: " << predictors.size() << " predictors x " << cfg.horizons.size() << " horizons, "
              << controls.size() << " controls, " << skipped << " rows skipped (insufficient sample)\n";
    return 0;
}

// ===========================================================================
// oos
// ===========================================================================

std::string sanitize(const std::string& name) {
    std::string s = name;
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = '_';
    return s;
}

void write_forecasts(const fs::path& path, std::span<const ForecastRecord> records) {
    auto f = open_out(path);
    f << "month,h,model,benchmark,realized\n";
    for (const ForecastRecord& r : records) {
        f << format_year_month(r.origin) << ',' << r.horizon << ',' << format_num(r.model) << ','
          << format_num(r.benchmark) << ',';
        if (r.realized) f << format_num(*r.realized);
        f << '\n';
    }
}

int cmd_oos(const RunConfig& cfg) {
    const MonthlyMarketSeries market = load_market(cfg);
    const std::vector<MonthlyPredictorSeries> predictors = load_predictors(cfg);
    std::vector<MonthlyPredictorSeries> controls;
    if (!cfg.controls_dir.empty()) {
        const std::string dir = cfg.resolve(cfg.controls_dir);
        if (!fs::is_directory(dir)) raise(Errc::kValidation, "controls_dir '" + dir + "' is not a directory");
        controls = load_series_dir(dir);
    }
    const fs::path out = cfg.out_dir();
    fs::create_directories(out);
    OutDirLock lock(out);

    auto summary = open_out(out / "oos_summary.csv");
    summary << "predictor,h,r2_oos,cw_t,lambda,lambda_t\n";

    for (const MonthlyPredictorSeries& p : predictors) {
        const MonthlySeriesView view(p);
        for (int h : cfg.horizons) {
            const auto records = expanding_forecasts(view, std::nullopt, market, h, cfg.oos_start);
            const std::string tag = sanitize(p.name) + "_h" + std::to_string(h);
            write_forecasts(out / ("oos_forecasts_" + tag + ".csv"), records);
            {
                auto f = open_out(out / ("oos_cumsse_" + tag + ".csv"));
                f << "month,cum_diff\n";
                for (const auto& [ym, v] : cumulative_sse_diff(records))
                    f << format_year_month(ym) << ',' << format_num(v) << '\n';
            }
            summary << p.name << ',' << h << ',' << format_num(r2_oos(records)) << ','
                    << format_num(clark_west(records, h)) << ",,\n";
        }
    }

    // Encompassing and bivariate models against the reference predictor
    // (first in the list).
    if (!controls.empty()) {
        const MonthlySeriesView ref(predictors.front());
        for (int h : cfg.horizons) {
            const auto sd_records = expanding_forecasts(ref, std::nullopt, market, h, cfg.oos_start);
            for (const MonthlyPredictorSeries& c : controls) {
                const MonthlySeriesView cview(c);
                const auto c_records = expanding_forecasts(cview, std::nullopt, market, h, cfg.oos_start);
                const EncompassingResult enc = encompassing_test(c_records, sd_records, h);
                summary << c.name << ',' << h << ',' << format_num(r2_oos(c_records)) << ','
                        << format_num(clark_west(c_records, h)) << ',' << format_num(enc.lambda) << ','
                        << format_num(enc.tstat) << '\n';

                const auto bi_records = expanding_forecasts(ref, std::make_optional(cview), market, h, cfg.oos_start);
                summary << predictors.front().name << '+' << c.name << ',' << h << ','
                        << format_num(r2_oos(bi_records)) << ',' << format_num(clark_west(bi_records, h)) << ",,\n";
            }
        }
    }
    std::cout << "oos: " << predictors.size() << " predictors, " << controls.size() << " controls -> "
              << (out / "oos_summary.csv").string() << "\n";
    return 0;
}

// ===========================================================================
// backtest
// ===========================================================================

void write_wealth(const fs::path& path, const BacktestResult& r) {
    auto f = open_out(path);
    f << "month,log_wealth\n";
    for (const auto& [ym, lw] : r.log_wealth) f << format_year_month(ym) << ',' << format_num(lw) << '\n';
}

int cmd_backtest(const RunConfig& cfg) {
    const MonthlyMarketSeries market = load_market(cfg);
    const std::vector<MonthlyPredictorSeries> predictors = load_predictors(cfg);
    const fs::path out = cfg.out_dir();
    fs::create_directories(out);
    OutDirLock lock(out);

    auto table = open_out(out / "backtest.csv");
    table << "predictor,h,cer_gain_bps,sharpe\n";

    for (int h : cfg.horizons) {
        AllocationConfig acfg;
        acfg.gamma = cfg.gamma;
        acfg.weight_floor = cfg.weight_floor;
        acfg.weight_cap = cfg.weight_cap;
        acfg.horizon = h;

        std::optional<BacktestResult> bench;
        for (const MonthlyPredictorSeries& p : predictors) {
            const MonthlySeriesView view(p);
            const auto records = expanding_forecasts(view, std::nullopt, market, h, cfg.oos_start);
            const BacktestResult strat = backtest(records, ForecastSource::kModel, market, acfg);
            if (!bench) {
                bench = backtest(records, ForecastSource::kBenchmark, market, acfg);
                const BacktestResult hold =
                    backtest_fixed_weight(1.0, bench->window_first, bench->window_last, market, acfg);
                table << "hist_avg," << h << ",0," << format_num(bench->sharpe_annualized) << '\n';
                table << "buy_hold," << h << ',' << format_num(cer_gain_annualized_bps(hold, *bench, h)) << ','
                      << format_num(hold.sharpe_annualized) << '\n';
                write_wealth(out / ("wealth_hist_avg_h" + std::to_string(h) + ".csv"), *bench);
                write_wealth(out / ("wealth_buy_hold_h" + std::to_string(h) + ".csv"), hold);
            }
            if (std::isnan(strat.cer_per_period) || std::isnan(strat.sharpe_annualized))
                raise(Errc::kDegenerate, "backtest statistics for '" + p.name + "' are degenerate");
            table << p.name << ',' << h << ',' << format_num(cer_gain_annualized_bps(strat, *bench, h)) << ','
                  << format_num(strat.sharpe_annualized) << '\n';
            write_wealth(out / ("wealth_" + sanitize(p.name) + "_h" + std::to_string(h) + ".csv"), strat);
        }
    }
    std::cout << "backtest: " << predictors.size() << " strategies -> " << (out / "backtest.csv").string() << "\n";
    return 0;
}

} // namespace

// ===========================================================================
// main
// ===========================================================================

int main(int argc, char** argv) {
    CLI::App app{"skewness-dispersion research pipeline"};
    app.require_subcommand(1);

    std::string config_path = "sdisp.conf";
    std::string out_override;
    int threads_override = 0;
    uint64_t seed_override = 0;
    bool have_seed = false, force = false;

    auto add_common = [&](CLI::App* sub, bool with_seed = false) {
        sub->add_option("--config", config_path, "config file path");
        sub->add_option("--out", out_override, "output directory (overrides config)");
        sub->add_option("--threads", threads_override, "OpenMP threads (overrides config)");
        if (with_seed)
            sub->add_option_function<uint64_t>(
                   "--seed", [&](const uint64_t& s) { seed_override = s; have_seed = true; }, "simulation seed")
                ->expected(1);
    };

    CLI::App* c_init = app.add_subcommand("init", "write a documented config template");
    c_init->add_option("--config", config_path, "config file to create");
    c_init->add_flag("--force", force, "overwrite an existing file");
    CLI::App* c_sim = app.add_subcommand("simulate", "generate a synthetic market");
    add_common(c_sim, true);
    CLI::App* c_mom = app.add_subcommand("moments", "bars -> daily realized-moment panel");
    add_common(c_mom);
    CLI::App* c_disp = app.add_subcommand("dispersion", "panel -> monthly dispersion predictors");
    add_common(c_disp);
    CLI::App* c_reg = app.add_subcommand("regress", "in-sample predictive regressions");
    add_common(c_reg);
    CLI::App* c_oos = app.add_subcommand("oos", "out-of-sample evaluation");
    add_common(c_oos);
    CLI::App* c_back = app.add_subcommand("backtest", "mean-variance allocation backtest");
    add_common(c_back);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (app.got_subcommand(c_init)) return cmd_init(config_path, force);

        RunConfig cfg = load_config(config_path);
        if (!out_override.empty()) {
            cfg.out = fs::absolute(out_override).string();
        }
        if (threads_override > 0) cfg.threads = threads_override;
        if (have_seed) cfg.seed = seed_override;
        apply_threads(cfg);

        if (app.got_subcommand(c_sim)) return cmd_simulate(cfg);
        if (app.got_subcommand(c_mom)) return cmd_moments(cfg);
        if (app.got_subcommand(c_disp)) return cmd_dispersion(cfg);
        if (app.got_subcommand(c_reg)) return cmd_regress(cfg);
        if (app.got_subcommand(c_oos)) return cmd_oos(cfg);
        if (app.got_subcommand(c_back)) return cmd_backtest(cfg);
    } catch (const Error& e) {
        std::cerr << "error (" << errc_name(e.code()) << "): " << e.what() << "\n";
        switch (e.code()) {
        case Errc::kValidation: return 1;
        case Errc::kDegenerate: return 3;
        default: return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
