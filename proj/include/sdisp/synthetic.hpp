#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "sdisp/ingest.hpp"

namespace sdisp {

// Deterministic random source for the synthetic suites: mt19937_64 plus
// home-grown uniform/normal transforms, so streams reproduce bit-for-bit
// across platforms and standard libraries (std distributions do not).
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }
    double uniform01(); // [0, 1), 53-bit resolution
    double normal();    // standard normal, Box-Muller pair cache

    // Independent per-stream seed (splitmix64 mix), for seed-splitting across
    // stocks or Monte Carlo replications.
    static uint64_t derive(uint64_t seed, uint64_t stream);

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

struct IntradayPanelSpec {
    int n_stocks = 100;
    int n_days = 21;
    int k = 78; // returns per day
    double volatility_scale = 0.02; // daily diffusive volatility
    // Per-stock jump sign bias: stock s jumps positive with probability
    // (1 + a_s)/2 where a_s = +skew_mix for even s and -skew_mix for odd s.
    // 0 gives one symmetric population; > 0 two opposite-signed populations.
    double skew_mix = 0.0;
    uint64_t seed = 0;
    Date first_day{2015, 1, 2}; // trading days advance over weekdays
};

std::vector<IntradayReturnGrid> generate_intraday_panel(const IntradayPanelSpec& spec);

// Writes grids back out as a bar file (prices at each grid boundary),
// round-trippable through parse_bar_file / build_return_grid.
void write_bar_file(std::ostream& out, std::span<const IntradayReturnGrid> grids, double base_price = 100.0);

struct PredictiveDgpSpec {
    int months = 240;
    double beta = 0.0;
    double predictor_autocorr = 0.0; // rho in [0,1)
    double noise_vol = 0.045;
    uint64_t seed = 0;
    YearMonth first{2000, 1};
    double risk_free = 0.002; // constant simple monthly rate
};

struct PredictiveDgp {
    MonthlyPredictorSeries predictor; // x_t, unit-variance AR(1) innovations
    MonthlyMarketSeries market;       // r_{t+1} = beta x_t + noise
};

PredictiveDgp generate_predictive_dgp(const PredictiveDgpSpec& spec);

// Independent brute-force oracle for the daily moments: direct summation in
// extended precision, sharing no code with the production kernels.
struct OracleMoments {
    double rv = 0.0;
    double rs = 0.0;
    double rk = 0.0;
};
OracleMoments oracle_moments(std::span<const double> returns);

} // namespace sdisp
