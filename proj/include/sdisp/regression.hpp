#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sdisp/dates.hpp"
#include "sdisp/dispersion.hpp"
#include "sdisp/ingest.hpp"

namespace sdisp {

// ---------------------------------------------------------------------------
// Horizon returns
// ---------------------------------------------------------------------------

// r_{t,t+h} = (1/h)(r_{t+1} + ... + r_{t+h}), keyed by the forecast-origin
// month t; defined for t up to T-h.
struct HorizonReturnSeries {
    int horizon = 1;
    std::vector<std::pair<YearMonth, double>> observations;
};

HorizonReturnSeries overlapping_returns(const MonthlyMarketSeries& monthly, int horizon);

// ---------------------------------------------------------------------------
// OLS + Newey-West
// ---------------------------------------------------------------------------

struct OlsFit {
    Eigen::VectorXd coef;      // includes intercept (column 0)
    Eigen::VectorXd residuals; // n
    Eigen::MatrixXd xtx_inv;   // (X'X)^{-1}
    Eigen::MatrixXd x;         // kept for HAC
    double r2 = 0.0;
    double adj_r2 = 0.0;
    int n = 0;
    int p = 0;
};

// X must contain the intercept column; rank deficiency -> Error(kCollinearity).
OlsFit ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// Bartlett-kernel HAC t-statistics; lags = 0 reduces to the
// heteroskedasticity-robust (HC0) estimator. Zero residual variance yields
// +/-inf t-statistics.
Eigen::VectorXd newey_west_tstats(const OlsFit& fit, int lags);

// Long-run variance of a scalar series around its mean (Bartlett weights),
// used by the Clark-West and encompassing mean tests.
double newey_west_long_run_variance(std::span<const double> series, int lags);

// ---------------------------------------------------------------------------
// Sample filters
// ---------------------------------------------------------------------------

enum class FilterMode { kFull, kExcludeNber, kCalendarOnly, kRegime };
enum class RegimeRule { kAboveMedian, kBelowMedian };

struct SampleFilter {
    FilterMode mode = FilterMode::kFull;
    std::string description = "full";
    std::set<YearMonth> months;                  // exclusion or restriction set
    std::map<YearMonth, double> conditioning;    // regime series
    RegimeRule rule = RegimeRule::kAboveMedian;
    double median = 0.0;                         // precomputed on the full conditioning sample

    bool admits(YearMonth t) const;

    static SampleFilter full();
    static SampleFilter exclude_months(std::set<YearMonth> months, std::string description);
    static SampleFilter calendar_only(std::set<YearMonth> months, std::string description);
    // Median computed on the conditioning series' full sample; ties go to the
    // above-median side.
    static SampleFilter regime(const MonthlyPredictorSeries& conditioning, RegimeRule rule,
                               std::string description);
};

// FOMC / PRE / POST / NONE partition of [first, last], priority
// FOMC > PRE > POST; union is the whole range.
std::array<SampleFilter, 4> partition_fomc(YearMonth first, YearMonth last, const EventCalendar& fomc);

// ---------------------------------------------------------------------------
// Predictive regressions
// ---------------------------------------------------------------------------

enum class RegressionMethod { kNeweyWestOverlapping, kNonOverlappingAvg, kIvx };
const char* method_name(RegressionMethod m);

// Lightweight view so dispersion series and generic monthly series share the
// regression entry points.
struct MonthlySeriesView {
    std::string name;
    std::span<const std::pair<YearMonth, double>> observations;

    MonthlySeriesView(std::string n, std::span<const std::pair<YearMonth, double>> obs)
        : name(std::move(n)), observations(obs) {}
    MonthlySeriesView(const DispersionSeries& s) : name(s.name()), observations(s.observations) {}
    MonthlySeriesView(const MonthlyPredictorSeries& s) : name(s.name), observations(s.observations) {}
};

struct PredictiveRegressionResult {
    int horizon = 1;
    RegressionMethod method = RegressionMethod::kNeweyWestOverlapping;
    std::string predictor;
    std::string sample_filter;
    double alpha = 0.0;
    std::vector<double> betas;  // one or two slopes
    std::vector<double> tstats; // per slope; for IVX the signed sqrt of the Wald
    std::vector<double> ivx_wald; // empty unless method == kIvx
    double adj_r2 = 0.0;
    int n_obs = 0;
    std::string notes; // method metadata (per-coefficient Wald, collapsed gaps, ...)
};

// Degrees-of-freedom floors; the trailing parameters exist so desk-scale
// fixtures can drop them.
inline constexpr int kMinRegressionObs = 24;
inline constexpr int kMinOffsetObs = 12;

PredictiveRegressionResult run_univariate(const MonthlySeriesView& predictor, const MonthlyMarketSeries& market,
                                          int horizon, const SampleFilter& filter,
                                          int min_obs = kMinRegressionObs);
PredictiveRegressionResult run_bivariate(const MonthlySeriesView& predictor, const MonthlySeriesView& control,
                                         const MonthlyMarketSeries& market, int horizon, const SampleFilter& filter,
                                         int min_obs = kMinRegressionObs);
// Martin-style non-overlapping estimation: statistics averaged over the h
// offset subsamples; h = 1 collapses to run_univariate.
PredictiveRegressionResult run_nonoverlapping(const MonthlySeriesView& predictor, const MonthlyMarketSeries& market,
                                              int horizon, const SampleFilter& filter,
                                              int min_obs = kMinRegressionObs, int min_offset_obs = kMinOffsetObs);

// IVX parameters: rho_z = 1 - c_z / n^delta, instrument starts at zero.
struct IvxParams {
    double delta = 0.95;
    double c_z = 1.0;
};
double ivx_rho(int n, const IvxParams& params = {});

PredictiveRegressionResult run_ivx(const MonthlySeriesView& predictor, const MonthlyMarketSeries& market,
                                   int horizon, const SampleFilter& filter, const IvxParams& params = {},
                                   int min_obs = kMinRegressionObs);
PredictiveRegressionResult run_ivx(const MonthlySeriesView& predictor, const MonthlySeriesView& control,
                                   const MonthlyMarketSeries& market, int horizon, const SampleFilter& filter,
                                   const IvxParams& params = {}, int min_obs = kMinRegressionObs);

} // namespace sdisp
