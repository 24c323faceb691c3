#include "sdisp/oos.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sdisp/error.hpp"

namespace sdisp {

namespace {

// Estimation pairs (x_t [, c_t], r_{t,t+h}) in month order plus prefix sums,
// so every expanding-window fit is O(1) and bit-identical no matter how many
// origins are evaluated after it.
struct ExpandingState {
    std::vector<YearMonth> pair_month; // tau_i
    std::vector<double> x, c, y;
    bool bivariate = false;

    // prefix sums over pairs (index = count)
    std::vector<double> sx, sxx, sy, sxy, sc, scc, sxc, scy;

    // market-wide horizon returns for the benchmark and realizations
    HorizonReturnSeries hr;
    std::vector<double> hr_prefix; // prefix sums of hr values

    std::map<YearMonth, double> predictor_at, control_at;
};

ExpandingState build_state(const MonthlySeriesView& predictor, const std::optional<MonthlySeriesView>& control,
                           const MonthlyMarketSeries& market, int horizon) {
    ExpandingState st;
    st.bivariate = control.has_value();
    st.hr = overlapping_returns(market, horizon);
    st.hr_prefix.resize(st.hr.observations.size() + 1, 0.0);
    for (std::size_t i = 0; i < st.hr.observations.size(); ++i)
        st.hr_prefix[i + 1] = st.hr_prefix[i] + st.hr.observations[i].second;

    for (const auto& [ym, v] : predictor.observations) st.predictor_at.emplace(ym, v);
    if (control)
        for (const auto& [ym, v] : control->observations) st.control_at.emplace(ym, v);

    for (const auto& [t, xv] : predictor.observations) {
        const int pos = month_diff(t, market.first);
        if (pos < 0 || std::size_t(pos) >= st.hr.observations.size()) continue;
        double cv = 0.0;
        if (control) {
            auto it = st.control_at.find(t);
            if (it == st.control_at.end()) continue;
            cv = it->second;
        }
        st.pair_month.push_back(t);
        st.x.push_back(xv);
        if (control) st.c.push_back(cv);
        st.y.push_back(st.hr.observations[std::size_t(pos)].second);
    }

    const std::size_t n = st.x.size();
    st.sx.assign(n + 1, 0.0);
    st.sxx.assign(n + 1, 0.0);
    st.sy.assign(n + 1, 0.0);
    st.sxy.assign(n + 1, 0.0);
    if (st.bivariate) {
        st.sc.assign(n + 1, 0.0);
        st.scc.assign(n + 1, 0.0);
        st.sxc.assign(n + 1, 0.0);
        st.scy.assign(n + 1, 0.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
        st.sx[i + 1] = st.sx[i] + st.x[i];
        st.sxx[i + 1] = st.sxx[i] + st.x[i] * st.x[i];
        st.sy[i + 1] = st.sy[i] + st.y[i];
        st.sxy[i + 1] = st.sxy[i] + st.x[i] * st.y[i];
        if (st.bivariate) {
            st.sc[i + 1] = st.sc[i] + st.c[i];
            st.scc[i + 1] = st.scc[i] + st.c[i] * st.c[i];
            st.sxc[i + 1] = st.sxc[i] + st.x[i] * st.c[i];
            st.scy[i + 1] = st.scy[i] + st.c[i] * st.y[i];
        }
    }
    return st;
}

// Number of estimation pairs realized by origin m: pairs with tau + h <= m.
std::size_t usable_pairs(const ExpandingState& st, YearMonth m, int horizon) {
    const YearMonth cutoff = m - horizon;
    auto it = std::upper_bound(st.pair_month.begin(), st.pair_month.end(), cutoff);
    return std::size_t(it - st.pair_month.begin());
}

// Fit on the first k pairs and forecast at (xm, cm).
double fit_and_forecast(const ExpandingState& st, std::size_t k, double xm, double cm) {
    const double n = double(k);
    if (!st.bivariate) {
        const double det = n * st.sxx[k] - st.sx[k] * st.sx[k];
        if (det == 0.0) raise(Errc::kCollinearity, "constant predictor in expanding window");
        const double beta = (n * st.sxy[k] - st.sx[k] * st.sy[k]) / det;
        const double alpha = (st.sy[k] - beta * st.sx[k]) / n;
        return alpha + beta * xm;
    }
    // Normal equations for [1, x, c].
    double a[3][3] = {{n, st.sx[k], st.sc[k]},
                      {st.sx[k], st.sxx[k], st.sxc[k]},
                      {st.sc[k], st.sxc[k], st.scc[k]}};
    double b[3] = {st.sy[k], st.sxy[k], st.scy[k]};
    // Gaussian elimination with partial pivoting on the 3x3 system.
    int piv[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int best = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(a[piv[r]][col]) > std::fabs(a[piv[best]][col])) best = r;
        std::swap(piv[col], piv[best]);
        const double pivot = a[piv[col]][col];
        if (pivot == 0.0) raise(Errc::kCollinearity, "collinear regressors in expanding window");
        for (int r = col + 1; r < 3; ++r) {
            const double f = a[piv[r]][col] / pivot;
            for (int cc = col; cc < 3; ++cc) a[piv[r]][cc] -= f * a[piv[col]][cc];
            b[piv[r]] -= f * b[piv[col]];
        }
    }
    double coef[3];
    for (int row = 2; row >= 0; --row) {
        double acc = b[piv[row]];
        for (int cc = row + 1; cc < 3; ++cc) acc -= a[piv[row]][cc] * coef[cc];
        coef[row] = acc / a[piv[row]][row];
    }
    return coef[0] + coef[1] * xm + coef[2] * cm;
}

template <bool Parallel>
std::vector<ForecastRecord> expanding_impl(const MonthlySeriesView& predictor,
                                           const std::optional<MonthlySeriesView>& control,
                                           const MonthlyMarketSeries& market, int horizon, YearMonth t0) {
    if (horizon < 1) raise(Errc::kDomain, "horizon must be >= 1");
    ExpandingState st = build_state(predictor, control, market, horizon);
    if (st.pair_month.empty())
        raise(Errc::kAlignment, "predictor '" + predictor.name + "' and market months do not overlap");

    if (usable_pairs(st, t0, horizon) < std::size_t(kMinRegressionObs))
        raise(Errc::kInsufficientSample, "fewer than " + std::to_string(kMinRegressionObs) +
                                             " realized estimation pairs before " + format_year_month(t0));

    // Forecast origins: months >= t0 with a predictor (and control) value.
    std::vector<YearMonth> origins;
    std::vector<double> xm, cm;
    const YearMonth last_origin = st.predictor_at.rbegin()->first;
    for (int idx = t0.index(); idx <= last_origin.index(); ++idx) {
        const YearMonth m = YearMonth::from_index(idx);
        auto it = st.predictor_at.find(m);
        if (it == st.predictor_at.end()) continue; // no predictor reading, no forecast
        double cv = 0.0;
        if (st.bivariate) {
            auto ic = st.control_at.find(m);
            if (ic == st.control_at.end()) continue; // dropped pairwise
            cv = ic->second;
        }
        origins.push_back(m);
        xm.push_back(it->second);
        cm.push_back(cv);
    }

    const std::size_t n = origins.size();
    std::vector<ForecastRecord> records(n);
    std::exception_ptr eptr;
#pragma omp parallel for schedule(static) if (Parallel)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
        try {
            const YearMonth m = origins[std::size_t(i)];
            ForecastRecord rec;
            rec.origin = m;
            rec.horizon = horizon;
            const std::size_t k = usable_pairs(st, m, horizon);
            rec.model = fit_and_forecast(st, k, xm[std::size_t(i)], cm[std::size_t(i)]);

            // Benchmark: historical average of all completed h-period market
            // returns through m.
            const int bench_n = std::min<int>(month_diff(m, market.first) - horizon + 1, int(st.hr.observations.size()));
            if (bench_n <= 0) raise(Errc::kInsufficientSample, "no completed returns before " + format_year_month(m));
            rec.benchmark = st.hr_prefix[std::size_t(bench_n)] / double(bench_n);

            const int pos = month_diff(m, market.first);
            if (pos >= 0 && std::size_t(pos) < st.hr.observations.size())
                rec.realized = st.hr.observations[std::size_t(pos)].second;
            records[std::size_t(i)] = std::move(rec);
        } catch (...) {
#pragma omp critical
            if (!eptr) eptr = std::current_exception();
        }
    }
    if (eptr) std::rethrow_exception(eptr);
    return records;
}

} // namespace

std::vector<ForecastRecord> expanding_forecasts(const MonthlySeriesView& predictor,
                                                const std::optional<MonthlySeriesView>& control,
                                                const MonthlyMarketSeries& market, int horizon, YearMonth t0) {
    return expanding_impl<true>(predictor, control, market, horizon, t0);
}

std::vector<ForecastRecord> expanding_forecasts_serial(const MonthlySeriesView& predictor,
                                                       const std::optional<MonthlySeriesView>& control,
                                                       const MonthlyMarketSeries& market, int horizon, YearMonth t0) {
    return expanding_impl<false>(predictor, control, market, horizon, t0);
}

namespace {

struct SquaredErrors {
    std::vector<YearMonth> months;
    std::vector<double> se_model, se_bench;
};

SquaredErrors realized_errors(std::span<const ForecastRecord> forecasts) {
    SquaredErrors out;
    for (const ForecastRecord& f : forecasts) {
        if (!f.realized) continue;
        const double r = *f.realized;
        out.months.push_back(f.origin);
        out.se_model.push_back((r - f.model) * (r - f.model));
        out.se_bench.push_back((r - f.benchmark) * (r - f.benchmark));
    }
    return out;
}

} // namespace

double r2_oos(std::span<const ForecastRecord> forecasts) {
    SquaredErrors e = realized_errors(forecasts);
    const std::size_t n = e.months.size();
    if (n < std::size_t(kMinRealizedForecasts))
        raise(Errc::kInsufficientSample,
              "need at least " + std::to_string(kMinRealizedForecasts) + " realized forecasts, have " + std::to_string(n));
    double msfe_l = 0.0, msfe_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        msfe_l += e.se_model[i];
        msfe_b += e.se_bench[i];
    }
    if (msfe_b == 0.0) raise(Errc::kDegenerate, "benchmark forecast errors are identically zero");
    return 1.0 - msfe_l / msfe_b;
}

double clark_west(std::span<const ForecastRecord> forecasts, int horizon) {
    std::vector<double> f;
    for (const ForecastRecord& rec : forecasts) {
        if (!rec.realized) continue;
        const double r = *rec.realized;
        const double eb = r - rec.benchmark;
        const double el = r - rec.model;
        const double adj = rec.benchmark - rec.model;
        f.push_back(eb * eb - (el * el - adj * adj));
    }
    const int n = int(f.size());
    if (n < kMinRealizedForecasts)
        raise(Errc::kInsufficientSample,
              "need at least " + std::to_string(kMinRealizedForecasts) + " realized forecasts, have " + std::to_string(n));
    double mean = 0.0;
    for (double v : f) mean += v;
    mean /= n;
    const double lrv = newey_west_long_run_variance(f, horizon - 1);
    if (lrv <= 0.0)
        raise(Errc::kDegenerate, "MSPE-adjusted loss differential has zero variance (model equals benchmark?)");
    return mean / std::sqrt(lrv / n);
}

std::vector<std::pair<YearMonth, double>> cumulative_sse_diff(std::span<const ForecastRecord> forecasts) {
    SquaredErrors e = realized_errors(forecasts);
    if (e.months.empty()) raise(Errc::kInsufficientSample, "no realized forecasts");
    std::vector<std::pair<YearMonth, double>> path;
    path.reserve(e.months.size());
    double cum = 0.0;
    for (std::size_t i = 0; i < e.months.size(); ++i) {
        cum += e.se_bench[i] - e.se_model[i];
        path.emplace_back(e.months[i], cum);
    }
    return path;
}

EncompassingResult encompassing_test(std::span<const ForecastRecord> control_forecasts,
                                     std::span<const ForecastRecord> sd_forecasts, int horizon) {
    std::map<YearMonth, const ForecastRecord*> sd_by_month;
    for (const ForecastRecord& rec : sd_forecasts)
        if (rec.realized) sd_by_month.emplace(rec.origin, &rec);

    std::vector<double> d;
    double num = 0.0, den = 0.0;
    for (const ForecastRecord& rec : control_forecasts) {
        if (!rec.realized) continue;
        auto it = sd_by_month.find(rec.origin);
        if (it == sd_by_month.end()) continue;
        const double r = *rec.realized;
        const double ec = r - rec.model;
        const double esd = r - it->second->model;
        const double diff = ec - esd;
        d.push_back(diff * ec);
        num += diff * ec;
        den += diff * diff;
    }
    const int n = int(d.size());
    if (n < kMinRealizedForecasts)
        raise(Errc::kInsufficientSample,
              "need at least " + std::to_string(kMinRealizedForecasts) + " aligned realized forecasts, have " +
                  std::to_string(n));
    if (den == 0.0) raise(Errc::kDegenerate, "control and SD forecasts are identical");

    EncompassingResult res;
    res.n = n;
    res.lambda = std::clamp(num / den, 0.0, 1.0);

    double mean = num / n;
    const double lrv = newey_west_long_run_variance(d, horizon - 1);
    if (lrv <= 0.0) raise(Errc::kDegenerate, "encompassing loss series has zero variance");
    const double dm = mean / std::sqrt(lrv / n);
    // Harvey-Leybourne-Newbold small-sample correction.
    const double h = double(horizon);
    const double corr = std::sqrt((n + 1.0 - 2.0 * h + h * (h - 1.0) / n) / n);
    res.tstat = dm * corr;
    return res;
}

} // namespace sdisp
