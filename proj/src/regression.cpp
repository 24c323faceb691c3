#include "sdisp/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sdisp/error.hpp"
#include "sdisp/io_util.hpp"

namespace sdisp {

const char* method_name(RegressionMethod m) {
    switch (m) {
    case RegressionMethod::kNeweyWestOverlapping: return "nw";
    case RegressionMethod::kNonOverlappingAvg: return "nonoverlap";
    case RegressionMethod::kIvx: return "ivx";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Horizon returns
// ---------------------------------------------------------------------------

HorizonReturnSeries overlapping_returns(const MonthlyMarketSeries& monthly, int horizon) {
    if (horizon < 1) raise(Errc::kDomain, "horizon must be >= 1");
    const std::size_t n = monthly.size();
    if (n <= std::size_t(horizon))
        raise(Errc::kInsufficientSample,
              "series of " + std::to_string(n) + " months cannot support horizon " + std::to_string(horizon));
    HorizonReturnSeries out;
    out.horizon = horizon;
    out.observations.reserve(n - std::size_t(horizon));
    for (std::size_t t = 0; t + std::size_t(horizon) < n; ++t) {
        double sum = 0.0;
        for (int j = 1; j <= horizon; ++j) sum += monthly.log_excess_return[t + std::size_t(j)];
        out.observations.emplace_back(monthly.month_at(t), sum / horizon);
    }
    return out;
}

// ---------------------------------------------------------------------------
// OLS + HAC
// ---------------------------------------------------------------------------

OlsFit ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const int n = int(x.rows());
    const int p = int(x.cols());
    if (y.size() != n) raise(Errc::kDomain, "design and target lengths differ");
    if (n <= p) raise(Errc::kInsufficientSample, "need more observations than coefficients");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < p) raise(Errc::kCollinearity, "design matrix is rank deficient");

    OlsFit fit;
    fit.coef = qr.solve(y);
    fit.residuals = y - x * fit.coef;
    fit.xtx_inv = (x.transpose() * x).inverse();
    fit.x = x;
    fit.n = n;
    fit.p = p;

    const double sst = (y.array() - y.mean()).square().sum();
    const double ssr = fit.residuals.squaredNorm();
    fit.r2 = sst > 0.0 ? 1.0 - ssr / sst : 0.0;
    fit.adj_r2 = 1.0 - (1.0 - fit.r2) * double(n - 1) / double(n - p);
    return fit;
}

Eigen::VectorXd newey_west_tstats(const OlsFit& fit, int lags) {
    const int n = fit.n;
    const int p = fit.p;
    if (lags < 0 || lags >= n) raise(Errc::kDomain, "HAC lags must lie in [0, n)");

    // Moment contributions u_t = x_t e_t.
    Eigen::MatrixXd u = fit.x.array().colwise() * fit.residuals.array();
    Eigen::MatrixXd s = u.transpose() * u;
    for (int j = 1; j <= lags; ++j) {
        const double w = 1.0 - double(j) / double(lags + 1);
        Eigen::MatrixXd gamma = u.bottomRows(n - j).transpose() * u.topRows(n - j);
        s += w * (gamma + gamma.transpose());
    }
    Eigen::MatrixXd cov = fit.xtx_inv * s * fit.xtx_inv;

    Eigen::VectorXd t(p);
    for (int i = 0; i < p; ++i) {
        const double var = cov(i, i);
        if (var <= 0.0)
            t(i) = std::copysign(std::numeric_limits<double>::infinity(), fit.coef(i));
        else
            t(i) = fit.coef(i) / std::sqrt(var);
    }
    return t;
}

double newey_west_long_run_variance(std::span<const double> series, int lags) {
    const int n = int(series.size());
    if (n < 2) raise(Errc::kDomain, "need at least two observations");
    if (lags < 0 || lags >= n) raise(Errc::kDomain, "HAC lags must lie in [0, n)");
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= n;
    double s = 0.0;
    for (double v : series) s += (v - mean) * (v - mean);
    s /= n;
    for (int j = 1; j <= lags; ++j) {
        const double w = 1.0 - double(j) / double(lags + 1);
        double gamma = 0.0;
        for (int t = j; t < n; ++t) gamma += (series[std::size_t(t)] - mean) * (series[std::size_t(t - j)] - mean);
        gamma /= n;
        s += 2.0 * w * gamma;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Sample filters
// ---------------------------------------------------------------------------

bool SampleFilter::admits(YearMonth t) const {
    switch (mode) {
    case FilterMode::kFull: return true;
    case FilterMode::kExcludeNber: return months.find(t) == months.end();
    case FilterMode::kCalendarOnly: return months.find(t) != months.end();
    case FilterMode::kRegime: {
        auto it = conditioning.find(t);
        if (it == conditioning.end()) return false;
        return rule == RegimeRule::kAboveMedian ? it->second >= median : it->second < median;
    }
    }
    return true;
}

SampleFilter SampleFilter::full() { return SampleFilter{}; }

SampleFilter SampleFilter::exclude_months(std::set<YearMonth> months, std::string description) {
    SampleFilter f;
    f.mode = FilterMode::kExcludeNber;
    f.months = std::move(months);
    f.description = std::move(description);
    return f;
}

SampleFilter SampleFilter::calendar_only(std::set<YearMonth> months, std::string description) {
    SampleFilter f;
    f.mode = FilterMode::kCalendarOnly;
    f.months = std::move(months);
    f.description = std::move(description);
    return f;
}

SampleFilter SampleFilter::regime(const MonthlyPredictorSeries& conditioning, RegimeRule rule,
                                  std::string description) {
    if (conditioning.observations.empty()) raise(Errc::kDomain, "empty conditioning series");
    SampleFilter f;
    f.mode = FilterMode::kRegime;
    f.rule = rule;
    f.description = std::move(description);
    std::vector<double> vals;
    vals.reserve(conditioning.observations.size());
    for (const auto& [ym, v] : conditioning.observations) {
        f.conditioning.emplace(ym, v);
        vals.push_back(v);
    }
    std::sort(vals.begin(), vals.end());
    const std::size_t n = vals.size();
    f.median = (n % 2 == 1) ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
    return f;
}

std::array<SampleFilter, 4> partition_fomc(YearMonth first, YearMonth last, const EventCalendar& fomc) {
    std::set<YearMonth> meet, pre, post, none;
    for (int idx = first.index(); idx <= last.index(); ++idx) {
        const YearMonth ym = YearMonth::from_index(idx);
        if (fomc.months.count(ym)) {
            meet.insert(ym);
        } else if (fomc.months.count(ym + 1)) {
            pre.insert(ym);
        } else if (fomc.months.count(ym - 1)) {
            post.insert(ym);
        } else {
            none.insert(ym);
        }
    }
    return {SampleFilter::calendar_only(std::move(meet), "fomc"),
            SampleFilter::calendar_only(std::move(pre), "fomc_pre"),
            SampleFilter::calendar_only(std::move(post), "fomc_post"),
            SampleFilter::calendar_only(std::move(none), "fomc_none")};
}

// ---------------------------------------------------------------------------
// Alignment
// ---------------------------------------------------------------------------

namespace {

struct AlignedSample {
    std::vector<YearMonth> months; // predictor months t, ascending
    Eigen::MatrixXd x;             // n x (1 + k), intercept first
    Eigen::VectorXd y;             // r_{t,t+h}
};

std::map<YearMonth, double> to_map(const MonthlySeriesView& v) {
    std::map<YearMonth, double> m;
    for (const auto& [ym, val] : v.observations) m.emplace(ym, val);
    return m;
}

AlignedSample align_sample(const MonthlySeriesView& predictor, const MonthlySeriesView* control,
                           const MonthlyMarketSeries& market, int horizon, const SampleFilter& filter,
                           int min_obs) {
    const HorizonReturnSeries hr = overlapping_returns(market, horizon);
    std::map<YearMonth, double> ctrl;
    if (control) ctrl = to_map(*control);

    std::vector<YearMonth> months;
    std::vector<double> xs, x2s, ys;
    std::size_t overlap = 0; // predictor months with a defined response, pre-filter
    for (const auto& [t, xv] : predictor.observations) {
        const int pos = month_diff(t, market.first);
        if (pos < 0 || std::size_t(pos) >= hr.observations.size()) continue;
        const MonthlySeriesView* c = control;
        double cv = 0.0;
        if (c) {
            auto it = ctrl.find(t);
            if (it == ctrl.end()) continue;
            cv = it->second;
        }
        ++overlap;
        if (!filter.admits(t)) continue;
        months.push_back(t);
        xs.push_back(xv);
        if (c) x2s.push_back(cv);
        ys.push_back(hr.observations[std::size_t(pos)].second);
    }
    if (overlap == 0)
        raise(Errc::kAlignment, "predictor '" + predictor.name + "' and market months do not overlap at horizon " +
                                    std::to_string(horizon));
    const int n = int(months.size());
    if (n < min_obs)
        raise(Errc::kInsufficientSample, "filter '" + filter.description + "' leaves " + std::to_string(n) +
                                             " observations, need " + std::to_string(min_obs));
    AlignedSample out;
    out.months = std::move(months);
    out.x.resize(n, control ? 3 : 2);
    out.y.resize(n);
    for (int i = 0; i < n; ++i) {
        out.x(i, 0) = 1.0;
        out.x(i, 1) = xs[std::size_t(i)];
        if (control) out.x(i, 2) = x2s[std::size_t(i)];
        out.y(i) = ys[std::size_t(i)];
    }
    return out;
}

PredictiveRegressionResult nw_result(const AlignedSample& a, const MonthlySeriesView& predictor,
                                     const MonthlySeriesView* control, int horizon, const SampleFilter& filter) {
    OlsFit fit = ols_fit(a.x, a.y);
    Eigen::VectorXd t = newey_west_tstats(fit, horizon - 1);
    PredictiveRegressionResult r;
    r.horizon = horizon;
    r.method = RegressionMethod::kNeweyWestOverlapping;
    r.predictor = control ? predictor.name + "+" + control->name : predictor.name;
    r.sample_filter = filter.description;
    r.alpha = fit.coef(0);
    for (int j = 1; j < fit.p; ++j) {
        r.betas.push_back(fit.coef(j));
        r.tstats.push_back(t(j));
    }
    r.adj_r2 = fit.adj_r2;
    r.n_obs = fit.n;
    return r;
}

} // namespace

PredictiveRegressionResult run_univariate(const MonthlySeriesView& predictor, const MonthlyMarketSeries& market,
                                          int horizon, const SampleFilter& filter, int min_obs) {
    AlignedSample a = align_sample(predictor, nullptr, market, horizon, filter, min_obs);
    return nw_result(a, predictor, nullptr, horizon, filter);
}

PredictiveRegressionResult run_bivariate(const MonthlySeriesView& predictor, const MonthlySeriesView& control,
                                         const MonthlyMarketSeries& market, int horizon, const SampleFilter& filter,
                                         int min_obs) {
    AlignedSample a = align_sample(predictor, &control, market, horizon, filter, min_obs);
    return nw_result(a, predictor, &control, horizon, filter);
}

PredictiveRegressionResult run_nonoverlapping(const MonthlySeriesView& predictor, const MonthlyMarketSeries& market,
                                              int horizon, const SampleFilter& filter, int min_obs,
                                              int min_offset_obs) {
    AlignedSample a = align_sample(predictor, nullptr, market, horizon, filter, min_obs);
    const int n = int(a.months.size());

    double alpha = 0.0, beta = 0.0, tstat = 0.0, adj_r2 = 0.0;
    for (int s = 0; s < horizon; ++s) {
        std::vector<int> idx;
        for (int i = s; i < n; i += horizon) idx.push_back(i);
        if (int(idx.size()) < min_offset_obs)
            raise(Errc::kInsufficientSample, "offset " + std::to_string(s + 1) + " has " +
                                                 std::to_string(idx.size()) + " observations, need " +
                                                 std::to_string(min_offset_obs));
        Eigen::MatrixXd x(idx.size(), 2);
        Eigen::VectorXd y(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            x(int(i), 0) = 1.0;
            x(int(i), 1) = a.x(idx[i], 1);
            y(int(i)) = a.y(idx[i]);
        }
        OlsFit fit = ols_fit(x, y);
        Eigen::VectorXd t = newey_west_tstats(fit, 0);
        alpha += fit.coef(0);
        beta += fit.coef(1);
        tstat += t(1);
        adj_r2 += fit.adj_r2;
    }

    PredictiveRegressionResult r;
    r.horizon = horizon;
    r.method = RegressionMethod::kNonOverlappingAvg;
    r.predictor = predictor.name;
    r.sample_filter = filter.description;
    r.alpha = alpha / horizon;
    r.betas = {beta / horizon};
    r.tstats = {tstat / horizon};
    r.adj_r2 = adj_r2 / horizon;
    r.n_obs = n;
    r.notes = "mean over " + std::to_string(horizon) + " offsets";
    return r;
}

// ---------------------------------------------------------------------------
// IVX
// ---------------------------------------------------------------------------

double ivx_rho(int n, const IvxParams& params) {
    if (n < 2) raise(Errc::kDomain, "need n >= 2 for the IVX instrument");
    return 1.0 - params.c_z / std::pow(double(n), params.delta);
}

namespace {

struct IvxSample {
    std::vector<YearMonth> months; // predictor months, ascending
    Eigen::MatrixXd x;             // n x l predictor levels at month t
    Eigen::VectorXd y;             // one-month return at t+1
    bool gaps = false;
};

IvxSample ivx_sample(const MonthlySeriesView& predictor, const MonthlySeriesView* control,
                     const MonthlyMarketSeries& market, const SampleFilter& filter) {
    std::map<YearMonth, double> ctrl;
    if (control) ctrl = to_map(*control);

    std::vector<YearMonth> months;
    std::vector<double> xs, x2s, ys;
    std::size_t overlap = 0;
    for (const auto& [t, xv] : predictor.observations) {
        const auto next = market.index_of(t + 1);
        if (!next) continue;
        double cv = 0.0;
        if (control) {
            auto it = ctrl.find(t);
            if (it == ctrl.end()) continue;
            cv = it->second;
        }
        ++overlap;
        if (!filter.admits(t)) continue;
        months.push_back(t);
        xs.push_back(xv);
        if (control) x2s.push_back(cv);
        ys.push_back(market.log_excess_return[*next]);
    }
    if (overlap == 0) raise(Errc::kAlignment, "predictor '" + predictor.name + "' and market months do not overlap");

    IvxSample s;
    const int n = int(months.size());
    s.months = std::move(months);
    s.x.resize(n, control ? 2 : 1);
    s.y.resize(n);
    for (int i = 0; i < n; ++i) {
        s.x(i, 0) = xs[std::size_t(i)];
        if (control) s.x(i, 1) = x2s[std::size_t(i)];
        s.y(i) = ys[std::size_t(i)];
    }
    for (int i = 1; i < n; ++i)
        if (month_diff(s.months[std::size_t(i)], s.months[std::size_t(i - 1)]) != 1) {
            s.gaps = true;
            break;
        }
    return s;
}

PredictiveRegressionResult ivx_run(const IvxSample& s, const std::string& predictor_name, int horizon,
                                   const SampleFilter& filter, const IvxParams& params, int min_obs) {
    const int n = int(s.y.size());
    const int l = int(s.x.cols());
    const int k = horizon;
    const int nk = n - k + 1;
    if (nk < min_obs)
        raise(Errc::kInsufficientSample, "filter '" + filter.description + "' leaves " + std::to_string(nk) +
                                             " usable observations, need " + std::to_string(min_obs));

    // Predictor increments; a constant predictor cannot generate an instrument.
    Eigen::MatrixXd dx = s.x.bottomRows(n - 1) - s.x.topRows(n - 1);
    if (dx.cwiseAbs().maxCoeff() == 0.0)
        raise(Errc::kDegenerate, "constant predictor: IVX instrument is degenerate");

    // One-month regression residuals.
    Eigen::MatrixXd design(n, l + 1);
    design.col(0).setOnes();
    design.rightCols(l) = s.x;
    OlsFit fit = ols_fit(design, s.y);
    const Eigen::VectorXd& eps = fit.residuals;
    const double sigma_ee = eps.squaredNorm() / n;

    // AR(1) innovations of the (demeaned) predictor.
    const int nu = n - 1;
    Eigen::MatrixXd xt = s.x.bottomRows(nu);
    Eigen::MatrixXd xlag = s.x.topRows(nu);
    Eigen::RowVectorXd mean_t = xt.colwise().mean();
    Eigen::RowVectorXd mean_l = xlag.colwise().mean();
    Eigen::MatrixXd xt_d = xt.rowwise() - mean_t;
    Eigen::MatrixXd xlag_d = xlag.rowwise() - mean_l;
    Eigen::MatrixXd rn = (xlag_d.transpose() * xlag_d).ldlt().solve(xlag_d.transpose() * xt_d);
    Eigen::MatrixXd u = xt_d - xlag_d * rn; // nu x l; u[i] is the innovation of x at months[i+1]

    // Long-run covariances on contemporaneous pairs (u at t+1, eps at t).
    const int np = nu; // pairs: u row i with eps row i (both dated months[i]+1)
    Eigen::MatrixXd up = u.topRows(np);
    Eigen::VectorXd ep = eps.head(np);
    Eigen::MatrixXd cov_uu = up.transpose() * up / np;
    Eigen::VectorXd cov_ue = up.transpose() * ep / np;
    const int m_bw = int(std::floor(std::pow(double(np), 1.0 / 3.0)));
    Eigen::MatrixXd lam_uu = Eigen::MatrixXd::Zero(l, l);
    Eigen::VectorXd lam_ue = Eigen::VectorXd::Zero(l);
    for (int j = 1; j <= m_bw; ++j) {
        const double w = 1.0 - double(j) / double(m_bw + 1);
        lam_uu += w * (up.bottomRows(np - j).transpose() * up.topRows(np - j)) / double(np);
        lam_ue += w * (up.bottomRows(np - j).transpose() * ep.head(np - j)) / double(np);
    }
    Eigen::MatrixXd omega_uu = cov_uu + lam_uu + lam_uu.transpose();
    Eigen::VectorXd omega_ue = cov_ue + lam_ue;
    const double fm = sigma_ee - omega_ue.dot(omega_uu.ldlt().solve(omega_ue));

    // Self-generated instrument, z_0 = 0.
    const double rho_z = ivx_rho(n, params);
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, l);
    for (int i = 1; i < n; ++i) z.row(i) = rho_z * z.row(i - 1) + dx.row(i - 1);

    // Horizon-k rolling sums of response, regressor, and instrument.
    Eigen::VectorXd yk = Eigen::VectorXd::Zero(nk);
    Eigen::MatrixXd xk = Eigen::MatrixXd::Zero(nk, l);
    Eigen::MatrixXd zk = Eigen::MatrixXd::Zero(nk, l);
    for (int i = 0; i < nk; ++i) {
        for (int j = 0; j < k; ++j) {
            yk(i) += s.y(i + j);
            xk.row(i) += s.x.row(i + j);
            zk.row(i) += z.row(i + j);
        }
    }
    Eigen::VectorXd yk_d = yk.array() - yk.mean();
    Eigen::MatrixXd xk_d = xk.rowwise() - xk.colwise().mean();
    Eigen::RowVectorXd zbar = zk.colwise().mean();

    Eigen::MatrixXd m1 = zk.transpose() * xk_d; // l x l
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m1);
    if (!lu.isInvertible()) raise(Errc::kDegenerate, "IVX instrument does not identify the slope");
    Eigen::VectorXd beta = lu.solve(zk.transpose() * yk_d);

    Eigen::MatrixXd q = sigma_ee * (zk.transpose() * zk) - double(nk) * zbar.transpose() * zbar * fm;
    Eigen::MatrixXd m1_inv = lu.inverse();
    Eigen::MatrixXd cov_beta = m1_inv * q * m1_inv.transpose();

    PredictiveRegressionResult r;
    r.horizon = horizon;
    r.method = RegressionMethod::kIvx;
    r.predictor = predictor_name;
    r.sample_filter = filter.description;
    const double mean_yk = yk.mean();
    Eigen::VectorXd mean_xk = xk.colwise().mean().transpose();
    r.alpha = (mean_yk - mean_xk.dot(beta)) / k;
    for (int j = 0; j < l; ++j) {
        const double var = cov_beta(j, j);
        double tj;
        if (var <= 0.0)
            tj = std::copysign(std::numeric_limits<double>::infinity(), beta(j));
        else
            tj = beta(j) / std::sqrt(var);
        r.betas.push_back(beta(j));
        r.tstats.push_back(tj);
        r.ivx_wald.push_back(tj * tj);
    }
    r.n_obs = nk;
    {
        // Companion OLS on the same aggregated sample, for the R2 column.
        Eigen::MatrixXd xd(nk, l + 1);
        xd.col(0).setOnes();
        xd.rightCols(l) = xk;
        r.adj_r2 = ols_fit(xd, yk).adj_r2;
    }
    r.notes = l > 1 ? "per-coefficient Wald" : "";
    if (s.gaps) r.notes += (r.notes.empty() ? "" : "; ") + std::string("filter gaps collapsed");
    return r;
}

} // namespace

PredictiveRegressionResult run_ivx(const MonthlySeriesView& predictor, const MonthlyMarketSeries& market,
                                   int horizon, const SampleFilter& filter, const IvxParams& params, int min_obs) {
    if (horizon < 1) raise(Errc::kDomain, "horizon must be >= 1");
    IvxSample s = ivx_sample(predictor, nullptr, market, filter);
    return ivx_run(s, predictor.name, horizon, filter, params, min_obs);
}

PredictiveRegressionResult run_ivx(const MonthlySeriesView& predictor, const MonthlySeriesView& control,
                                   const MonthlyMarketSeries& market, int horizon, const SampleFilter& filter,
                                   const IvxParams& params, int min_obs) {
    if (horizon < 1) raise(Errc::kDomain, "horizon must be >= 1");
    IvxSample s = ivx_sample(predictor, &control, market, filter);
    return ivx_run(s, predictor.name + "+" + control.name, horizon, filter, params, min_obs);
}

} // namespace sdisp
