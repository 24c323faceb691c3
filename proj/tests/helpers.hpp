#pragma once

// Shared test fixtures and independent mini-oracles. Nothing in here calls
// back into the production estimation paths it is used to check.

#include <cmath>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sdisp/dates.hpp"
#include "sdisp/ingest.hpp"

namespace testutil {

inline bool close(double a, double b, double rel = 1e-12, double abs_tol = 1e-15) {
    if (a == b) return true;
    const double diff = std::fabs(a - b);
    return diff <= abs_tol || diff <= rel * std::max(std::fabs(a), std::fabs(b));
}

// Dense normal-equations OLS by Gaussian elimination, independent of the
// Eigen-backed production fit. X includes the intercept column.
inline std::vector<double> ols_oracle(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
    const std::size_t n = y.size();
    const std::size_t p = x.front().size();
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t r = 0; r < p; ++r) {
            for (std::size_t c = 0; c < p; ++c) a[r][c] += x[i][r] * x[i][c];
            a[r][p] += x[i][r] * y[i];
        }
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t best = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[best][col])) best = r;
        std::swap(a[col], a[best]);
        for (std::size_t r = col + 1; r < p; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c <= p; ++c) a[r][c] -= f * a[col][c];
        }
    }
    std::vector<double> coef(p);
    for (int r = int(p) - 1; r >= 0; --r) {
        double acc = a[std::size_t(r)][p];
        for (std::size_t c = std::size_t(r) + 1; c < p; ++c) acc -= a[std::size_t(r)][c] * coef[c];
        coef[std::size_t(r)] = acc / a[std::size_t(r)][std::size_t(r)];
    }
    return coef;
}

inline sdisp::MonthlyMarketSeries market_from(std::vector<double> excess, sdisp::YearMonth first = {2000, 1},
                                              double rf = 0.0) {
    sdisp::MonthlyMarketSeries m;
    m.first = first;
    m.risk_free.assign(excess.size(), rf);
    m.log_excess_return = std::move(excess);
    return m;
}

inline sdisp::MonthlyPredictorSeries predictor_from(std::vector<double> values, const std::string& name = "x",
                                                    sdisp::YearMonth first = {2000, 1}) {
    sdisp::MonthlyPredictorSeries p;
    p.name = name;
    for (std::size_t i = 0; i < values.size(); ++i) p.observations.emplace_back(first + int(i), values[i]);
    return p;
}

inline std::vector<sdisp::RawTickRecord> ticks(const std::string& ticker, sdisp::Date date,
                                               std::initializer_list<std::pair<const char*, double>> list) {
    std::vector<sdisp::RawTickRecord> out;
    for (const auto& [hhmm, price] : list)
        out.push_back({ticker, date, sdisp::parse_minute_of_day(hhmm), price});
    return out;
}

} // namespace testutil
