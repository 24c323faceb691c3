#include "sdisp/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "sdisp/error.hpp"
#include "sdisp/io_util.hpp"

namespace sdisp {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

double Rng::uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = kTwoPi * u2;
    cached_normal_ = radius * std::sin(theta);
    has_cached_ = true;
    return radius * std::cos(theta);
}

uint64_t Rng::derive(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

Date next_calendar_day(Date d) {
    if (int(d.d) < days_in_month(d.y, d.m)) return Date{d.y, d.m, uint8_t(d.d + 1)};
    if (d.m < 12) return Date{d.y, uint8_t(d.m + 1), 1};
    return Date{int16_t(d.y + 1), 1, 1};
}

// Days since 1970-01-01 (Hinnant's civil algorithm); 1970-01-01 was a Thursday.
int64_t days_from_civil(Date date) {
    int y = date.y;
    const unsigned m = date.m;
    const unsigned d = date.d;
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = unsigned(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return int64_t(era) * 146097 + int64_t(doe) - 719468;
}

bool is_weekend(Date d) {
    const int64_t wd = ((days_from_civil(d) % 7) + 10) % 7; // 0 = Monday (1970-01-01 was a Thursday)
    return wd >= 5;
}

Date next_trading_day(Date d) {
    do {
        d = next_calendar_day(d);
    } while (is_weekend(d));
    return d;
}

std::vector<Date> weekday_sequence(Date first, int n) {
    std::vector<Date> days;
    days.reserve(std::size_t(n));
    Date d = first;
    while (is_weekend(d)) d = next_calendar_day(d);
    for (int i = 0; i < n; ++i) {
        days.push_back(d);
        d = next_trading_day(d);
    }
    return days;
}

} // namespace

std::vector<IntradayReturnGrid> generate_intraday_panel(const IntradayPanelSpec& spec) {
    if (spec.n_stocks <= 0 || spec.n_days <= 0 || spec.k <= 0)
        raise(Errc::kDomain, "panel spec counts must be positive");
    const std::vector<Date> days = weekday_sequence(spec.first_day, spec.n_days);

    std::vector<IntradayReturnGrid> grids(std::size_t(spec.n_stocks) * std::size_t(spec.n_days));
#pragma omp parallel for schedule(static)
    for (int s = 0; s < spec.n_stocks; ++s) {
        Rng rng(Rng::derive(spec.seed, uint64_t(s)));
        char name[16];
        std::snprintf(name, sizeof name, "S%04d", s);
        // Opposite-signed jump populations: even stocks lean positive, odd
        // stocks negative, with bias skew_mix.
        const double bias = spec.skew_mix * (s % 2 == 0 ? 1.0 : -1.0);
        const double p_up = 0.5 * (1.0 + bias);
        for (int d = 0; d < spec.n_days; ++d) {
            IntradayReturnGrid& g = grids[std::size_t(s) * std::size_t(spec.n_days) + std::size_t(d)];
            g.ticker = name;
            g.date = days[std::size_t(d)];
            g.valid_count = spec.k + 1;
            g.returns.resize(std::size_t(spec.k));
            const double sigma_day = spec.volatility_scale * std::exp(0.25 * rng.normal() - 0.03125);
            const double step_sd = sigma_day / std::sqrt(double(spec.k));
            for (int j = 0; j < spec.k; ++j) g.returns[std::size_t(j)] = step_sd * rng.normal();
            if (rng.uniform01() < 0.5) {
                const int slot = int(rng.uniform01() * spec.k) % spec.k;
                const double magnitude = 3.0 * sigma_day * std::fabs(rng.normal());
                const double sign = rng.uniform01() < p_up ? 1.0 : -1.0;
                g.returns[std::size_t(slot)] += sign * magnitude;
            }
        }
    }
    return grids;
}

void write_bar_file(std::ostream& out, std::span<const IntradayReturnGrid> grids, double base_price) {
    const SessionSpec session;
    std::string chunk;
    chunk.reserve(1 << 16);
    char line[96];
    for (const IntradayReturnGrid& g : grids) {
        chunk.clear();
        double log_price = std::log(base_price);
        const std::string date = format_date(g.date);
        for (int i = 0; i < session.n_points(); ++i) {
            if (i > 0) log_price += g.returns[std::size_t(i - 1)];
            const int minute = session.boundary(i);
            const int len = std::snprintf(line, sizeof line, "%s,%s,%02d:%02d,%.10g\n", g.ticker.c_str(),
                                          date.c_str(), minute / 60, minute % 60, std::exp(log_price));
            chunk.append(line, std::size_t(len));
        }
        out.write(chunk.data(), std::streamsize(chunk.size()));
    }
}

PredictiveDgp generate_predictive_dgp(const PredictiveDgpSpec& spec) {
    if (spec.months < 2) raise(Errc::kDomain, "need at least two months");
    const double rho = spec.predictor_autocorr;
    if (rho < 0.0 || rho >= 1.0) raise(Errc::kDomain, "predictor autocorrelation must lie in [0,1)");

    Rng rng(spec.seed);
    const int n = spec.months;
    std::vector<double> x(static_cast<std::size_t>(n));
    x[0] = rng.normal() / std::sqrt(1.0 - rho * rho); // stationary start
    for (int t = 1; t < n; ++t) x[std::size_t(t)] = rho * x[std::size_t(t - 1)] + rng.normal();

    PredictiveDgp out;
    out.market.first = spec.first;
    out.market.log_excess_return.resize(std::size_t(n));
    out.market.risk_free.assign(std::size_t(n), spec.risk_free);
    out.market.log_excess_return[0] = spec.noise_vol * rng.normal();
    for (int t = 1; t < n; ++t)
        out.market.log_excess_return[std::size_t(t)] = spec.beta * x[std::size_t(t - 1)] + spec.noise_vol * rng.normal();

    out.predictor.name = "dgp_x";
    out.predictor.observations.reserve(std::size_t(n));
    for (int t = 0; t < n; ++t) out.predictor.observations.emplace_back(spec.first + t, x[std::size_t(t)]);
    return out;
}

OracleMoments oracle_moments(std::span<const double> returns) {
    if (returns.empty()) raise(Errc::kDomain, "empty return sequence");
    long double s2 = 0.0L, s3 = 0.0L, s4 = 0.0L;
    for (double r : returns) {
        if (!std::isfinite(r)) raise(Errc::kDomain, "non-finite return");
        const long double x = r;
        s2 += x * x;
        s3 += x * x * x;
        s4 += x * x * x * x;
    }
    OracleMoments o;
    o.rv = double(s2);
    if (!(s2 > 0.0L)) raise(Errc::kDomain, "realized variance is zero; moments undefined");
    const long double k = (long double)(returns.size());
    o.rs = double(sqrtl(k) * s3 / powl(s2, 1.5L));
    o.rk = double(k * s4 / (s2 * s2));
    return o;
}

} // namespace sdisp
