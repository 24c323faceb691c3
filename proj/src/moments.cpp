#include "sdisp/moments.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "sdisp/error.hpp"
#include "sdisp/io_util.hpp"

namespace sdisp {

const char* moment_name(Moment m) { return m == Moment::kSkewness ? "skew" : "kurt"; }

namespace {

// Kahan compensated accumulator. 78-term sums of tiny magnitudes feed
// percentile machinery downstream, so the power sums are kept bit-stable.
class KahanSum {
public:
    void add(double x) {
        double y = x - c_;
        double t = sum_ + y;
        c_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double c_ = 0.0;
};

struct PowerSums {
    double s2 = 0.0, s3 = 0.0, s4 = 0.0;
    std::size_t n = 0;
};

PowerSums power_sums(std::span<const double> returns) {
    if (returns.empty()) raise(Errc::kDomain, "empty return sequence");
    KahanSum s2, s3, s4;
    for (double r : returns) {
        if (!std::isfinite(r)) raise(Errc::kDomain, "non-finite return");
        const double r2 = r * r;
        s2.add(r2);
        s3.add(r2 * r);
        s4.add(r2 * r2);
    }
    return PowerSums{s2.value(), s3.value(), s4.value(), returns.size()};
}

} // namespace

double realized_variance(std::span<const double> returns) { return power_sums(returns).s2; }

double realized_skewness(std::span<const double> returns) {
    PowerSums s = power_sums(returns);
    if (s.s2 <= 0.0) raise(Errc::kDomain, "realized variance is zero; skewness undefined");
    return std::sqrt(double(s.n)) * s.s3 / std::pow(s.s2, 1.5);
}

double realized_kurtosis(std::span<const double> returns) {
    PowerSums s = power_sums(returns);
    if (s.s2 <= 0.0) raise(Errc::kDomain, "realized variance is zero; kurtosis undefined");
    return double(s.n) * s.s4 / (s.s2 * s.s2);
}

namespace {

void canonical_order(std::vector<IntradayReturnGrid>& grids) {
    std::sort(grids.begin(), grids.end(), [](const IntradayReturnGrid& a, const IntradayReturnGrid& b) {
        if (a.date != b.date) return a.date < b.date;
        return a.ticker < b.ticker;
    });
}

MomentPanel assemble(std::vector<IntradayReturnGrid>& grids, std::vector<DailyMomentRecord>& maybe,
                     const std::vector<char>& ok) {
    MomentPanel panel;
    panel.records.reserve(grids.size());
    for (std::size_t i = 0; i < grids.size(); ++i) {
        if (ok[i]) {
            panel.records.push_back(std::move(maybe[i]));
            ++panel.report.processed;
        } else {
            ++panel.report.excluded_zero_variance;
        }
    }
    return panel;
}

} // namespace

MomentPanel build_moment_panel(std::vector<IntradayReturnGrid> grids) {
    canonical_order(grids);
    const std::size_t n = grids.size();
    std::vector<DailyMomentRecord> maybe(n);
    std::vector<char> ok(n, 0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
        const IntradayReturnGrid& g = grids[std::size_t(i)];
        PowerSums s = power_sums(g.returns);
        if (s.s2 <= 0.0) continue; // undefined moments: exclude, never impute
        DailyMomentRecord& rec = maybe[std::size_t(i)];
        rec.ticker = g.ticker;
        rec.date = g.date;
        rec.rv = s.s2;
        rec.rs = std::sqrt(double(s.n)) * s.s3 / std::pow(s.s2, 1.5);
        rec.rk = double(s.n) * s.s4 / (s.s2 * s.s2);
        rec.k = int(s.n);
        ok[std::size_t(i)] = 1;
    }
    return assemble(grids, maybe, ok);
}

MomentPanel build_moment_panel_serial(std::vector<IntradayReturnGrid> grids) {
    canonical_order(grids);
    const std::size_t n = grids.size();
    std::vector<DailyMomentRecord> maybe(n);
    std::vector<char> ok(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const IntradayReturnGrid& g = grids[i];
        PowerSums s = power_sums(g.returns);
        if (s.s2 <= 0.0) continue;
        DailyMomentRecord& rec = maybe[i];
        rec.ticker = g.ticker;
        rec.date = g.date;
        rec.rv = s.s2;
        rec.rs = std::sqrt(double(s.n)) * s.s3 / std::pow(s.s2, 1.5);
        rec.rk = double(s.n) * s.s4 / (s.s2 * s.s2);
        rec.k = int(s.n);
        ok[i] = 1;
    }
    return assemble(grids, maybe, ok);
}

std::vector<CrossSectionSnapshot> cross_sections(const MomentPanel& panel, Moment moment) {
    std::vector<CrossSectionSnapshot> snaps;
    std::size_t i = 0;
    const auto& recs = panel.records;
    while (i < recs.size()) {
        std::size_t j = i;
        CrossSectionSnapshot snap;
        snap.date = recs[i].date;
        snap.moment = moment;
        while (j < recs.size() && recs[j].date == recs[i].date) {
            snap.values.push_back(moment == Moment::kSkewness ? recs[j].rs : recs[j].rk);
            ++j;
        }
        snaps.push_back(std::move(snap));
        i = j;
    }
    return snaps;
}

void write_panel(std::ostream& out, const MomentPanel& panel) {
    for (const DailyMomentRecord& r : panel.records)
        out << format_date(r.date) << ',' << r.ticker << ',' << format_num(r.rv) << ',' << format_num(r.rs) << ','
            << format_num(r.rk) << ',' << r.k << '\n';
}

MomentPanel read_panel(std::istream& in) {
    MomentPanel panel;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = trim(line);
        if (sv.empty()) continue;
        std::vector<std::string_view> f = split(sv, ',');
        if (f.size() != 6) raise(Errc::kParse, "panel line " + std::to_string(lineno) + ": want 6 columns");
        DailyMomentRecord rec;
        try {
            rec.date = parse_date(trim(f[0]));
        } catch (const Error& e) {
            raise(Errc::kParse, "panel line " + std::to_string(lineno) + ": " + e.what());
        }
        rec.ticker = std::string(trim(f[1]));
        if (!parse_double(f[2], rec.rv) || !parse_double(f[3], rec.rs) || !parse_double(f[4], rec.rk) ||
            !parse_int(f[5], rec.k))
            raise(Errc::kParse, "panel line " + std::to_string(lineno) + ": bad numeric field");
        panel.records.push_back(std::move(rec));
    }
    if (in.bad()) raise(Errc::kIo, "read failure while parsing panel");
    std::sort(panel.records.begin(), panel.records.end(), [](const DailyMomentRecord& a, const DailyMomentRecord& b) {
        if (a.date != b.date) return a.date < b.date;
        return a.ticker < b.ticker;
    });
    panel.report.processed = panel.records.size();
    return panel;
}

void write_snapshots(std::ostream& out, std::span<const CrossSectionSnapshot> snaps) {
    for (const CrossSectionSnapshot& s : snaps)
        for (double v : s.values)
            out << format_date(s.date) << ',' << moment_name(s.moment) << ',' << format_num(v) << '\n';
}

} // namespace sdisp
