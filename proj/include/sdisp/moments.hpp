#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sdisp/dates.hpp"
#include "sdisp/ingest.hpp"

namespace sdisp {

enum class Moment { kSkewness, kKurtosis };
const char* moment_name(Moment m); // "skew" / "kurt"

// Daily realized moments from one stock-day's intraday log returns.
// rv = sum r^2, rs = sqrt(K) sum r^3 / rv^(3/2), rk = K sum r^4 / rv^2.
// Power sums use compensated summation; a stock-day is computed sequentially
// so results do not depend on any parallel schedule.
double realized_variance(std::span<const double> returns);
double realized_skewness(std::span<const double> returns); // requires rv > 0
double realized_kurtosis(std::span<const double> returns); // requires rv > 0

struct DailyMomentRecord {
    std::string ticker;
    Date date;
    double rv = 0.0;
    double rs = 0.0;
    double rk = 0.0;
    int k = 0; // intraday return count used
};

struct CrossSectionSnapshot {
    Date date;
    Moment moment = Moment::kSkewness;
    std::vector<double> values; // multiset semantics; stored ticker-sorted
};

struct PanelBuildReport {
    std::size_t processed = 0;
    std::size_t excluded_zero_variance = 0;

    bool operator==(const PanelBuildReport&) const = default;
};

struct MomentPanel {
    std::vector<DailyMomentRecord> records; // sorted by (date, ticker)
    PanelBuildReport report;
};

// Builds the daily panel from return grids. Stock-days with rv == 0 are
// excluded and counted, not imputed. Output is a pure function of the input
// multiset: grids are canonically ordered before computation, so a shuffled
// stream serializes byte-identically.
MomentPanel build_moment_panel(std::vector<IntradayReturnGrid> grids);        // OpenMP over stock-days
MomentPanel build_moment_panel_serial(std::vector<IntradayReturnGrid> grids); // reference

// Per-date cross sections of rs (or rk), dates ascending.
std::vector<CrossSectionSnapshot> cross_sections(const MomentPanel& panel, Moment moment);

// date,ticker,rv,rs,rk,k lines, 10 significant digits.
void write_panel(std::ostream& out, const MomentPanel& panel);
MomentPanel read_panel(std::istream& in);

// date,moment,value long format.
void write_snapshots(std::ostream& out, std::span<const CrossSectionSnapshot> snaps);

} // namespace sdisp
