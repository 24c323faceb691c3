#include "doctest.h"

#include <cmath>
#include <cstring>

#include "helpers.hpp"
#include "sdisp/error.hpp"
#include "sdisp/oos.hpp"
#include "sdisp/synthetic.hpp"

using namespace sdisp;
using testutil::close;
using testutil::market_from;
using testutil::predictor_from;

namespace {

PredictiveDgp dgp(int months, double beta, double rho, double noise, uint64_t seed) {
    PredictiveDgpSpec spec;
    spec.months = months;
    spec.beta = beta;
    spec.predictor_autocorr = rho;
    spec.noise_vol = noise;
    spec.seed = seed;
    return generate_predictive_dgp(spec);
}

// Hand-built records with chosen model/benchmark errors around zero truth.
std::vector<ForecastRecord> records_with_errors(const std::vector<double>& model_err,
                                                const std::vector<double>& bench_err, int horizon = 1) {
    std::vector<ForecastRecord> out;
    for (std::size_t i = 0; i < model_err.size(); ++i) {
        ForecastRecord r;
        r.origin = YearMonth{2010, 1} + int(i);
        r.horizon = horizon;
        r.realized = 0.0;
        r.model = -model_err[i];     // realized - model = model_err
        r.benchmark = -bench_err[i]; // realized - benchmark = bench_err
        out.push_back(r);
    }
    return out;
}

} // namespace

TEST_CASE("expanding forecasts") {
    SUBCASE("constant market return pins the benchmark exactly") {
        const double c = 0.0078125; // dyadic so running means are exact
        auto market = market_from(std::vector<double>(120, c));
        auto d = dgp(120, 0.0, 0.5, 0.1, 3);
        auto records = expanding_forecasts(d.predictor, std::nullopt, market, 1, YearMonth{2004, 1});
        REQUIRE(!records.empty());
        for (const auto& r : records) CHECK(r.benchmark == c);
    }

    SUBCASE("under a null DGP model and benchmark forecasts converge") {
        auto d = dgp(600, 0.0, 0.5, 0.05, 7);
        auto records = expanding_forecasts(d.predictor, std::nullopt, d.market, 1, YearMonth{2004, 1});
        REQUIRE(records.size() > 100);
        double early = 0.0, late = 0.0;
        const std::size_t q = records.size() / 4;
        for (std::size_t i = 0; i < q; ++i) {
            early += std::fabs(records[i].model - records[i].benchmark);
            late += std::fabs(records[records.size() - 1 - i].model - records[records.size() - 1 - i].benchmark);
        }
        CHECK(late < early);
    }

    SUBCASE("origins past the sample end carry no realization and drop from MSFE") {
        auto d = dgp(200, -0.1, 0.5, 0.3, 9);
        auto records = expanding_forecasts(d.predictor, std::nullopt, d.market, 3, YearMonth{2010, 1});
        // The final predictor months have no realized 3-month-ahead return.
        int missing = 0;
        for (const auto& r : records)
            if (!r.realized) ++missing;
        CHECK(missing == 3);
        const double r2_all = r2_oos(records);
        std::vector<ForecastRecord> realized_only;
        for (const auto& r : records)
            if (r.realized) realized_only.push_back(r);
        CHECK(r2_oos(realized_only) == r2_all);
    }

    SUBCASE("no look-ahead: truncating the future leaves forecasts bit-identical") {
        auto d = dgp(400, -0.1, 0.6, 0.3, 11);
        auto full = expanding_forecasts(d.predictor, std::nullopt, d.market, 1, YearMonth{2010, 1});

        PredictiveDgp cut = d;
        cut.market.log_excess_return.resize(350);
        cut.market.risk_free.resize(350);
        cut.predictor.observations.resize(350);
        auto partial = expanding_forecasts(cut.predictor, std::nullopt, cut.market, 1, YearMonth{2010, 1});

        REQUIRE(partial.size() <= full.size());
        for (std::size_t i = 0; i < partial.size(); ++i) {
            CHECK(std::memcmp(&partial[i].model, &full[i].model, sizeof(double)) == 0);
            CHECK(std::memcmp(&partial[i].benchmark, &full[i].benchmark, sizeof(double)) == 0);
        }
    }

    SUBCASE("insufficient history before t0") {
        auto d = dgp(60, 0.0, 0.5, 0.1, 13);
        CHECK_THROWS_AS(
            static_cast<void>(expanding_forecasts(d.predictor, std::nullopt, d.market, 1, YearMonth{2000, 6})),
            Error);
    }

    SUBCASE("serial and OpenMP paths agree bitwise") {
        auto d = dgp(300, -0.05, 0.7, 0.2, 15);
        auto par = expanding_forecasts(d.predictor, std::nullopt, d.market, 3, YearMonth{2010, 1});
        auto ser = expanding_forecasts_serial(d.predictor, std::nullopt, d.market, 3, YearMonth{2010, 1});
        REQUIRE(par.size() == ser.size());
        for (std::size_t i = 0; i < par.size(); ++i) {
            CHECK(par[i].model == ser[i].model);
            CHECK(par[i].benchmark == ser[i].benchmark);
        }
    }
}

TEST_CASE("r2_oos") {
    SUBCASE("ninety percent MSFE ratio") {
        const double s = std::sqrt(0.9);
        std::vector<double> me(20, s), be(20, 1.0);
        auto recs = records_with_errors(me, be);
        CHECK(close(r2_oos(recs), 0.1, 1e-12, 1e-12));
    }
    SUBCASE("model identical to benchmark gives zero") {
        std::vector<double> e{0.1, -0.2, 0.15, 0.05, -0.1, 0.2, 0.1, -0.05, 0.1, -0.1, 0.12, -0.07};
        auto recs = records_with_errors(e, e);
        CHECK(r2_oos(recs) == 0.0);
    }
    SUBCASE("exact model forecasts give one") {
        std::vector<double> zero(15, 0.0), be(15, 0.3);
        CHECK(r2_oos(records_with_errors(zero, be)) == 1.0);
    }
    SUBCASE("degenerate benchmark") {
        std::vector<double> me(15, 0.1), be(15, 0.0);
        try {
            static_cast<void>(r2_oos(records_with_errors(me, be)));
            FAIL("expected degenerate error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::kDegenerate);
        }
    }
    SUBCASE("needs twelve realized records") {
        std::vector<double> e(5, 0.1);
        CHECK_THROWS_AS(static_cast<void>(r2_oos(records_with_errors(e, e))), Error);
    }
    SUBCASE("matches an independent recomputation") {
        Rng rng(77);
        std::vector<double> me(40), be(40);
        for (int i = 0; i < 40; ++i) {
            me[std::size_t(i)] = 0.2 * rng.normal();
            be[std::size_t(i)] = 0.25 * rng.normal();
        }
        auto recs = records_with_errors(me, be);
        double msl = 0.0, msb = 0.0;
        for (int i = 0; i < 40; ++i) {
            msl += me[std::size_t(i)] * me[std::size_t(i)];
            msb += be[std::size_t(i)] * be[std::size_t(i)];
        }
        CHECK(close(r2_oos(recs), 1.0 - (msl / 40.0) / (msb / 40.0)));
    }
}

TEST_CASE("clark-west statistic") {
    SUBCASE("identical forecasts are degenerate") {
        std::vector<double> e(20, 0.1);
        try {
            static_cast<void>(clark_west(records_with_errors(e, e), 1));
            FAIL("expected degenerate error");
        } catch (const Error& err) {
            CHECK(err.code() == Errc::kDegenerate);
        }
    }
    SUBCASE("positive under genuine predictability") {
        auto d = dgp(360, -0.1, 0.5, 0.5033, 21);
        auto recs = expanding_forecasts(d.predictor, std::nullopt, d.market, 1, YearMonth{2015, 1});
        CHECK(clark_west(recs, 1) > 0.0);
        CHECK(r2_oos(recs) > -0.5); // smoke: statistic computable
    }
}

TEST_CASE("cumulative squared-error difference") {
    SUBCASE("identical forecasts give the zero path") {
        std::vector<double> e(12, 0.2);
        auto path = cumulative_sse_diff(records_with_errors(e, e));
        for (const auto& [ym, v] : path) CHECK(v == 0.0);
    }
    SUBCASE("hand fixture: model exact, benchmark off by 0.01") {
        std::vector<double> me(3, 0.0), be(3, 0.01);
        auto path = cumulative_sse_diff(records_with_errors(me, be));
        REQUIRE(path.size() == 3);
        CHECK(close(path[0].second, 1e-4));
        CHECK(close(path[1].second, 2e-4));
        CHECK(close(path[2].second, 3e-4));
    }
    SUBCASE("final value identity and sign consistency") {
        Rng rng(31);
        std::vector<double> me(30), be(30);
        for (int i = 0; i < 30; ++i) {
            me[std::size_t(i)] = 0.1 * rng.normal();
            be[std::size_t(i)] = 0.12 * rng.normal();
        }
        auto recs = records_with_errors(me, be);
        auto path = cumulative_sse_diff(recs);
        double msl = 0.0, msb = 0.0;
        for (int i = 0; i < 30; ++i) {
            msl += me[std::size_t(i)] * me[std::size_t(i)];
            msb += be[std::size_t(i)] * be[std::size_t(i)];
        }
        const double expected_final = 30.0 * (msb / 30.0 - msl / 30.0);
        CHECK(std::fabs(path.back().second - expected_final) <= 1e-12 * std::max(1.0, std::fabs(expected_final)));
        const double r2 = r2_oos(recs);
        CHECK((path.back().second > 0) == (r2 > 0));
    }
}

TEST_CASE("forecast encompassing") {
    Rng rng(41);
    SUBCASE("exact SD forecast takes all the weight") {
        std::vector<double> esd(20, 0.0), ec(20);
        for (auto& v : ec) v = 0.1 + 0.2 * rng.uniform01();
        auto control = records_with_errors(ec, ec);
        auto sd = records_with_errors(esd, esd);
        // encompassing_test reads model errors; control model errors = ec,
        // sd model errors = 0.
        auto res = encompassing_test(control, sd, 1);
        CHECK(res.lambda == 1.0);
        CHECK(res.n == 20);
    }
    SUBCASE("exact control forecast excludes the SD model") {
        std::vector<double> ec(20, 0.0), esd(20);
        for (auto& v : esd) v = 0.1 + 0.2 * rng.uniform01();
        auto res = encompassing_test(records_with_errors(ec, ec), records_with_errors(esd, esd), 1);
        CHECK(res.lambda == 0.0);
    }
    SUBCASE("symmetric noise splits the weight") {
        const int n = 10000;
        std::vector<double> ec(n), esd(n);
        for (int i = 0; i < n; ++i) {
            ec[std::size_t(i)] = 0.05 * rng.normal();
            esd[std::size_t(i)] = 0.05 * rng.normal();
        }
        auto res = encompassing_test(records_with_errors(ec, ec), records_with_errors(esd, esd), 1);
        CHECK(res.lambda == doctest::Approx(0.5).epsilon(0.1));
        CHECK(std::fabs(res.lambda - 0.5) < 0.05);
    }
    SUBCASE("lambda stays in [0,1] and survives common shifts") {
        for (int trial = 0; trial < 50; ++trial) {
            const int n = 15;
            std::vector<double> ec(n), esd(n);
            for (int i = 0; i < n; ++i) {
                ec[std::size_t(i)] = rng.normal();
                esd[std::size_t(i)] = 0.2 * ec[std::size_t(i)] + rng.normal();
            }
            auto control = records_with_errors(ec, ec);
            auto sd = records_with_errors(esd, esd);
            auto res = encompassing_test(control, sd, 1);
            CHECK(res.lambda >= 0.0);
            CHECK(res.lambda <= 1.0);

            // Shift forecasts and realizations by the same constant.
            auto control2 = control;
            auto sd2 = sd;
            for (auto& r : control2) {
                r.model += 0.37;
                r.benchmark += 0.37;
                r.realized = *r.realized + 0.37;
            }
            for (auto& r : sd2) {
                r.model += 0.37;
                r.benchmark += 0.37;
                r.realized = *r.realized + 0.37;
            }
            auto res2 = encompassing_test(control2, sd2, 1);
            CHECK(close(res2.lambda, res.lambda, 1e-9, 1e-9));
        }
    }
    SUBCASE("identical forecasts are degenerate") {
        std::vector<double> e(20, 0.1);
        auto recs = records_with_errors(e, e);
        CHECK_THROWS_AS(static_cast<void>(encompassing_test(recs, recs, 1)), Error);
    }
}
