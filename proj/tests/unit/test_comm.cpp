// SPDX-License-Identifier: Apache-2.0

#include "ris/comm.hpp"

#include <catch_amalgamated.hpp>

using namespace ris;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{
    RadioParams narrowband_radio()
    {
        RadioParams r;
        r.f_c = 3e9;
        r.B = 1e6;
        r.K = 1;
        r.M = 1;
        r.N0 = 1e-20;
        r.P = 1.0;
        return r;
    }

    PathSet random_narrowband(std::size_t N, Rng &rng, double rho = 0.0)
    {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        PathSet p;
        for (std::size_t n = 0; n < N; ++n)
            p.ris.push_back({RisPath{1e-4 * (0.5 + u(rng)), 1e-4 * (0.5 + u(rng)), 1e-7 + 1e-8 * u(rng)}});
        if (rho > 0.0)
            p.direct.push_back({rho, 5e-8 + 1e-8 * u(rng)});
        return p;
    }

    struct WidebandInstance
    {
        TapVector h_d;
        TapMatrix V;
    };

    WidebandInstance random_wideband(std::size_t N, std::size_t M, Rng &rng)
    {
        WidebandInstance w;
        w.h_d.resize(Eigen::Index(M));
        w.V.resize(Eigen::Index(N), Eigen::Index(M));
        for (auto &x : w.h_d)
            x = complex_normal(rng, 1e-12);
        for (Eigen::Index n = 0; n < w.V.rows(); ++n)
            for (Eigen::Index k = 0; k < w.V.cols(); ++k)
                w.V(n, k) = complex_normal(rng, 1e-13);
        return w;
    }

    RadioParams wideband_radio(std::size_t K, std::size_t M)
    {
        RadioParams r;
        r.f_c = 3e9;
        r.B = 10e6;
        r.K = K;
        r.M = M;
        r.N0 = 1e-20;
        r.P = 1e-3;
        return r;
    }

    double peak_tap(const TapVector &h_d, const TapMatrix &V, const Eigen::VectorXcd &w)
    {
        return (h_d + V.transpose() * w).cwiseAbs().maxCoeff();
    }
}

TEST_CASE("AWGN capacity examples", "[comm]")
{
    CHECK(awgn_capacity(1.0, 1.0) == 1.0);
    CHECK(awgn_capacity(3.0, 2.0) == 4.0);
    CHECK(awgn_capacity(0.0, 5e6) == 0.0);
    CHECK_THROWS_AS(awgn_capacity(-1e-3, 1.0), std::invalid_argument);
}

TEST_CASE("phase alphabets", "[comm]")
{
    auto a = PhaseAlphabet::four_phase();
    REQUIRE(a.values.size() == 4);
    CHECK_THAT(a.values[0], WithinAbs(pi / 2.0, 1e-15));
    CHECK_THAT(a.values[2], WithinAbs(3.0 * pi / 2.0, 1e-15));
    CHECK_THAT(a.nearest(0.9), WithinAbs(pi / 2.0, 1e-15));
    CHECK_THAT(a.nearest(-0.3), WithinAbs(0.0, 1e-15));
    CHECK_THAT(a.nearest(2.0 * pi - 0.2), WithinAbs(0.0, 1e-15));
    CHECK_THROWS_AS(PhaseAlphabet{}.validate(), std::invalid_argument);
    CHECK_THROWS_AS((PhaseAlphabet{{7.0}, false}.validate()), std::invalid_argument);
}

TEST_CASE("waterfilling examples", "[comm]")
{
    Eigen::VectorXd w(2);
    w << 1.0, 0.25;
    auto r = waterfilling(w, 1.0);
    CHECK_THAT(r.water_level, WithinAbs(1.625, 1e-12));
    CHECK_THAT(r.power[0], WithinAbs(0.625, 1e-12));
    CHECK_THAT(r.power[1], WithinAbs(1.375, 1e-12));

    auto eq = waterfilling(Eigen::VectorXd::Constant(8, 0.3), 2.0);
    CHECK((eq.power.array() - 2.0).abs().maxCoeff() < 1e-12);

    Eigen::VectorXd wi(3);
    wi << 0.1, std::numeric_limits<double>::infinity(), 0.1;
    auto ri = waterfilling(wi, 1.0);
    CHECK(ri.power[1] == 0.0);
    CHECK_THAT(ri.power[0], WithinRel(1.5, 1e-12));
    CHECK_THAT(ri.power.mean(), WithinRel(1.0, 1e-12));

    CHECK_THROWS_AS(waterfilling(w, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(waterfilling(Eigen::VectorXd::Constant(2, std::numeric_limits<double>::infinity()), 1.0),
                    std::invalid_argument);
}

TEST_CASE("waterfilling meets the budget and complementary slackness", "[comm]")
{
    Rng rng(31);
    std::lognormal_distribution<double> ln(0.0, 2.0);
    for (int t = 0; t < 200; ++t)
    {
        Eigen::VectorXd w(37);
        for (auto &x : w)
            x = ln(rng);
        const double P = 0.01 + ln(rng);
        auto r = waterfilling(w, P);
        CHECK_THAT(r.power.mean(), WithinRel(P, 1e-9));
        for (Eigen::Index i = 0; i < w.size(); ++i)
        {
            CHECK(r.power[i] >= 0.0);
            if (r.power[i] > 0.0)
                CHECK_THAT(r.water_level - w[i], WithinAbs(r.power[i], 1e-9 * r.water_level));
            else
                CHECK(w[i] >= r.water_level - 1e-12 * r.water_level);
        }
    }
}

TEST_CASE("narrowband parity examples", "[comm]")
{
    RadioParams r = narrowband_radio();
    auto ris_only = [&](std::size_t N)
    {
        PathSet p;
        for (std::size_t n = 0; n < N; ++n)
            p.ris.push_back({RisPath{1e-7, 1e-7, 0.0}});
        return coherent_snr(p, r);
    };
    auto direct_only = [&](double rho)
    {
        PathSet p;
        p.direct.push_back({rho, 0.0});
        return coherent_snr(p, r);
    };
    CHECK(ris_only(31) < direct_only(1e-11));
    CHECK(ris_only(32) > direct_only(1e-11));
    CHECK_THAT(ris_only(1000), WithinRel(direct_only(1e-8), 1e-12));
    CHECK_THAT(ris_only(500) * 4.0, WithinRel(ris_only(1000), 1e-12));
}

TEST_CASE("continuous alignment reaches the coherent SNR", "[comm]")
{
    Rng rng(8);
    RadioParams r = narrowband_radio();
    for (double rho : {0.0, 1e-9})
        for (int t = 0; t < 20; ++t)
        {
            PathSet p = random_narrowband(24, rng, rho);
            auto res = optimize_narrowband(p, PhaseAlphabet::any_phase(), r);
            CHECK_THAT(res.snr, WithinRel(coherent_snr(p, r), 1e-10));
            CHECK(res.config.delay.minCoeff() >= 0.0);
            CHECK(res.config.delay.maxCoeff() < 1.0 / r.f_c + (rho > 0.0 ? 0.0 : 1e-8));
            CHECK_THAT(res.capacity, WithinRel(awgn_capacity(res.snr, r.B), 1e-14));
        }
}

TEST_CASE("equal losses without a direct path give the quadratic law", "[comm]")
{
    RadioParams r = narrowband_radio();
    Rng rng(1);
    std::uniform_real_distribution<double> u(0.0, 1e-7);
    for (std::size_t N : {1, 4, 64, 256})
    {
        PathSet p;
        for (std::size_t n = 0; n < N; ++n)
            p.ris.push_back({RisPath{1e-5, 4e-6, u(rng)}});
        auto res = optimize_narrowband(p, PhaseAlphabet::any_phase(), r, 0.5);
        double expect = double(N * N) * 1e-5 * 4e-6 * 0.5 * r.P / (r.B * r.N0);
        CHECK_THAT(res.snr, WithinRel(expect, 1e-10));
    }
}

TEST_CASE("common delay leaves the aligned magnitude unchanged", "[comm]")
{
    Rng rng(12);
    RadioParams r = narrowband_radio();
    PathSet p = random_narrowband(16, rng, 1e-9);
    auto a = optimize_narrowband(p, PhaseAlphabet::any_phase(), r);
    for (double shift : {1.3e-9, 7.77e-6})
    {
        PathSet q = p;
        for (auto &e : q.ris)
            e[0].delay += shift;
        q.direct[0].delay += shift;
        auto b = optimize_narrowband(q, PhaseAlphabet::any_phase(), r);
        CHECK_THAT(std::abs(b.coefficient), WithinRel(std::abs(a.coefficient), 1e-9));
        auto bq = optimize_narrowband(q, PhaseAlphabet::four_phase(), r);
        CHECK(bq.config.delay.minCoeff() >= 0.0);
    }
}

TEST_CASE("direct path alignment reports integer carrier cycles", "[comm]")
{
    RadioParams r = narrowband_radio();
    PathSet p;
    p.direct.push_back({1e-9, 10e-9});
    p.ris.push_back({RisPath{1e-5, 1e-5, 20.1 / r.f_c + 10e-9}});
    p.ris.push_back({RisPath{1e-5, 1e-5, 23.6 / r.f_c + 10e-9}});
    auto res = optimize_narrowband(p, PhaseAlphabet::any_phase(), r);
    REQUIRE(res.carrier_cycles.size() == 2);
    CHECK(res.carrier_cycles[0] == 21);
    CHECK(res.carrier_cycles[1] == 24);
    CHECK_THAT(res.config.delay[0] * r.f_c, WithinAbs(0.9, 1e-6));
    CHECK_THAT(res.config.delay[1] * r.f_c, WithinAbs(0.4, 1e-6));
    CHECK_THAT(res.delay_spread * r.f_c, WithinAbs(24.0, 1e-9));
}

TEST_CASE("two-element grid search never beats continuous alignment", "[comm]")
{
    Rng rng(44);
    RadioParams r = narrowband_radio();
    for (int t = 0; t < 50; ++t)
    {
        PathSet p = random_narrowband(2, rng, t % 2 ? 1e-9 : 0.0);
        double best = optimize_narrowband(p, PhaseAlphabet::any_phase(), r).snr;
        double grid = 0.0;
        for (int i = 0; i < 64; ++i)
            for (int j = 0; j < 64; ++j)
            {
                Eigen::VectorXcd w(2);
                w << std::polar(1.0, 2.0 * pi * i / 64.0), std::polar(1.0, 2.0 * pi * j / 64.0);
                cplx h = narrowband_coefficient(p, RisConfig::from_omega(w), r);
                grid = std::max(grid, r.P * std::norm(h) / (r.B * r.N0));
            }
        CHECK(grid <= best * (1.0 + 1e-12));
        CHECK(grid >= best * std::pow(std::cos(pi / 64.0), 2) * 0.999);
    }
}

TEST_CASE("four-phase quantization loses about 8/pi^2 on average", "[comm]")
{
    Rng rng(2024);
    RadioParams r = narrowband_radio();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int trials = 100000;
    const std::size_t N = 64;
    PathSet p;
    p.ris.assign(N, {RisPath{1e-5, 1e-5, 0.0}});
    const double cont = coherent_snr(p, r);
    double acc = 0.0;
    for (int t = 0; t < trials; ++t)
    {
        for (auto &e : p.ris)
            e[0].delay = u(rng) / r.f_c;
        acc += optimize_narrowband(p, PhaseAlphabet::four_phase(), r).snr / cont;
    }
    const double mean = acc / trials;
    CHECK(std::abs(lin_to_db(mean) - lin_to_db(8.0 / (pi * pi))) < 0.1);
    CHECK(mean >= 8.0 / (pi * pi) - 0.02);
}

TEST_CASE("STM closed form", "[comm]")
{
    Rng rng(5);
    for (int t = 0; t < 30; ++t)
    {
        auto w = random_wideband(6, 5, rng);
        RisConfig cfg = stm_configure(w.h_d, w.V);
        const Eigen::Index l = Eigen::Index(stm_tap(w.h_d, w.V));
        cplx tap = w.h_d[l] + (w.V.col(l).transpose() * cfg.omega())(0);
        double expect = std::abs(w.h_d[l]) + w.V.col(l).cwiseAbs().sum();
        CHECK_THAT(std::abs(tap), WithinRel(expect, 1e-12));
        CHECK(std::abs(std::remainder(std::arg(tap) - std::arg(w.h_d[l]), 2.0 * pi)) < 1e-10);
        CHECK((cfg.omega().cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("STM matches an exhaustive 16-phase search", "[comm]")
{
    Rng rng(77);
    for (int t = 0; t < 10; ++t)
    {
        auto w = random_wideband(3, 2, rng);
        double stm = peak_tap(w.h_d, w.V, stm_configure(w.h_d, w.V).omega());
        double grid = 0.0;
        Eigen::VectorXcd om(3);
        for (int a = 0; a < 16; ++a)
            for (int b = 0; b < 16; ++b)
                for (int c = 0; c < 16; ++c)
                {
                    om << std::polar(1.0, 2.0 * pi * a / 16.0), std::polar(1.0, 2.0 * pi * b / 16.0),
                        std::polar(1.0, 2.0 * pi * c / 16.0);
                    grid = std::max(grid, peak_tap(w.h_d, w.V, om));
                }
        CHECK(grid <= stm * (1.0 + 1e-12));
        CHECK(grid >= stm * std::cos(pi / 16.0));
    }
}

TEST_CASE("STM tie goes to the lowest tap", "[comm]")
{
    TapVector h_d = TapVector::Constant(3, cplx(0.5, 0.0));
    TapMatrix V = TapMatrix::Constant(2, 3, cplx(0.0, 0.25));
    CHECK(stm_tap(h_d, V) == 0);
    CHECK_THROWS_AS(stm_tap(TapVector::Zero(2), TapMatrix::Zero(4, 2)), std::invalid_argument);
}

TEST_CASE("single-tap STM equals narrowband alignment", "[comm]")
{
    Rng rng(19);
    RadioParams r = narrowband_radio();
    for (int t = 0; t < 10; ++t)
    {
        PathSet p = random_narrowband(8, rng, 1e-9);
        // One tap holding each path with its carrier phase
        TapVector h_d = TapVector::Constant(1, narrowband_coefficient(p, RisConfig::off(8), r));
        TapMatrix V(8, 1);
        for (Eigen::Index n = 0; n < 8; ++n)
        {
            PathSet single;
            single.ris.push_back(p.ris[std::size_t(n)]);
            V(n, 0) = narrowband_coefficient(single, RisConfig::from_omega(Eigen::VectorXcd::Ones(1)), r);
        }
        RisConfig stm = stm_configure(h_d, V);
        cplx h_stm = narrowband_coefficient(p, stm, r);
        cplx h_nb = optimize_narrowband(p, PhaseAlphabet::any_phase(), r).coefficient;
        CHECK_THAT(std::abs(h_stm), WithinRel(std::abs(h_nb), 1e-9));

        RadioParams r1 = r;
        RateResult bound = rate_upper_bound_waterfilled(h_d, V, r1);
        double snr = optimize_narrowband(p, PhaseAlphabet::any_phase(), r).snr;
        CHECK_THAT(bound.rate, WithinRel(awgn_capacity(snr, r.B), 1e-9));
    }
}

TEST_CASE("rates of random wideband instances", "[comm]")
{
    Rng rng(123);
    std::uniform_real_distribution<double> u(0.0, 2.0 * pi);
    for (int t = 0; t < 40; ++t)
    {
        const std::size_t M = 1 + std::size_t(t % 6);
        RadioParams r = wideband_radio(32, M);
        auto w = random_wideband(10, M, rng);
        Eigen::VectorXd uniform = Eigen::VectorXd::Constant(32, r.P);
        double bound_u = rate_upper_bound(w.h_d, w.V, r, uniform);
        RateResult bound_wf = rate_upper_bound_waterfilled(w.h_d, w.V, r);
        CHECK_THAT(bound_wf.power.mean(), WithinRel(r.P, 1e-9));
        for (int c = 0; c < 5; ++c)
        {
            Eigen::VectorXcd om(10);
            for (auto &x : om)
                x = std::polar(1.0, u(rng));
            RisConfig cfg = RisConfig::from_omega(om);
            CHECK(wideband_rate(w.h_d, w.V, cfg, r, uniform) <= bound_u * (1.0 + 1e-12));
            RateResult wf = wideband_rate_waterfilled(w.h_d, w.V, cfg, r);
            CHECK(wf.rate >= 0.0);
            CHECK(wf.rate <= bound_wf.rate * (1.0 + 1e-12));
        }
        RateResult stm = wideband_rate_waterfilled(w.h_d, w.V, stm_configure(w.h_d, w.V), r);
        CHECK(stm.rate <= bound_wf.rate * (1.0 + 1e-12));
    }
}

TEST_CASE("switched-off RIS gives the direct-only rate", "[comm]")
{
    Rng rng(3);
    RadioParams r = wideband_radio(16, 4);
    auto w = random_wideband(5, 4, rng);
    Eigen::VectorXd power = Eigen::VectorXd::Constant(16, r.P);
    double off = wideband_rate(w.h_d, w.V, RisConfig::off(5), r, power);
    double direct = rate_from_gains(frequency_response(w.h_d, 16).cwiseAbs2(), power, r, 4);
    CHECK_THAT(off, WithinRel(direct, 1e-14));
    CHECK_THAT(rate_upper_bound(w.h_d, TapMatrix::Zero(5, 4), r, power), WithinRel(direct, 1e-12));
}

TEST_CASE("single carrier single tap rate reduces to AWGN capacity", "[comm]")
{
    RadioParams r = wideband_radio(1, 1);
    TapVector h_d(1);
    h_d << cplx(3e-6, -1e-6);
    TapMatrix V = TapMatrix::Zero(2, 1);
    double rate = wideband_rate(h_d, V, RisConfig::off(2), r, Eigen::VectorXd::Constant(1, r.P));
    CHECK_THAT(rate, WithinRel(awgn_capacity(r.P * std::norm(h_d[0]) / (r.B * r.N0), r.B), 1e-14));
}

TEST_CASE("power allocation over the budget is rejected", "[comm]")
{
    RadioParams r = wideband_radio(4, 1);
    Eigen::VectorXd g = Eigen::VectorXd::Ones(4);
    CHECK_THROWS_AS(rate_from_gains(g, Eigen::VectorXd::Constant(4, 2.0 * r.P), r, 1), std::invalid_argument);
    Eigen::VectorXd neg = Eigen::VectorXd::Constant(4, r.P);
    neg[0] = -1e-6;
    CHECK_THROWS_AS(rate_from_gains(g, neg, r, 1), std::invalid_argument);
}
