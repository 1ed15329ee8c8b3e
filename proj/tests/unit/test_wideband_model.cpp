// SPDX-License-Identifier: Apache-2.0

#include "ris/comm.hpp"
#include "ris/wideband_model.hpp"

#include <catch_amalgamated.hpp>

using namespace ris;
using Catch::Matchers::WithinRel;

namespace
{
    WidebandScenario small_scenario()
    {
        WidebandScenario s;
        s.n_side = 4;
        s.tx_ris.clusters = {3, 50e-9};
        s.ris_rx.clusters = {2, 20e-9};
        s.direct = {5, 100e-9};
        return s;
    }
}

TEST_CASE("clustered paths are deterministic per seed", "[wideband]")
{
    auto s = small_scenario();
    PathSet a = generate_clustered_paths(s, 42), b = generate_clustered_paths(s, 42), c = generate_clustered_paths(s, 43);
    REQUIRE(a.ris.size() == 16);
    REQUIRE(a.ris[0].size() == 4 * 3);
    REQUIRE(a.direct.size() == 5);
    bool differs = false;
    for (std::size_t n = 0; n < a.ris.size(); ++n)
        for (std::size_t l = 0; l < a.ris[n].size(); ++l)
        {
            CHECK(a.ris[n][l].delay == b.ris[n][l].delay);
            CHECK(a.ris[n][l].alpha == b.ris[n][l].alpha);
            differs = differs || a.ris[n][l].delay != c.ris[n][l].delay;
        }
    CHECK(differs);
    CHECK_NOTHROW(a.validate());
}

TEST_CASE("leg power splits between the geometric path and the clusters", "[wideband]")
{
    auto s = small_scenario();
    const double lambda = speed_of_light / s.f_c;
    const double area = std::pow(s.spacing_wl * lambda, 2);
    PathSet p = generate_clustered_paths(s, 7);
    const Eigen::Matrix3Xd el = s.geometry().pos * lambda;
    for (std::size_t n = 0; n < p.ris.size(); ++n)
    {
        auto aperture = [&](const Eigen::Vector3d &t)
        {
            Eigen::Vector3d v = t - el.col(Eigen::Index(n));
            return area * (v.x() / v.norm()) / (4.0 * pi * v.squaredNorm());
        };
        // Both legs have LOS, so the shares of each leg sum to one
        double sum = 0.0;
        for (const auto &q : p.ris[n])
            sum += q.alpha * q.beta;
        CHECK_THAT(sum, WithinRel(aperture(s.tx) * aperture(s.rx), 1e-10));
        const double k = db_to_lin(s.tx_ris.k_factor_db);
        const double d_geo = ((s.tx - el.col(Eigen::Index(n))).norm() + (s.rx - el.col(Eigen::Index(n))).norm()) /
                             speed_of_light;
        CHECK_THAT(p.ris[n][0].delay, WithinRel(d_geo, 1e-14));
        CHECK_THAT(p.ris[n][0].alpha, WithinRel(aperture(s.tx) * k / (1.0 + k), 1e-12));
    }

    double direct = 0.0;
    for (const auto &d : p.direct)
        direct += d.rho;
    const double fspl = std::pow(lambda / (4.0 * pi * (s.tx - s.rx).norm()), 2);
    CHECK_THAT(direct, WithinRel(fspl * db_to_lin(-s.direct_excess_loss_db), 1e-12));
}

TEST_CASE("terminal behind the RIS is rejected", "[wideband]")
{
    auto s = small_scenario();
    s.rx.x() = -1.0;
    CHECK_THROWS_AS(generate_clustered_paths(s, 1), std::invalid_argument);
    s = small_scenario();
    s.tx_ris.los = false;
    s.tx_ris.clusters.count = 0;
    CHECK_THROWS_AS(generate_clustered_paths(s, 1), std::invalid_argument);
}

TEST_CASE("wideband evaluation orders the rates", "[wideband]")
{
    auto s = small_scenario();
    for (std::uint64_t seed : {1, 2, 3})
    {
        PathSet p = generate_clustered_paths(s, seed);
        for (double B : {1e6, 5e6})
        {
            WidebandRates r = evaluate_wideband(p, s.f_c, B);
            CHECK(r.K == std::size_t(std::llround(B / 150e3)));
            CHECK(r.stm <= r.bound * (1.0 + 1e-12));
            CHECK(r.stm >= r.no_ris);
            CHECK(r.no_ris > 0.0);

            RadioParams radio;
            radio.B = B;
            radio.eta = default_sampling_delay(p);
            CHECK(r.M == required_taps(p, radio, 1));
        }
    }
}

TEST_CASE("too few subcarriers for the channel length are rejected", "[wideband]")
{
    auto s = small_scenario();
    PathSet p = generate_clustered_paths(s, 1);
    CHECK_THROWS_AS(evaluate_wideband(p, s.f_c, 50e6, 135.0, 10e6), std::invalid_argument);
}
