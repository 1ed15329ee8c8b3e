// SPDX-License-Identifier: Apache-2.0

#include "ris/comm.hpp"
#include "ris/mobility.hpp"

#include <catch_amalgamated.hpp>

using namespace ris;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{
    MobilityScene scene(bool direct = true)
    {
        MobilityScene s;
        s.tx = Eigen::Vector3d(20.0, -20.0, 0.0);
        s.geometry = ArrayGeometry::ula(16, 0.5);
        s.f_c = 3e9;
        s.has_direct = direct;
        return s;
    }

    const Eigen::Vector3d rx0(10.0, 5.0, 0.0);

    Trajectory receding(double speed, double dt, std::size_t n)
    {
        return Trajectory::linear(rx0, speed * rx0.normalized(), dt, n);
    }
}

TEST_CASE("static receiver keeps the static minimum-delay configuration", "[mobility]")
{
    auto s = scene();
    Trajectory tr = Trajectory::linear(rx0, Eigen::Vector3d::Zero(), 1e-4, 5);
    TrackingResult tk = tracking_config(tr, s, true);
    auto nb = optimize_narrowband(s.paths_at(rx0), PhaseAlphabet::any_phase(), RadioParams{3e9, 1e6, 1, 1});
    for (const auto &c : tk.configs)
    {
        CHECK((c.delay - tk.configs[0].delay).norm() == 0.0);
        CHECK((c.delay - nb.config.delay).cwiseAbs().maxCoeff() < 1e-6 / s.f_c);
    }
    DopplerResult d = doppler_metrics(tr, tk.configs, s);
    CHECK(d.shift.cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.max_spread == 0.0);
}

TEST_CASE("tracking with a direct path gives zero Doppler spread", "[mobility]")
{
    auto s = scene();
    Trajectory tr = receding(30.0, 1e-5, 400);
    TrackingResult tk = tracking_config(tr, s, true);
    for (const auto &c : tk.configs)
        CHECK(c.delay.minCoeff() >= 0.0);
    DopplerResult d = doppler_metrics(tr, tk.configs, s);
    const double direct = d.shift(200, 16);
    CHECK(std::abs(direct) > 10.0);
    // Phase identity holds up to the rounding of nanosecond delays
    CHECK(d.max_spread < 1e-6);
    CHECK(phase_alignment_residual(tr, tk, s) < 1e-9);
    CHECK_FALSE(d.coarse_step);
}

TEST_CASE("tracking without a direct path cloaks the Doppler shift", "[mobility]")
{
    auto s = scene(false);
    Trajectory tr = receding(30.0, 1e-5, 400);
    TrackingResult tk = tracking_config(tr, s, false);
    DopplerResult d = doppler_metrics(tr, tk.configs, s);
    std::size_t valid = 0;
    for (Eigen::Index i = 0; i < d.shift.rows(); ++i)
        for (Eigen::Index n = 0; n < 16; ++n)
            if (d.valid(i, n))
            {
                ++valid;
                CHECK(std::abs(d.shift(i, n)) < 1e-6);
            }
    CHECK(valid > 300 * 16);
    CHECK_FALSE(d.jumps.empty());
    for (std::size_t j : d.jumps)
        CHECK_FALSE(d.valid(Eigen::Index(j + 1), 0));
    CHECK_THROWS_AS(tracking_config(tr, s, true), std::invalid_argument);
}

TEST_CASE("cycle counts never decrease for a receding receiver", "[mobility]")
{
    auto s = scene(false);
    Trajectory tr = receding(30.0, 1e-4, 300);
    TrackingResult tk = tracking_config(tr, s, false);
    for (std::size_t i = 1; i < tk.cycles.size(); ++i)
        for (std::size_t n = 0; n < 16; ++n)
            CHECK(tk.cycles[i][n] >= tk.cycles[i - 1][n]);
    CHECK(tk.cycles.back()[0] > tk.cycles.front()[0]);
}

TEST_CASE("frozen configuration sees the receding Doppler shift", "[mobility]")
{
    auto s = scene();
    const double v = 30.0;
    const Eigen::Vector3d start = 100.0 * rx0.normalized();
    Trajectory tr = Trajectory::linear(start, v * start.normalized(), 1e-4, 50);
    RisConfig frozen = tracking_config(tr, s, true).configs[0];
    DopplerResult d = doppler_metrics(tr, frozen_config(frozen, tr.size()), s);
    const double expect = -s.f_c * v / speed_of_light;
    CHECK_THAT(expect, WithinRel(-300.0, 0.001));
    for (Eigen::Index i = 1; i + 1 < d.shift.rows(); ++i)
        for (Eigen::Index n = 0; n < 16; ++n)
        {
            REQUIRE(d.valid(i, n));
            CHECK_THAT(d.shift(i, n), WithinRel(expect, 0.01));
        }
}

TEST_CASE("finite-difference Doppler converges at second order", "[mobility]")
{
    auto s = scene(false);
    const Eigen::Vector3d mid(5.0, 0.0, 0.0), vel(0.0, 30.0, 0.0);
    const Eigen::Vector3d el0 = s.element_positions().col(0);
    const Eigen::Vector3d off = mid + vel * 0.05 - el0;
    // Analytic shift of element 0 at the middle sample of the path passing by the RIS
    const double exact = -s.f_c * off.dot(vel) / (off.norm() * speed_of_light);
    double err[2];
    int i = 0;
    for (double dt : {4e-3, 2e-3})
    {
        Trajectory tr = Trajectory::linear(mid + vel * (0.05 - dt), vel, dt, 3);
        RisConfig zero = RisConfig::from_delays(Eigen::VectorXd::Zero(16), s.f_c);
        DopplerResult d = doppler_metrics(tr, frozen_config(zero, 3), s);
        err[i++] = std::abs(d.shift(1, 0) - exact);
    }
    CHECK(err[0] > 0.0);
    CHECK_THAT(err[0] / err[1], WithinAbs(4.0, 0.3));
}

TEST_CASE("coarse time steps are flagged", "[mobility]")
{
    auto s = scene();
    Trajectory tr = receding(30.0, 1e-2, 5);
    RisConfig frozen = tracking_config(tr, s, true).configs[0];
    CHECK(doppler_metrics(tr, frozen_config(frozen, 5), s).coarse_step);
}

TEST_CASE("invalid trajectories are rejected", "[mobility]")
{
    auto s = scene();
    Trajectory behind = Trajectory::linear(Eigen::Vector3d(1.0, 0.0, 0.0), Eigen::Vector3d(-100.0, 0.0, 0.0), 0.01, 5);
    CHECK_THROWS_AS(tracking_config(behind, s, true), std::invalid_argument);
    Trajectory two = Trajectory::linear(rx0, Eigen::Vector3d::Zero(), 0.01, 2);
    CHECK_THROWS_AS(doppler_metrics(two, frozen_config(RisConfig::off(16), 2), s), std::invalid_argument);
    Trajectory bad = Trajectory::linear(rx0, Eigen::Vector3d::Zero(), 0.0, 4);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
