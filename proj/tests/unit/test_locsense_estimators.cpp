// SPDX-License-Identifier: Apache-2.0

#include "loc_fixtures.hpp"

#include <catch_amalgamated.hpp>

using namespace ris;
using namespace ris::loc;
using namespace ris::loc::test;
using Catch::Matchers::WithinAbs;

namespace
{
    Eigen::VectorXcd uncontrollable(const std::vector<double> &tau, const std::vector<cplx> &g, const RadioParams &r)
    {
        ChannelParams prm;
        prm.tau = tau;
        prm.gain = g;
        return uncontrollable_response(prm, constant_pilot(r), r);
    }
}

TEST_CASE("on-grid single delay is recovered exactly", "[locsense]")
{
    RadioParams r = indoor_radio(256);
    const double tau = 37.0 / (8.0 * r.B);
    DelayEstimate d = estimate_uncontrollable_delays(uncontrollable({tau}, {cplx(1e-4, 2e-4)}, r), constant_pilot(r), r, 1);
    REQUIRE(d.tau.size() == 1);
    CHECK_THAT(d.tau[0] * r.B, WithinAbs(tau * r.B, 1e-6));
    CHECK(std::abs(d.amplitude[0] - cplx(1e-4, 2e-4)) < 1e-9);
}

TEST_CASE("two paths three samples apart are resolved", "[locsense]")
{
    RadioParams r = indoor_radio(256);
    const double t1 = 20.3 / r.B, t2 = 23.3 / r.B;
    DelayEstimate d = estimate_uncontrollable_delays(
        uncontrollable({t1, t2}, {cplx(1.0, 0.0), std::polar(0.6, 2.0)}, r), constant_pilot(r), r, 2);
    REQUIRE(d.tau.size() == 2);
    CHECK_THAT(d.tau[0] * r.B, WithinAbs(20.3, 0.05));
    CHECK_THAT(d.tau[1] * r.B, WithinAbs(23.3, 0.05));
}

TEST_CASE("only paths above the noise threshold are returned", "[locsense]")
{
    RadioParams r = indoor_radio(256);
    Eigen::VectorXcd x = constant_pilot(r);
    const double var = 1e-6 * std::norm(x[0]);
    Rng rng(4);
    Eigen::VectorXcd z = uncontrollable({30.0 / r.B}, {cplx(1.0, 0.0)}, r);
    Eigen::VectorXcd noise(z.size());
    for (auto &n : noise)
        n = complex_normal(rng, var);
    DelayEstimatorOptions opt;
    opt.noise_var = var;
    DelayEstimate d = estimate_uncontrollable_delays(z + noise, x, r, 3, opt);
    CHECK(d.tau.size() == 1);
    DelayEstimate none = estimate_uncontrollable_delays(noise, x, r, 3, opt);
    CHECK(none.tau.empty());
}

TEST_CASE("noiseless RIS parameters are recovered", "[locsense]")
{
    Scenario s = room(false);
    RadioParams r = indoor_radio(3000);
    ChannelParams prm = geometric_params(s, r, 2);
    CodedSchedule sch = random_schedule(8, 256, 64, 7);
    Eigen::VectorXcd x = constant_pilot(r);
    Rng rng(0);
    SeparatedChannels obs = simulate_separated(s, prm, 0, sch, x, r, 0.0, rng);
    RisEstimatorOptions opt;
    RisEstimate e = estimate_ris_params(obs.per_config, sch, s.ris[0], prm.ris[0].aoa, x, r, opt);
    const double grid = 1.0 / (double(opt.delay_oversampling) * r.B);
    CHECK(std::abs(e.tau - prm.ris[0].tau) <= opt.tolerance * grid);
    CHECK(std::abs(e.aod - prm.ris[0].aod) <= opt.tolerance * opt.angle_step);
}

TEST_CASE("direct-beam schedule does not identify the AOD", "[locsense]")
{
    Scenario s = room(false);
    RadioParams r = indoor_radio(256);
    ChannelParams prm = geometric_params(s, r, 2);
    const auto &rp = prm.ris[0];
    Eigen::VectorXcd w = direct_beam(s.ris[0], rp.aoa, rp.aod);
    CodedSchedule sch = coded_schedule(2, 8, {w, w});
    Eigen::VectorXcd x = constant_pilot(r);
    Rng rng(0);
    SeparatedChannels obs = simulate_separated(s, prm, 0, sch, x, r, 0.0, rng);
    CHECK_THROWS_AS(estimate_ris_params(obs.per_config, sch, s.ris[0], rp.aoa, x, r), NonIdentifiableError);
}

TEST_CASE("position solver round trip with clock bias", "[locsense]")
{
    Scenario s = room(false, 10e-9);
    ChannelParams prm = path_delays(s);
    PositionSolution sol = solve_position(prm.tau[0], prm.ris[0].tau, prm.ris[0].aod, s.p_bs, s.ris[0]);
    CHECK((sol.p - s.p).norm() < 1e-6);
    CHECK(std::abs(sol.clk - 10e-9) < 1e-15);
    CHECK_FALSE(sol.ill_conditioned);
    CHECK_THAT(sol.range, WithinAbs(std::sqrt(13.0), 1e-6));
}

TEST_CASE("position solver flags the line behind the BS", "[locsense]")
{
    Scenario s = room(false);
    s.p = Vec2(3.0, -3.0);
    ChannelParams prm = path_delays(s);
    PositionSolution sol = solve_position(prm.tau[0], prm.ris[0].tau, prm.ris[0].aod, s.p_bs, s.ris[0]);
    CHECK(sol.ill_conditioned);
}

TEST_CASE("inconsistent measurements are infeasible", "[locsense]")
{
    Scenario s = room(false);
    ChannelParams prm = path_delays(s);
    const double D = (s.p_bs - s.ris[0].position).norm() / speed_of_light;
    CHECK_THROWS_AS(solve_position(1e-8, 1e-8 - 1e-10, prm.ris[0].aod, s.p_bs, s.ris[0]), InfeasibleMeasurementError);
    CHECK_THROWS_AS(solve_position(1e-8, 1e-8 + 2.5 * D, prm.ris[0].aod, s.p_bs, s.ris[0]),
                    InfeasibleMeasurementError);
    CHECK_THROWS_AS(solve_position(std::nan(""), 1e-8, 0.0, s.p_bs, s.ris[0]), std::invalid_argument);
}

TEST_CASE("TSOA ellipse", "[locsense]")
{
    Scenario s = room(true);
    ChannelParams prm = path_delays(s);
    Ellipse e = sense_tsoa(prm.tau[1], prm.tau[0], s.p, s.p_bs);
    CHECK(e.focus1 == s.p_bs);
    CHECK(e.focus2 == s.p);
    CHECK(std::abs(e.signed_distance(s.p_sp[0])) < 1e-6);
    CHECK(std::abs(e.range_sum_residual(s.p_sp[0])) < 1e-9);
    CHECK_THROWS_AS(sense_tsoa(prm.tau[0], prm.tau[0], s.p, s.p_bs), std::invalid_argument);
}

TEST_CASE("ellipse distances", "[locsense]")
{
    // Foci at (+-3, 0), semi-axes 5 and 4
    Ellipse e{Vec2(-3.0, 0.0), Vec2(3.0, 0.0), 10.0};
    CHECK_THAT(e.signed_distance(Vec2(6.0, 0.0)), WithinAbs(1.0, 1e-12));
    CHECK_THAT(e.signed_distance(Vec2(0.0, 0.0)), WithinAbs(-4.0, 1e-12));
    CHECK_THAT(e.signed_distance(Vec2(0.0, -6.5)), WithinAbs(2.5, 1e-12));
    CHECK_THAT(e.signed_distance(Vec2(3.0, 3.2)), WithinAbs(0.0, 1e-9));

    Ellipse circle{Vec2(1.0, 1.0), Vec2(1.0, 1.0), 4.0};
    CHECK_THAT(circle.signed_distance(Vec2(1.0, 4.5)), WithinAbs(1.5, 1e-12));
    CHECK_THAT(circle.signed_distance(Vec2(2.0, 1.0)), WithinAbs(-1.0, 1e-12));
}

TEST_CASE("noiseless localization and sensing round trip", "[locsense]")
{
    Scenario s = room(true, 5e-9);
    RadioParams r = indoor_radio(3000);
    ChannelParams prm = geometric_params(s, r, 11);
    CodedSchedule sch = random_schedule(8, 256, 64, 13);
    Eigen::VectorXcd x = constant_pilot(r);
    Rng rng(0);
    SeparatedChannels obs = simulate_separated(s, prm, 0, sch, x, r, 0.0, rng);
    LocalizationResult loc = localize(obs, sch, s.p_bs, s.ris[0], x, r, 2);
    CHECK((loc.position.p - s.p).norm() < 1e-6);
    CHECK(std::abs(loc.position.clk - 5e-9) < 1e-15);
    REQUIRE(loc.scatterers.size() == 1);
    CHECK(std::abs(loc.scatterers[0].signed_distance(s.p_sp[0])) < 1e-6);
}
