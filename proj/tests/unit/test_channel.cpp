// SPDX-License-Identifier: Apache-2.0

#include "ris/channel.hpp"

#include <catch_amalgamated.hpp>

using namespace ris;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{
    RadioParams radio_1mhz(std::size_t M, double eta = 0.0)
    {
        RadioParams r;
        r.f_c = 3e9;
        r.B = 1e6;
        r.K = std::max<std::size_t>(M, 64);
        r.M = M;
        r.eta = eta;
        return r;
    }

    Eigen::VectorXcd random_omega(std::size_t N, Rng &rng, bool unit = false)
    {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Eigen::VectorXcd w(static_cast<Eigen::Index>(N));
        for (auto &x : w)
            x = std::polar(unit ? 1.0 : std::sqrt(u(rng)), 2.0 * pi * u(rng));
        return w;
    }

    PathSet random_paths(std::size_t N, std::size_t per_element, Rng &rng, bool direct = true)
    {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        PathSet p;
        for (std::size_t n = 0; n < N; ++n)
        {
            std::vector<RisPath> v;
            for (std::size_t l = 0; l < per_element; ++l)
                v.push_back({1e-3 * u(rng), 1e-3 * u(rng), 1e-6 + 4e-6 * u(rng)});
            p.ris.push_back(v);
        }
        if (direct)
            p.direct.push_back({1e-7, 1e-6 + 2e-6 * u(rng)});
        return p;
    }
}

TEST_CASE("steering vector at broadside is all ones", "[channel]")
{
    auto g = ArrayGeometry::ula(16, 0.2);
    Eigen::VectorXcd a = steering_vector(g, Angle{0.0});
    for (auto x : a)
    {
        CHECK_THAT(x.real(), WithinAbs(1.0, 1e-15));
        CHECK_THAT(x.imag(), WithinAbs(0.0, 1e-15));
    }
}

TEST_CASE("steering vector of a two-element half-wavelength ULA at endfire", "[channel]")
{
    // Elements at y = -1/4 and +1/4 wavelengths, wave exchanged with the -y direction
    auto g = ArrayGeometry::ula(2, 0.5);
    Eigen::VectorXcd a = steering_vector(g, Angle{-pi / 2.0});
    CHECK(std::abs(a[0] - std::polar(1.0, pi / 2.0)) < 1e-14);
    CHECK(std::abs(a[1] - std::polar(1.0, -pi / 2.0)) < 1e-14);
}

TEST_CASE("steering vectors have unit modulus entries", "[channel]")
{
    Rng rng(1);
    std::uniform_real_distribution<double> u(-pi, pi);
    auto g = ArrayGeometry::upa(5, 7, 0.37);
    for (int t = 0; t < 50; ++t)
    {
        Eigen::VectorXcd a = steering_vector(g, Angle{u(rng), 0.5 * u(rng) + pi / 2.0});
        CHECK((a.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("empty geometry is rejected", "[channel]")
{
    ArrayGeometry g;
    CHECK_THROWS_AS(steering_vector(g, Angle{0.0}), std::invalid_argument);
}

TEST_CASE("steering vector azimuth derivative matches finite differences", "[channel]")
{
    auto g = ArrayGeometry::ula(9, 0.2);
    const double az = 0.4, h = 1e-6;
    Eigen::VectorXcd fd = (steering_vector(g, Angle{az + h}) - steering_vector(g, Angle{az - h})) / (2.0 * h);
    Eigen::VectorXcd an = steering_vector_d_az(g, Angle{az});
    CHECK((fd - an).norm() < 1e-7 * an.norm());
}

TEST_CASE("cascade vector properties", "[channel]")
{
    auto g = ArrayGeometry::ula(64, 0.2);
    Eigen::VectorXcd b0 = cascade_vector(Angle{0.0}, Angle{0.0}, g);
    CHECK((b0 - Eigen::VectorXcd::Ones(64)).norm() < 1e-13);

    Eigen::VectorXcd b = cascade_vector(Angle{0.3}, Angle{-0.7}, g);
    cplx coherent = b.cwiseProduct(b.conjugate()).sum();
    CHECK_THAT(coherent.real(), WithinRel(64.0, 1e-12));
    CHECK_THAT(coherent.imag(), WithinAbs(0.0, 1e-12));

    // Random unit-modulus configurations add incoherently: E|b^T w|^2 = N
    Rng rng(7);
    double mean_abs = 0.0, mean_sq = 0.0;
    const int trials = 4000;
    for (int t = 0; t < trials; ++t)
    {
        cplx s = b.cwiseProduct(random_omega(64, rng, true)).sum();
        mean_abs += std::abs(s) / trials;
        mean_sq += std::norm(s) / trials;
    }
    CHECK(mean_abs < 0.2 * 64.0);
    CHECK_THAT(mean_sq, WithinRel(64.0, 0.06));

    CHECK_THROWS_AS(cascade_vector(Eigen::VectorXcd::Ones(3), Eigen::VectorXcd::Ones(4)), std::invalid_argument);
}

TEST_CASE("single aligned path lands on tap zero only", "[channel]")
{
    const double tau = 2.5e-6;
    PathSet p;
    p.ris.push_back({RisPath{0.01, 0.04, tau}});
    RadioParams r = radio_1mhz(12, tau);
    RisConfig cfg = RisConfig::from_omega(Eigen::VectorXcd::Ones(1));
    TapVector h = discrete_impulse_response(p, cfg, r);
    const double cycles = r.f_c * tau - std::floor(r.f_c * tau);
    cplx expect = std::sqrt(0.01 * 0.04) * std::polar(1.0, -2.0 * pi * cycles);
    CHECK(std::abs(h[0] - expect) < 1e-16);
    for (Eigen::Index k = 1; k < h.size(); ++k)
        CHECK(std::abs(h[k]) < 1e-15);
}

TEST_CASE("half-sample offset gives shifted sinc taps", "[channel]")
{
    const double tau = 2e-6;
    PathSet p;
    p.direct.push_back({1.0, tau});
    p.ris.push_back({RisPath{0.0, 0.0, tau}});
    RadioParams r = radio_1mhz(12, tau + 0.5 / 1e6);
    TapVector h = direct_impulse_response(p, r);
    cplx ph = std::polar(1.0, -2.0 * pi * r.f_c * tau);
    for (Eigen::Index k = 0; k < h.size(); ++k)
    {
        double x = pi * (double(k) + 0.5);
        CHECK(std::abs(h[k] - ph * std::sin(x) / x) < 1e-11);
    }
}

TEST_CASE("tap energy approaches the path power with a wide window", "[channel]")
{
    const double tau = 5e-6;
    PathSet p;
    p.direct.push_back({0.25, tau});
    p.ris.push_back({RisPath{0.0, 0.0, tau}});
    // Path 20.5 samples into a 400-tap window
    RadioParams r = radio_1mhz(400, tau - 20.5e-6);
    TapVector h = direct_impulse_response(p, r);
    CHECK_THAT(h.squaredNorm(), WithinRel(0.25, 0.01));
}

TEST_CASE("too few taps are rejected with the required count", "[channel]")
{
    PathSet p;
    p.direct.push_back({1.0, 0.0});
    p.ris.push_back({RisPath{0.1, 0.1, 10e-6}});
    RadioParams r = radio_1mhz(4, 0.0);
    REQUIRE(required_taps(p, r) == 10 + 1 + 8);
    try
    {
        tap_matrix(p, r);
        FAIL("expected an exception");
    }
    catch (const std::invalid_argument &e)
    {
        CHECK(std::string(e.what()).find("M >= 19") != std::string::npos);
    }
}

TEST_CASE("tap matrix reproduces the impulse response for random configurations", "[channel]")
{
    Rng rng(11);
    PathSet p = random_paths(6, 3, rng, false);
    RadioParams r = radio_1mhz(0);
    r.eta = default_sampling_delay(p);
    r.M = required_taps(p, r);
    r.K = 64;
    TapMatrix V = tap_matrix(p, r);
    REQUIRE(V.rows() == 6);
    for (int t = 0; t < 20; ++t)
    {
        Eigen::VectorXcd w = random_omega(6, rng);
        TapVector h = discrete_impulse_response(p, RisConfig::from_omega(w), r);
        TapVector hv = V.transpose() * w;
        CHECK((h - hv).norm() <= 1e-12 * h.norm());
    }
}

TEST_CASE("single-element tap matrix row is the element response", "[channel]")
{
    Rng rng(3);
    PathSet p = random_paths(1, 2, rng, false);
    RadioParams r = radio_1mhz(0);
    r.eta = default_sampling_delay(p);
    r.M = required_taps(p, r);
    TapMatrix V = tap_matrix(p, r);
    TapVector h = discrete_impulse_response(p, RisConfig::from_omega(Eigen::VectorXcd::Ones(1)), r);
    CHECK((V.row(0).transpose() - h).norm() < 1e-15);
}

TEST_CASE("zero losses give a zero tap matrix", "[channel]")
{
    PathSet p;
    for (int n = 0; n < 4; ++n)
        p.ris.push_back({RisPath{0.0, 0.0, 1e-6 * n}});
    RadioParams r = radio_1mhz(20, 0.0);
    CHECK(tap_matrix(p, r).norm() == 0.0);
}

TEST_CASE("integer sample shift only rotates the carrier phase", "[channel]")
{
    Rng rng(5);
    PathSet p = random_paths(3, 2, rng);
    RadioParams r = radio_1mhz(0);
    r.eta = default_sampling_delay(p);
    r.M = required_taps(p, r);
    Eigen::VectorXcd w = random_omega(3, rng);
    TapVector h = discrete_impulse_response(p, RisConfig::from_omega(w), r);

    const double shift = 3.0 / r.B;
    PathSet q = p;
    for (auto &e : q.ris)
        for (auto &x : e)
            x.delay += shift;
    for (auto &d : q.direct)
        d.delay += shift;
    RadioParams rq = r;
    rq.eta += shift;
    TapVector hq = discrete_impulse_response(q, RisConfig::from_omega(w), rq);
    CHECK((hq - std::polar(1.0, -2.0 * pi * r.f_c * shift) * h).norm() < 1e-9 * h.norm());
}

TEST_CASE("frequency response examples", "[channel]")
{
    TapVector h = TapVector::Zero(3);
    h[0] = {0.3, -0.2};
    Eigen::VectorXcd H = frequency_response(h, 16);
    CHECK((H - Eigen::VectorXcd::Constant(16, h[0])).norm() < 1e-15);

    h.setZero();
    h[1] = 1.0;
    H = frequency_response(h, 16);
    for (Eigen::Index nu = 0; nu < 16; ++nu)
        CHECK(std::abs(H[nu] - std::polar(1.0, -2.0 * pi * double(nu) / 16.0)) < 1e-14);

    CHECK_THROWS_AS(frequency_response(TapVector::Ones(5), 4), std::invalid_argument);
}

TEST_CASE("frequency response satisfies Parseval", "[channel]")
{
    Rng rng(9);
    for (int t = 0; t < 10; ++t)
    {
        TapVector h(7);
        for (auto &x : h)
            x = complex_normal(rng, 1.0);
        Eigen::VectorXcd H = frequency_response(h, 32);
        CHECK_THAT(H.squaredNorm(), WithinRel(32.0 * h.squaredNorm(), 1e-10));
        CHECK((H - dft_matrix(32, 7) * h).norm() < 1e-12 * H.norm());
    }
}

TEST_CASE("narrowband coefficient examples", "[channel]")
{
    RadioParams r = radio_1mhz(1, 0.0);
    PathSet direct_only;
    direct_only.direct.push_back({1e-6, 3.3e-7});
    direct_only.ris.push_back({RisPath{0.0, 0.0, 0.0}});
    cplx h = narrowband_coefficient(direct_only, RisConfig::off(1), r);
    CHECK(std::abs(h - 1e-3 * std::polar(1.0, -2.0 * pi * r.f_c * 3.3e-7)) < 1e-15);

    PathSet two;
    two.ris.push_back({RisPath{0.1, 0.1, 0.0}, RisPath{0.1, 0.1, 1e-9}});
    CHECK_THROWS_AS(narrowband_coefficient(two, RisConfig::from_omega(Eigen::VectorXcd::Ones(1)), r),
                    std::invalid_argument);
}

TEST_CASE("narrowband coefficient equals tap zero for sub-sample delay spread", "[channel]")
{
    Rng rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PathSet p;
    for (int n = 0; n < 8; ++n)
        p.ris.push_back({RisPath{1e-3 * u(rng), 1e-3 * u(rng), 1e-6 + 1e-15 * u(rng)}});
    p.direct.push_back({1e-6, 1e-6});
    RadioParams r = radio_1mhz(0);
    r.B = 1e3;
    r.eta = default_sampling_delay(p);
    r.M = required_taps(p, r, 0);
    RisConfig cfg = RisConfig::from_omega(random_omega(8, rng));
    cplx nb = narrowband_coefficient(p, cfg, r);
    TapVector h = discrete_impulse_response(p, cfg, r, 0);
    CHECK(std::abs(nb - h[0]) < 1e-12 * std::abs(nb));
}

TEST_CASE("far-field cascade form matches the delay-sum form", "[channel]")
{
    const double f_c = 28e9, lambda = speed_of_light / f_c;
    auto g = ArrayGeometry::ula(64, 0.2);
    Angle a{0.4}, b{-0.9};
    const double tau0 = 3e-8, alpha = 1e-5, beta = 4e-6;
    PathSet p;
    for (std::size_t n = 0; n < g.size(); ++n)
    {
        // Plane-wave path length shortens by the projection of the element offset on both directions
        double proj = (a.unit() + b.unit()).dot(g.pos.col(Eigen::Index(n))) * lambda;
        p.ris.push_back({RisPath{alpha, beta, tau0 - proj / speed_of_light}});
    }
    RadioParams r = radio_1mhz(1, 0.0);
    r.f_c = f_c;
    Rng rng(2);
    Eigen::VectorXcd w = random_omega(64, rng);
    cplx delay_sum = narrowband_coefficient(p, RisConfig::from_omega(w), r);
    double psi = -2.0 * pi * f_c * tau0;
    cplx geometric = los_cascade_coefficient(alpha, beta, psi, cascade_vector(a, b, g), w);
    CHECK(std::abs(delay_sum - geometric) < 1e-10 * std::abs(geometric));
}

TEST_CASE("OFDM block simulation", "[channel]")
{
    Rng rng(4);
    Eigen::VectorXcd x(64), H(64);
    for (Eigen::Index k = 0; k < 64; ++k)
    {
        x[k] = complex_normal(rng, 1.0);
        H[k] = complex_normal(rng, 1.0);
    }
    CHECK((simulate_ofdm_block(x, H, 0.0, 1) - H.cwiseProduct(x)).norm() == 0.0);
    CHECK((simulate_ofdm_block(x, H, 0.3, 99) - simulate_ofdm_block(x, H, 0.3, 99)).norm() == 0.0);
    CHECK_THROWS_AS(simulate_ofdm_block(x, H, -1.0, 1), std::invalid_argument);

    const double N0 = 0.37;
    Eigen::VectorXcd xs = Eigen::VectorXcd::Ones(1000), Hz = Eigen::VectorXcd::Zero(1000);
    double acc = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s)
        acc += simulate_ofdm_block(xs, Hz, N0, s).squaredNorm();
    CHECK_THAT(acc / 1e5, WithinRel(N0, 0.02));
}

TEST_CASE("configuration amplitudes never exceed one", "[channel]")
{
    Eigen::VectorXd d(3);
    d << 0.0, 1e-10, 3e-9;
    RisConfig c = RisConfig::from_delays(d, 3e9, 0.5);
    CHECK(c.omega().cwiseAbs().maxCoeff() <= 1.0);
    CHECK_THAT(c.omega()[1].real(), WithinAbs(std::sqrt(0.5) * std::cos(-2.0 * pi * 0.3), 1e-12));
    CHECK_THROWS_AS(RisConfig::from_omega(Eigen::VectorXcd::Constant(2, cplx(1.5, 0.0))), std::invalid_argument);
}
