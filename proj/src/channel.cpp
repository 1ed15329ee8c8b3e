// SPDX-License-Identifier: Apache-2.0

#include "ris/channel.hpp"

#include <algorithm>
#include <limits>

namespace ris
{
    void RadioParams::validate() const
    {
        if (!(f_c > 0.0) || !std::isfinite(f_c))
            throw std::invalid_argument("Carrier frequency must be positive.");
        if (!(B > 0.0) || B > 2.0 * f_c)
            throw std::invalid_argument("Bandwidth must be in (0, 2 f_c].");
        if (K < 1 || M < 1)
            throw std::invalid_argument("Subcarrier and tap counts must be at least 1.");
        if (K < M)
            throw std::invalid_argument("Subcarrier count K must not be smaller than the tap count M.");
        if (!(N0 > 0.0))
            throw std::invalid_argument("Noise power spectral density must be positive.");
        if (!(P > 0.0))
            throw std::invalid_argument("Transmit power must be positive.");
        if (!std::isfinite(eta))
            throw std::invalid_argument("Sampling delay must be finite.");
    }

    void PathSet::validate() const
    {
        if (ris.empty() && direct.empty())
            throw std::invalid_argument("Path set is empty.");
        for (const auto &element : ris)
            for (const auto &p : element)
            {
                if (!(p.alpha >= 0.0 && p.alpha <= 1.0) || !(p.beta >= 0.0 && p.beta <= 1.0))
                    throw std::invalid_argument("RIS path losses must be in [0, 1].");
                if (!(p.delay >= 0.0) || !std::isfinite(p.delay))
                    throw std::invalid_argument("RIS path delays must be non-negative.");
            }
        for (const auto &p : direct)
        {
            if (!(p.rho >= 0.0 && p.rho <= 1.0))
                throw std::invalid_argument("Direct path losses must be in [0, 1].");
            if (!(p.delay >= 0.0) || !std::isfinite(p.delay))
                throw std::invalid_argument("Direct path delays must be non-negative.");
        }
    }

    double PathSet::earliest_delay() const
    {
        double t = std::numeric_limits<double>::infinity();
        for (const auto &element : ris)
            for (const auto &p : element)
                t = std::min(t, p.delay);
        for (const auto &p : direct)
            t = std::min(t, p.delay);
        if (!std::isfinite(t))
            throw std::invalid_argument("Path set is empty.");
        return t;
    }

    double PathSet::latest_delay() const
    {
        double t = -std::numeric_limits<double>::infinity();
        for (const auto &element : ris)
            for (const auto &p : element)
                t = std::max(t, p.delay);
        for (const auto &p : direct)
            t = std::max(t, p.delay);
        if (!std::isfinite(t))
            throw std::invalid_argument("Path set is empty.");
        return t;
    }

    Eigen::VectorXcd RisConfig::omega() const
    {
        Eigen::VectorXcd w(phase.size());
        for (Eigen::Index n = 0; n < phase.size(); ++n)
            w[n] = std::sqrt(gamma[n]) * std::polar(1.0, phase[n]);
        return w;
    }

    void RisConfig::validate() const
    {
        if (gamma.size() != phase.size())
            throw std::invalid_argument("RIS configuration has mismatched gamma and phase lengths.");
        if (delay.size() != 0 && delay.size() != phase.size())
            throw std::invalid_argument("RIS configuration has mismatched delay length.");
        for (Eigen::Index n = 0; n < gamma.size(); ++n)
            if (!(gamma[n] >= 0.0 && gamma[n] <= 1.0))
                throw std::invalid_argument("Reradiated power fraction must be in [0, 1].");
    }

    RisConfig RisConfig::from_omega(const Eigen::VectorXcd &omega)
    {
        RisConfig c;
        c.gamma.resize(omega.size());
        c.phase.resize(omega.size());
        for (Eigen::Index n = 0; n < omega.size(); ++n)
        {
            double a = std::abs(omega[n]);
            if (a > 1.0 + 1e-12)
                throw std::invalid_argument("Configuration entries must satisfy |omega_n| <= 1.");
            c.gamma[n] = std::min(a * a, 1.0);
            c.phase[n] = wrap_phase(std::arg(omega[n]));
        }
        return c;
    }

    RisConfig RisConfig::from_delays(const Eigen::VectorXd &delay, double f_c, double gamma)
    {
        if (gamma < 0.0 || gamma > 1.0)
            throw std::invalid_argument("Reradiated power fraction must be in [0, 1].");
        RisConfig c;
        c.delay = delay;
        c.gamma = Eigen::VectorXd::Constant(delay.size(), gamma);
        c.phase.resize(delay.size());
        for (Eigen::Index n = 0; n < delay.size(); ++n)
        {
            if (!(delay[n] >= 0.0))
                throw std::invalid_argument("RIS element delays must be non-negative.");
            // Reduce to the fractional carrier cycle before scaling to keep the phase exact
            double cycles = f_c * delay[n];
            c.phase[n] = wrap_phase(-2.0 * pi * (cycles - std::floor(cycles)));
        }
        return c;
    }

    RisConfig RisConfig::off(std::size_t n_elements)
    {
        RisConfig c;
        c.gamma = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_elements));
        c.phase = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_elements));
        return c;
    }

    ArrayGeometry ArrayGeometry::ula(std::size_t n_elements, double spacing_wl)
    {
        if (n_elements == 0)
            throw std::invalid_argument("Array must have at least one element.");
        ArrayGeometry g;
        g.pos = Eigen::Matrix3Xd::Zero(3, Eigen::Index(n_elements));
        double mid = 0.5 * double(n_elements - 1);
        for (std::size_t n = 0; n < n_elements; ++n)
            g.pos(1, Eigen::Index(n)) = (double(n) - mid) * spacing_wl;
        return g;
    }

    ArrayGeometry ArrayGeometry::upa(std::size_t n_y, std::size_t n_z, double spacing_wl)
    {
        if (n_y == 0 || n_z == 0)
            throw std::invalid_argument("Array must have at least one element.");
        ArrayGeometry g;
        g.pos = Eigen::Matrix3Xd::Zero(3, Eigen::Index(n_y * n_z));
        double mid_y = 0.5 * double(n_y - 1), mid_z = 0.5 * double(n_z - 1);
        Eigen::Index n = 0;
        for (std::size_t iz = 0; iz < n_z; ++iz)
            for (std::size_t iy = 0; iy < n_y; ++iy, ++n)
            {
                g.pos(1, n) = (double(iy) - mid_y) * spacing_wl;
                g.pos(2, n) = (double(iz) - mid_z) * spacing_wl;
            }
        return g;
    }

    Eigen::Vector3d Angle::unit() const
    {
        return {std::sin(el) * std::cos(az), std::sin(el) * std::sin(az), std::cos(el)};
    }

    Eigen::Vector3d Angle::d_unit_d_az() const
    {
        return {-std::sin(el) * std::sin(az), std::sin(el) * std::cos(az), 0.0};
    }

    Eigen::VectorXcd steering_vector(const ArrayGeometry &geometry, const Angle &angle)
    {
        if (geometry.size() == 0)
            throw std::invalid_argument("Array geometry is empty.");
        if (!geometry.pos.allFinite())
            throw std::invalid_argument("Element positions must be finite.");
        Eigen::Vector3d u = angle.unit();
        Eigen::VectorXd proj = geometry.pos.transpose() * u;
        Eigen::VectorXcd a(proj.size());
        for (Eigen::Index n = 0; n < proj.size(); ++n)
            a[n] = std::polar(1.0, 2.0 * pi * proj[n]);
        return a;
    }

    Eigen::VectorXcd steering_vector_d_az(const ArrayGeometry &geometry, const Angle &angle)
    {
        Eigen::VectorXcd a = steering_vector(geometry, angle);
        Eigen::VectorXd dproj = geometry.pos.transpose() * angle.d_unit_d_az();
        for (Eigen::Index n = 0; n < a.size(); ++n)
            a[n] *= I * 2.0 * pi * dproj[n];
        return a;
    }

    Eigen::VectorXcd cascade_vector(const Eigen::VectorXcd &a_in, const Eigen::VectorXcd &a_out)
    {
        if (a_in.size() != a_out.size())
            throw std::invalid_argument("Steering vectors have different lengths.");
        return a_in.cwiseProduct(a_out);
    }

    Eigen::VectorXcd cascade_vector(const Angle &phi_a, const Angle &phi_b, const ArrayGeometry &geometry)
    {
        return cascade_vector(steering_vector(geometry, phi_a), steering_vector(geometry, phi_b));
    }

    double default_sampling_delay(const PathSet &paths)
    {
        return paths.earliest_delay();
    }

    std::size_t required_taps(const PathSet &paths, const RadioParams &radio, std::size_t guard)
    {
        double span = radio.B * (paths.latest_delay() - radio.eta);
        // Tiny negative spans come from rounding when eta equals the latest delay
        double k_last = std::ceil(std::max(span, 0.0) - 1e-9);
        return std::size_t(k_last) + 1 + guard;
    }

    namespace
    {
        void check_tap_count(const PathSet &paths, const RadioParams &radio, std::size_t guard)
        {
            std::size_t need = required_taps(paths, radio, guard);
            if (radio.M < need)
                throw std::invalid_argument("Tap count M = " + std::to_string(radio.M) +
                                            " truncates the channel; the path delays require M >= " +
                                            std::to_string(need) + " (guard " + std::to_string(guard) + ").");
        }

        // Accumulates c * sinc(k + B (eta - tau)) into taps
        void add_path(Eigen::Ref<Eigen::VectorXcd, 0, Eigen::InnerStride<>> taps, cplx c, double tau, const RadioParams &radio)
        {
            double shift = radio.B * (radio.eta - tau);
            for (Eigen::Index k = 0; k < taps.size(); ++k)
                taps[k] += c * sinc(double(k) + shift);
        }

        // exp(-i 2pi f_c tau) with the integer carrier cycles removed first
        cplx carrier(double f_c, double tau)
        {
            double cycles = f_c * tau;
            return std::polar(1.0, -2.0 * pi * (cycles - std::floor(cycles)));
        }
    }

    TapMatrix tap_matrix(const PathSet &paths, const RadioParams &radio, std::size_t guard)
    {
        paths.validate();
        check_tap_count(paths, radio, guard);
        TapMatrix V = TapMatrix::Zero(static_cast<Eigen::Index>(paths.n_elements()), Eigen::Index(radio.M));
        for (std::size_t n = 0; n < paths.n_elements(); ++n)
            for (const auto &p : paths.ris[n])
            {
                cplx c = std::sqrt(p.alpha * p.beta) * carrier(radio.f_c, p.delay);
                add_path(V.row(static_cast<Eigen::Index>(n)).transpose(), c, p.delay, radio);
            }
        return V;
    }

    TapVector direct_impulse_response(const PathSet &paths, const RadioParams &radio, std::size_t guard)
    {
        paths.validate();
        check_tap_count(paths, radio, guard);
        TapVector h = TapVector::Zero(static_cast<Eigen::Index>(radio.M));
        for (const auto &p : paths.direct)
            add_path(h, std::sqrt(p.rho) * carrier(radio.f_c, p.delay), p.delay, radio);
        return h;
    }

    TapVector discrete_impulse_response(const PathSet &paths, const RisConfig &config,
                                        const RadioParams &radio, std::size_t guard)
    {
        config.validate();
        if (config.size() != paths.n_elements())
            throw std::invalid_argument("Configuration length does not match the number of RIS elements.");
        TapVector h = direct_impulse_response(paths, radio, guard);
        Eigen::VectorXcd w = config.omega();
        // The element delay enters through the carrier phase of omega only
        for (std::size_t n = 0; n < paths.n_elements(); ++n)
            for (const auto &p : paths.ris[n])
            {
                cplx c = std::sqrt(p.alpha * p.beta) * carrier(radio.f_c, p.delay) * w[Eigen::Index(n)];
                add_path(h, c, p.delay, radio);
            }
        return h;
    }

    Eigen::MatrixXcd dft_matrix(std::size_t K, std::size_t M)
    {
        Eigen::MatrixXcd F(static_cast<Eigen::Index>(K), Eigen::Index(M));
        for (std::size_t nu = 0; nu < K; ++nu)
            for (std::size_t k = 0; k < M; ++k)
            {
                std::size_t idx = (k * nu) % K;
                F(static_cast<Eigen::Index>(nu), Eigen::Index(k)) = std::polar(1.0, -2.0 * pi * double(idx) / double(K));
            }
        return F;
    }

    Eigen::VectorXcd frequency_response(const TapVector &taps, std::size_t K)
    {
        if (std::size_t(taps.size()) > K)
            throw std::invalid_argument("Subcarrier count K must not be smaller than the tap count.");
        return dft_matrix(K, std::size_t(taps.size())) * taps;
    }

    cplx narrowband_coefficient(const PathSet &paths, const RisConfig &config, const RadioParams &radio)
    {
        paths.validate();
        if (paths.direct.size() > 1)
            throw std::invalid_argument("Narrowband model allows at most one direct path; use the wideband pipeline.");
        if (config.size() != paths.n_elements())
            throw std::invalid_argument("Configuration length does not match the number of RIS elements.");
        Eigen::VectorXcd w = config.omega();
        cplx h = 0.0;
        if (!paths.direct.empty())
            h += std::sqrt(paths.direct[0].rho) * carrier(radio.f_c, paths.direct[0].delay);
        for (std::size_t n = 0; n < paths.n_elements(); ++n)
        {
            if (paths.ris[n].size() > 1)
                throw std::invalid_argument("Narrowband model allows one path per element; use the wideband pipeline.");
            for (const auto &p : paths.ris[n])
                h += std::sqrt(p.alpha * p.beta) * carrier(radio.f_c, p.delay) * w[Eigen::Index(n)];
        }
        return h;
    }

    cplx los_cascade_coefficient(double alpha, double beta, double psi, const Eigen::VectorXcd &b,
                                 const Eigen::VectorXcd &omega)
    {
        if (b.size() != omega.size())
            throw std::invalid_argument("Cascade vector and configuration have different lengths.");
        return std::sqrt(alpha * beta) * std::polar(1.0, psi) * (b.transpose() * omega)(0);
    }

    Eigen::VectorXcd simulate_ofdm_block(const Eigen::VectorXcd &xbar, const Eigen::VectorXcd &hbar,
                                         double N0, Rng &rng)
    {
        if (N0 < 0.0)
            throw std::invalid_argument("Noise power spectral density cannot be negative.");
        if (xbar.size() != hbar.size())
            throw std::invalid_argument("Symbol and frequency-response lengths differ.");
        if (!xbar.allFinite() || !hbar.allFinite())
            throw std::invalid_argument("Inputs must be finite.");
        Eigen::VectorXcd z = hbar.cwiseProduct(xbar);
        if (N0 > 0.0)
            for (Eigen::Index nu = 0; nu < z.size(); ++nu)
                z[nu] += complex_normal(rng, N0);
        return z;
    }

    Eigen::VectorXcd simulate_ofdm_block(const Eigen::VectorXcd &xbar, const Eigen::VectorXcd &hbar,
                                         double N0, std::uint64_t seed)
    {
        Rng rng(seed);
        return simulate_ofdm_block(xbar, hbar, N0, rng);
    }
}
