// SPDX-License-Identifier: Apache-2.0

#include "ris/locsense.hpp"

namespace ris::loc
{
    double gain_pattern(double az)
    {
        return std::abs(az) <= pi / 2.0 ? 1.0 : 0.0;
    }

    Eigen::Matrix2d RisDeployment::rotation() const
    {
        Eigen::Matrix2d R;
        R.col(0) = normal();
        R.col(1) = tangent();
        return R;
    }

    double RisDeployment::azimuth_to(const Vec2 &p) const
    {
        Vec2 v = p - position;
        return std::atan2(v.dot(tangent()), v.dot(normal()));
    }

    Vec2 RisDeployment::direction(double az) const
    {
        return std::cos(az) * normal() + std::sin(az) * tangent();
    }

    void Scenario::validate() const
    {
        auto finite = [](const Vec2 &v) { return v.allFinite(); };
        if (!finite(p_bs) || !finite(p))
            throw std::invalid_argument("Scenario positions must be finite.");
        if (!std::isfinite(clk))
            throw std::invalid_argument("Clock bias must be finite.");
        if (!(sigma_rcs >= 0.0))
            throw std::invalid_argument("Radar cross section must be non-negative.");
        for (const auto &r : ris)
        {
            if (!finite(r.position) || !std::isfinite(r.orientation))
                throw std::invalid_argument("RIS placement must be finite.");
            if (r.size() == 0)
                throw std::invalid_argument("RIS needs at least one element.");
            if (!(r.element_size_wl > 0.0))
                throw std::invalid_argument("RIS element size must be positive.");
            if ((r.position - p_bs).norm() == 0.0)
                throw std::invalid_argument("RIS and BS positions coincide.");
            if ((r.position - p).norm() == 0.0)
                throw std::invalid_argument("RIS and user positions coincide.");
        }
        for (const auto &s : p_sp)
        {
            if (!finite(s))
                throw std::invalid_argument("Scatter point positions must be finite.");
            if ((s - p_bs).norm() == 0.0 || (s - p).norm() == 0.0)
                throw std::invalid_argument("Scatter point coincides with the BS or the user.");
        }
    }

    Eigen::VectorXd subcarrier_offsets(std::size_t K)
    {
        Eigen::VectorXd nu(static_cast<Eigen::Index>(K));
        for (std::size_t k = 0; k < K; ++k)
            nu[Eigen::Index(k)] = double(k) - 0.5 * double(K - 1);
        return nu;
    }

    Eigen::VectorXcd constant_pilot(const RadioParams &radio)
    {
        return Eigen::VectorXcd::Constant(static_cast<Eigen::Index>(radio.K), cplx(std::sqrt(radio.P / radio.B), 0.0));
    }

    double effective_bandwidth_sq(const Eigen::VectorXcd &pilot, const RadioParams &radio)
    {
        if (std::size_t(pilot.size()) != radio.K)
            throw std::invalid_argument("Pilot length must equal K.");
        Eigen::VectorXd nu = subcarrier_offsets(radio.K);
        double s = 0.0;
        for (Eigen::Index k = 0; k < nu.size(); ++k)
        {
            double w = 2.0 * pi * nu[k] * radio.delta_f();
            s += w * w * std::norm(pilot[k]);
        }
        return s;
    }

    ChannelParams path_delays(const Scenario &scn)
    {
        scn.validate();
        const double c = speed_of_light;
        ChannelParams prm;
        prm.tau.push_back((scn.p - scn.p_bs).norm() / c + scn.clk);
        for (const auto &s : scn.p_sp)
            prm.tau.push_back(((scn.p_bs - s).norm() + (s - scn.p).norm()) / c + scn.clk);
        prm.gain.assign(prm.tau.size(), cplx(0.0));
        for (const auto &r : scn.ris)
        {
            RisPathParams rp;
            rp.tau = ((scn.p_bs - r.position).norm() + (r.position - scn.p).norm()) / c + scn.clk;
            rp.aoa = r.azimuth_to(scn.p_bs);
            rp.aod = r.azimuth_to(scn.p);
            prm.ris.push_back(rp);
        }
        return prm;
    }

    ChannelParams geometric_params(const Scenario &scn, const RadioParams &radio, std::uint64_t seed)
    {
        if ((scn.p - scn.p_bs).norm() == 0.0)
            throw std::invalid_argument("User and BS positions coincide.");
        ChannelParams prm = path_delays(scn);
        const double lambda = radio.wavelength();
        Rng rng(seed);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * pi);

        prm.gain[0] = lambda / (4.0 * pi * (scn.p - scn.p_bs).norm()) * std::polar(1.0, phase(rng));
        for (std::size_t l = 0; l < scn.p_sp.size(); ++l)
        {
            const Vec2 &s = scn.p_sp[l];
            double a = lambda * std::sqrt(scn.sigma_rcs) / std::pow(4.0 * pi, 1.5) / (scn.p - s).norm() /
                       (s - scn.p_bs).norm();
            prm.gain[l + 1] = a * std::polar(1.0, phase(rng));
        }
        for (std::size_t r = 0; r < scn.ris.size(); ++r)
        {
            const auto &dep = scn.ris[r];
            auto &rp = prm.ris[r];
            double size = dep.element_size_wl * lambda;
            double a = std::sqrt(gain_pattern(rp.aoa) * gain_pattern(rp.aod)) * size * size / (4.0 * pi) /
                       (dep.position - scn.p_bs).norm() / (dep.position - scn.p).norm();
            rp.gain = a * std::polar(1.0, phase(rng));
        }
        return prm;
    }

    Eigen::VectorXcd ris_cascade(const RisDeployment &ris, double aoa, double aod)
    {
        return cascade_vector(Angle{aoa}, Angle{aod}, ris.geometry);
    }

    Eigen::VectorXcd ris_cascade_d_aod(const RisDeployment &ris, double aoa, double aod)
    {
        return steering_vector(ris.geometry, Angle{aoa}).cwiseProduct(steering_vector_d_az(ris.geometry, Angle{aod}));
    }

    Eigen::VectorXcd direct_beam(const RisDeployment &ris, double aoa, double aod)
    {
        return ris_cascade(ris, aoa, aod).conjugate();
    }

    Eigen::VectorXcd derivative_beam(const RisDeployment &ris, double aoa, double aod)
    {
        Eigen::VectorXcd d = ris_cascade_d_aod(ris, aoa, aod).conjugate();
        Eigen::VectorXcd w(d.size());
        for (Eigen::Index n = 0; n < d.size(); ++n)
            w[n] = std::polar(1.0, std::abs(d[n]) > 0.0 ? std::arg(d[n]) : 0.0);
        return w;
    }

    namespace
    {
        Eigen::VectorXcd delay_vector(double tau, const RadioParams &radio)
        {
            Eigen::VectorXd nu = subcarrier_offsets(radio.K);
            Eigen::VectorXcd d(nu.size());
            for (Eigen::Index k = 0; k < nu.size(); ++k)
                d[k] = std::polar(1.0, -2.0 * pi * nu[k] * radio.delta_f() * tau);
            return d;
        }
    }

    Eigen::VectorXcd uncontrollable_response(const ChannelParams &prm, const Eigen::VectorXcd &pilot,
                                             const RadioParams &radio)
    {
        if (std::size_t(pilot.size()) != radio.K)
            throw std::invalid_argument("Pilot length must equal K.");
        Eigen::VectorXcd u = Eigen::VectorXcd::Zero(pilot.size());
        for (std::size_t l = 0; l < prm.n_paths(); ++l)
            u += prm.gain[l] * delay_vector(prm.tau[l], radio);
        return u.cwiseProduct(pilot);
    }

    Eigen::VectorXcd ris_response(const ChannelParams &prm, std::size_t r, const RisDeployment &ris,
                                  const Eigen::VectorXcd &omega, const Eigen::VectorXcd &pilot,
                                  const RadioParams &radio)
    {
        if (r >= prm.n_ris())
            throw std::invalid_argument("RIS index out of range.");
        if (std::size_t(omega.size()) != ris.size())
            throw std::invalid_argument("Configuration length does not match the RIS.");
        if (std::size_t(pilot.size()) != radio.K)
            throw std::invalid_argument("Pilot length must equal K.");
        const auto &rp = prm.ris[r];
        cplx s = rp.gain * ris_cascade(ris, rp.aoa, rp.aod).cwiseProduct(omega).sum();
        return s * delay_vector(rp.tau, radio).cwiseProduct(pilot);
    }
}
