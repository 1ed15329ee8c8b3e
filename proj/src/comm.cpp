// SPDX-License-Identifier: Apache-2.0

#include "ris/comm.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace ris
{
    PhaseAlphabet PhaseAlphabet::any_phase()
    {
        PhaseAlphabet a;
        a.continuous = true;
        return a;
    }

    PhaseAlphabet PhaseAlphabet::four_phase()
    {
        PhaseAlphabet a;
        for (double v : {pi / 2.0, 0.0, -pi / 2.0, pi})
            a.values.push_back(wrap_phase(v));
        return a;
    }

    PhaseAlphabet PhaseAlphabet::uniform(std::size_t n_levels)
    {
        PhaseAlphabet a;
        for (std::size_t i = 0; i < n_levels; ++i)
            a.values.push_back(2.0 * pi * double(i) / double(n_levels));
        return a;
    }

    void PhaseAlphabet::validate() const
    {
        if (continuous)
            return;
        if (values.empty())
            throw std::invalid_argument("Phase alphabet is empty.");
        for (double v : values)
            if (!(v >= 0.0 && v < 2.0 * pi))
                throw std::invalid_argument("Phase alphabet values must be in [0, 2pi).");
    }

    double PhaseAlphabet::nearest(double phase) const
    {
        if (continuous)
            return wrap_phase(phase);
        validate();
        double best = values.front(), best_dist = std::numeric_limits<double>::infinity();
        for (double v : values)
        {
            double d = std::abs(std::remainder(phase - v, 2.0 * pi));
            if (d < best_dist)
            {
                best_dist = d;
                best = v;
            }
        }
        return best;
    }

    double awgn_capacity(double snr, double B)
    {
        if (snr < 0.0 || std::isnan(snr))
            throw std::invalid_argument("SNR cannot be negative.");
        return B * std::log2(1.0 + snr);
    }

    namespace
    {
        // Fractional part of f_c * tau as a phase in [0, 2pi)
        double carrier_phase(double f_c, double tau)
        {
            double cycles = f_c * tau;
            return 2.0 * pi * (cycles - std::floor(cycles));
        }

        void check_narrowband_paths(const PathSet &paths)
        {
            paths.validate();
            if (paths.direct.size() > 1)
                throw std::invalid_argument("Narrowband optimization allows at most one direct path.");
            for (const auto &element : paths.ris)
                if (element.size() > 1)
                    throw std::invalid_argument("Narrowband optimization requires one path per element.");
        }
    }

    double coherent_snr(const PathSet &paths, const RadioParams &radio, double gamma)
    {
        check_narrowband_paths(paths);
        double amp = 0.0;
        if (!paths.direct.empty())
            amp += std::sqrt(paths.direct[0].rho);
        for (const auto &element : paths.ris)
            for (const auto &p : element)
                amp += std::sqrt(p.alpha * p.beta * gamma);
        return radio.P * amp * amp / (radio.B * radio.N0);
    }

    NarrowbandResult optimize_narrowband(const PathSet &paths, const PhaseAlphabet &alphabet,
                                         const RadioParams &radio, double gamma)
    {
        check_narrowband_paths(paths);
        alphabet.validate();
        if (gamma < 0.0 || gamma > 1.0)
            throw std::invalid_argument("Reradiated power fraction must be in [0, 1].");

        const std::size_t N = paths.n_elements();
        const bool has_direct = !paths.direct.empty();
        const double tau_d = has_direct ? paths.direct[0].delay : 0.0;

        NarrowbandResult res;
        Eigen::VectorXd delay = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));

        if (alphabet.continuous)
        {
            if (has_direct)
            {
                // Each RIS path arrives an integer number of carrier periods after the direct path
                res.carrier_cycles.assign(N, 0);
                long long k_max = 0, k_min = 0;
                for (std::size_t n = 0; n < N; ++n)
                {
                    if (paths.ris[n].empty())
                        continue;
                    double x = radio.f_c * (paths.ris[n][0].delay - tau_d);
                    double k = std::ceil(x);
                    delay[Eigen::Index(n)] = (k - x) / radio.f_c;
                    res.carrier_cycles[n] = (long long)k;
                    k_max = std::max(k_max, (long long)k);
                    k_min = std::min(k_min, (long long)k);
                }
                res.delay_spread = double(k_max - k_min) / radio.f_c;
            }
            else
            {
                double tau_max = 0.0;
                for (const auto &element : paths.ris)
                    for (const auto &p : element)
                        tau_max = std::max(tau_max, p.delay);
                for (std::size_t n = 0; n < N; ++n)
                    if (!paths.ris[n].empty())
                        delay[Eigen::Index(n)] = tau_max - paths.ris[n][0].delay;
            }
            res.config = RisConfig::from_delays(delay, radio.f_c, gamma);
        }
        else
        {
            // Nearest alphabet member to the phase that rotates each path onto the direct path
            double ref = has_direct ? -carrier_phase(radio.f_c, tau_d) : 0.0;
            res.config.gamma = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(N), gamma);
            res.config.phase.resize(static_cast<Eigen::Index>(N));
            for (std::size_t n = 0; n < N; ++n)
            {
                double align = paths.ris[n].empty() ? 0.0 : ref + carrier_phase(radio.f_c, paths.ris[n][0].delay);
                double ph = alphabet.nearest(align);
                res.config.phase[Eigen::Index(n)] = ph;
                delay[Eigen::Index(n)] = wrap_phase(-ph) / (2.0 * pi * radio.f_c);
            }
            res.config.delay = delay;
        }

        res.coefficient = narrowband_coefficient(paths, res.config, radio);
        res.snr = radio.P * std::norm(res.coefficient) / (radio.B * radio.N0);
        res.capacity = awgn_capacity(res.snr, radio.B);
        return res;
    }

    WaterfillingResult waterfilling(const Eigen::VectorXd &inv_snr_weights, double P)
    {
        if (!(P > 0.0))
            throw std::invalid_argument("Power budget must be positive.");
        const Eigen::Index K = inv_snr_weights.size();
        if (K == 0)
            throw std::invalid_argument("Waterfilling needs at least one subcarrier.");

        std::vector<double> finite;
        for (Eigen::Index i = 0; i < K; ++i)
        {
            double w = inv_snr_weights[i];
            if (std::isnan(w) || w <= 0.0)
                throw std::invalid_argument("Waterfilling weights must be positive.");
            if (std::isfinite(w))
                finite.push_back(w);
        }
        if (finite.empty())
            throw std::invalid_argument("All subcarriers have zero gain.");
        std::sort(finite.begin(), finite.end());

        // Largest active set whose water level stays above its worst member
        const double budget = double(K) * P;
        double sum = 0.0, mu = 0.0;
        for (std::size_t m = 0; m < finite.size(); ++m)
        {
            sum += finite[m];
            double level = (budget + sum) / double(m + 1);
            if (m > 0 && level <= finite[m])
                break;
            mu = level;
        }

        WaterfillingResult res;
        res.water_level = mu;
        res.power.resize(K);
        for (Eigen::Index i = 0; i < K; ++i)
            res.power[i] = std::max(mu - inv_snr_weights[i], 0.0);
        return res;
    }

    Eigen::VectorXd subcarrier_gains(const TapVector &h_d, const TapMatrix &V, const Eigen::VectorXcd &omega,
                                     std::size_t K)
    {
        if (h_d.size() != V.cols())
            throw std::invalid_argument("Direct taps and cascade matrix have different tap counts.");
        if (omega.size() != V.rows())
            throw std::invalid_argument("Configuration length does not match the cascade matrix.");
        TapVector h = h_d + V.transpose() * omega;
        return frequency_response(h, K).cwiseAbs2();
    }

    double rate_from_gains(const Eigen::VectorXd &gains, const Eigen::VectorXd &power, const RadioParams &radio,
                           std::size_t n_taps)
    {
        const std::size_t K = std::size_t(gains.size());
        if (std::size_t(power.size()) != K)
            throw std::invalid_argument("Power allocation length does not match the subcarrier count.");
        if ((power.array() < 0.0).any())
            throw std::invalid_argument("Power allocation must be non-negative.");
        if (power.mean() > radio.P * (1.0 + 1e-9))
            throw std::invalid_argument("Power allocation exceeds the budget.");
        double sum = 0.0;
        for (std::size_t nu = 0; nu < K; ++nu)
            sum += std::log2(1.0 + power[Eigen::Index(nu)] * gains[Eigen::Index(nu)] / (radio.B * radio.N0));
        return radio.B / double(K + n_taps - 1) * sum;
    }

    double wideband_rate(const TapVector &h_d, const TapMatrix &V, const RisConfig &config,
                         const RadioParams &radio, const Eigen::VectorXd &power)
    {
        Eigen::VectorXd g = subcarrier_gains(h_d, V, config.omega(), radio.K);
        return rate_from_gains(g, power, radio, std::size_t(h_d.size()));
    }

    namespace
    {
        RateResult waterfilled(const Eigen::VectorXd &gains, const RadioParams &radio, std::size_t n_taps)
        {
            Eigen::VectorXd w(gains.size());
            for (Eigen::Index i = 0; i < gains.size(); ++i)
                w[i] = gains[i] > 0.0 ? radio.B * radio.N0 / gains[i] : std::numeric_limits<double>::infinity();
            RateResult res;
            auto wf = waterfilling(w, radio.P);
            res.power = wf.power;
            res.water_level = wf.water_level;
            res.snr = wf.power.cwiseProduct(gains) / (radio.B * radio.N0);
            res.rate = rate_from_gains(gains, wf.power, radio, n_taps);
            return res;
        }
    }

    RateResult wideband_rate_waterfilled(const TapVector &h_d, const TapMatrix &V, const RisConfig &config,
                                         const RadioParams &radio)
    {
        RateResult res = waterfilled(subcarrier_gains(h_d, V, config.omega(), radio.K), radio,
                                     std::size_t(h_d.size()));
        res.config = config;
        return res;
    }

    std::size_t stm_tap(const TapVector &h_d, const TapMatrix &V)
    {
        if (h_d.size() != V.cols())
            throw std::invalid_argument("Direct taps and cascade matrix have different tap counts.");
        std::size_t best = 0;
        double best_mag = -1.0;
        for (Eigen::Index l = 0; l < V.cols(); ++l)
        {
            double mag = std::abs(h_d[l]) + V.col(l).cwiseAbs().sum();
            if (mag > best_mag)
            {
                best_mag = mag;
                best = std::size_t(l);
            }
        }
        if (!(best_mag > 0.0))
            throw std::invalid_argument("All taps are zero; no strongest tap exists.");
        return best;
    }

    RisConfig stm_configure(const TapVector &h_d, const TapMatrix &V)
    {
        const Eigen::Index l = Eigen::Index(stm_tap(h_d, V));
        const double target = std::arg(h_d[l]);
        Eigen::VectorXcd w(V.rows());
        for (Eigen::Index n = 0; n < V.rows(); ++n)
            w[n] = std::polar(1.0, target - std::arg(V(n, l)));
        return RisConfig::from_omega(w);
    }

    Eigen::VectorXd upper_bound_gains(const TapVector &h_d, const TapMatrix &V, std::size_t K)
    {
        if (h_d.size() != V.cols())
            throw std::invalid_argument("Direct taps and cascade matrix have different tap counts.");
        Eigen::MatrixXcd F = dft_matrix(K, std::size_t(h_d.size()));
        Eigen::VectorXcd hd = F * h_d;
        Eigen::MatrixXcd FV = F * V.transpose(); // [K, N]
        Eigen::VectorXd g(static_cast<Eigen::Index>(K));
        for (Eigen::Index nu = 0; nu < Eigen::Index(K); ++nu)
        {
            double a = std::abs(hd[nu]) + FV.row(nu).cwiseAbs().sum();
            g[nu] = a * a;
        }
        return g;
    }

    double rate_upper_bound(const TapVector &h_d, const TapMatrix &V, const RadioParams &radio,
                            const Eigen::VectorXd &power)
    {
        return rate_from_gains(upper_bound_gains(h_d, V, radio.K), power, radio, std::size_t(h_d.size()));
    }

    RateResult rate_upper_bound_waterfilled(const TapVector &h_d, const TapMatrix &V, const RadioParams &radio)
    {
        return waterfilled(upper_bound_gains(h_d, V, radio.K), radio, std::size_t(h_d.size()));
    }
}
