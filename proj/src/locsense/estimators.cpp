// SPDX-License-Identifier: Apache-2.0

#include "ris/locsense.hpp"

#include <boost/math/tools/minima.hpp>
#include <fftw3.h>

#include <algorithm>
#include <mutex>

namespace ris::loc
{
    namespace
    {
        constexpr int brent_bits = 40;

        std::mutex &plan_mutex()
        {
            static std::mutex m;
            return m;
        }

        // P(tau_m) = sum_k y_k exp(i 2 pi k m / n) for m = 0 ... n-1, with y zero-padded to n
        Eigen::VectorXcd padded_inverse_dft(const Eigen::VectorXcd &y, std::size_t n)
        {
            std::vector<fftw_complex> buf(n);
            for (std::size_t k = 0; k < n; ++k)
            {
                cplx v = k < std::size_t(y.size()) ? y[Eigen::Index(k)] : cplx(0.0);
                buf[k][0] = v.real();
                buf[k][1] = v.imag();
            }
            fftw_plan plan;
            {
                std::lock_guard<std::mutex> lock(plan_mutex());
                plan = fftw_plan_dft_1d(int(n), buf.data(), buf.data(), FFTW_BACKWARD, FFTW_ESTIMATE);
            }
            fftw_execute(plan);
            {
                std::lock_guard<std::mutex> lock(plan_mutex());
                fftw_destroy_plan(plan);
            }
            Eigen::VectorXcd out(static_cast<Eigen::Index>(n));
            for (std::size_t m = 0; m < n; ++m)
                out[Eigen::Index(m)] = {buf[m][0], buf[m][1]};
            return out;
        }

        // Angular frequencies 2 pi nu_k delta_f of the centered subcarriers
        Eigen::VectorXd angular_freqs(const RadioParams &radio)
        {
            return 2.0 * pi * radio.delta_f() * subcarrier_offsets(radio.K);
        }

        // sum_k r_k exp(i w_k tau) and its first two tau derivatives
        struct Correlation
        {
            cplx s, ds, d2s;
        };

        Correlation correlate(const Eigen::VectorXcd &r, const Eigen::VectorXd &w, double tau)
        {
            Correlation c{0.0, 0.0, 0.0};
            for (Eigen::Index k = 0; k < r.size(); ++k)
            {
                cplx t = r[k] * std::polar(1.0, w[k] * tau);
                c.s += t;
                c.ds += cplx(0.0, w[k]) * t;
                c.d2s -= w[k] * w[k] * t;
            }
            return c;
        }

        Eigen::VectorXcd atom(const Eigen::VectorXd &w, double tau)
        {
            Eigen::VectorXcd a(w.size());
            for (Eigen::Index k = 0; k < w.size(); ++k)
                a[k] = std::polar(1.0, -w[k] * tau);
            return a;
        }

        // Maximizes |sum_k r_k exp(i w_k tau)|^2 on [tau0 - h, tau0 + h], then polishes with Newton steps on the
        // derivative
        double refine_delay(const Eigen::VectorXcd &r, const Eigen::VectorXd &w, double tau0, double h)
        {
            auto neg = [&](double t) { return -std::norm(correlate(r, w, t).s); };
            // Searched in grid units: delays of order 1e-8 s are below the minimizer's absolute tolerance
            auto res = boost::math::tools::brent_find_minima([&](double u) { return neg(tau0 + u * h); }, -1.0, 1.0,
                                                             brent_bits);
            double tau = tau0 + res.first * h, best = res.second;
            for (int it = 0; it < 5; ++it)
            {
                Correlation c = correlate(r, w, tau);
                double f1 = 2.0 * (std::conj(c.s) * c.ds).real();
                double f2 = 2.0 * (std::norm(c.ds) + (std::conj(c.s) * c.d2s).real());
                if (!(f2 < 0.0))
                    break;
                double step = -f1 / f2;
                if (std::abs(step) > h)
                    break;
                double val = neg(tau + step);
                if (val > best)
                    break;
                tau += step;
                best = val;
                if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(tau)))
                    break;
            }
            return tau;
        }

        double quadratic_offset(double a, double b, double c)
        {
            double den = a - 2.0 * b + c;
            if (den >= 0.0)
                return 0.0;
            return std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
        }
    }

    DelayEstimate estimate_uncontrollable_delays(const Eigen::VectorXcd &z0, const Eigen::VectorXcd &pilot,
                                                 const RadioParams &radio, std::size_t max_paths,
                                                 const DelayEstimatorOptions &opt)
    {
        radio.validate();
        if (std::size_t(z0.size()) != radio.K || pilot.size() != z0.size())
            throw std::invalid_argument("Observation and pilot must have length K.");
        if (opt.oversampling == 0)
            throw std::invalid_argument("Oversampling factor must be positive.");
        for (Eigen::Index k = 0; k < pilot.size(); ++k)
            if (pilot[k] == 0.0)
                throw std::invalid_argument("Pilot must be non-zero on every subcarrier.");

        const std::size_t K = radio.K, n = opt.oversampling * K;
        const Eigen::VectorXd w = angular_freqs(radio);
        const double grid = 1.0 / (double(opt.oversampling) * radio.B);
        const double period = 1.0 / radio.delta_f();
        const Eigen::VectorXcd y = z0.cwiseQuotient(pilot);
        double floor = 0.0;
        if (opt.noise_var > 0.0)
            for (Eigen::Index k = 0; k < pilot.size(); ++k)
                floor += opt.noise_var / std::norm(pilot[k]);

        DelayEstimate out;
        Eigen::VectorXcd r = y;
        double ref = 0.0;
        while (out.tau.size() < max_paths)
        {
            Eigen::VectorXcd P = padded_inverse_dft(r, n);
            Eigen::Index m = 0;
            P.cwiseAbs2().maxCoeff(&m);
            const double pmax = std::norm(P[m]);
            if (out.tau.empty())
                ref = pmax;
            if (!(pmax > 0.0) || pmax < opt.dynamic_range * ref)
                break;
            if (floor > 0.0 && pmax < opt.threshold * floor)
                break;
            const std::size_t mm = std::size_t(m);
            double a = std::abs(P[Eigen::Index((mm + n - 1) % n)]), b = std::abs(P[m]),
                   c = std::abs(P[Eigen::Index((mm + 1) % n)]);
            double tau = (double(mm) + quadratic_offset(a, b, c)) * grid;
            tau = refine_delay(r, w, tau, grid);
            tau = std::fmod(std::fmod(tau, period) + period, period);
            Eigen::VectorXcd at = atom(w, tau);
            cplx g = at.dot(r) / double(K);
            r -= g * at;
            out.tau.push_back(tau);
            out.amplitude.push_back(g);
        }

        const std::size_t L = out.tau.size();
        if (opt.refine && L > 1)
        {
            for (int sweep = 0; sweep < 100; ++sweep)
            {
                double moved = 0.0;
                for (std::size_t l = 0; l < L; ++l)
                {
                    Eigen::VectorXcd rl = y;
                    for (std::size_t j = 0; j < L; ++j)
                        if (j != l)
                            rl -= out.amplitude[j] * atom(w, out.tau[j]);
                    double t = refine_delay(rl, w, out.tau[l], grid);
                    moved = std::max(moved, std::abs(t - out.tau[l]));
                    out.tau[l] = t;
                    out.amplitude[l] = atom(w, t).dot(rl) / double(K);
                }
                if (moved < 1e-9 / radio.B)
                    break;
            }
        }
        if (L > 0)
        {
            Eigen::MatrixXcd A(static_cast<Eigen::Index>(K), Eigen::Index(L));
            for (std::size_t l = 0; l < L; ++l)
                A.col(static_cast<Eigen::Index>(l)) = atom(w, out.tau[l]);
            Eigen::VectorXcd g = A.colPivHouseholderQr().solve(y);
            for (std::size_t l = 0; l < L; ++l)
                out.amplitude[l] = g[Eigen::Index(l)];
            // Strongest path first
            std::vector<std::size_t> order(L);
            for (std::size_t l = 0; l < L; ++l)
                order[l] = l;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j)
                             { return std::abs(out.amplitude[i]) > std::abs(out.amplitude[j]); });
            DelayEstimate sorted;
            for (std::size_t l : order)
            {
                sorted.tau.push_back(out.tau[l]);
                sorted.amplitude.push_back(out.amplitude[l]);
            }
            out = std::move(sorted);
        }
        return out;
    }

    RisEstimate estimate_ris_params(const std::vector<Eigen::VectorXcd> &per_config, const CodedSchedule &schedule,
                                    const RisDeployment &ris, double aoa, const Eigen::VectorXcd &pilot,
                                    const RadioParams &radio, const RisEstimatorOptions &opt)
    {
        radio.validate();
        schedule.validate();
        const std::size_t Q = schedule.n_groups();
        if (per_config.size() != Q)
            throw std::invalid_argument("One separated observation per configuration is required.");
        if (std::size_t(pilot.size()) != radio.K)
            throw std::invalid_argument("Pilot length must equal K.");
        for (const auto &z : per_config)
            if (std::size_t(z.size()) != radio.K)
                throw std::invalid_argument("Separated observations must have length K.");
        if (std::size_t(schedule.configs[0].size()) != ris.size())
            throw std::invalid_argument("Configuration length does not match the RIS.");
        if (opt.delay_oversampling == 0 || !(opt.angle_step > 0.0) || !(opt.tolerance > 0.0))
            throw std::invalid_argument("Invalid RIS estimator options.");

        // The AOD is only observable through differences between configurations
        bool rank_one = true;
        for (std::size_t i = 1; i < Q && rank_one; ++i)
        {
            const auto &w0 = schedule.configs[0], &wi = schedule.configs[i];
            if (std::abs(w0.dot(wi)) < (1.0 - 1e-12) * w0.norm() * wi.norm())
                rank_one = false;
        }
        if (rank_one)
            throw NonIdentifiableError("AOD is not identifiable: all configurations are equal up to a scalar.");

        const std::size_t K = radio.K, n = opt.delay_oversampling * K;
        const double grid = 1.0 / (double(opt.delay_oversampling) * radio.B);
        const Eigen::VectorXd w = angular_freqs(radio);
        std::vector<Eigen::VectorXcd> y(Q);
        std::vector<double> L(Q);
        for (std::size_t i = 0; i < Q; ++i)
        {
            y[i] = per_config[i].cwiseQuotient(pilot);
            L[i] = double(schedule.lengths[i]);
        }

        auto beam = [&](double phi)
        {
            Eigen::VectorXcd b = ris_cascade(ris, aoa, phi);
            Eigen::VectorXcd s(static_cast<Eigen::Index>(Q));
            for (std::size_t i = 0; i < Q; ++i)
                s[Eigen::Index(i)] = b.cwiseProduct(schedule.configs[i]).sum();
            return s;
        };
        auto objective = [&](const Eigen::VectorXcd &s, const Eigen::VectorXcd &Y)
        {
            double den = 0.0;
            for (std::size_t i = 0; i < Q; ++i)
                den += L[i] * std::norm(s[Eigen::Index(i)]);
            if (!(den > 0.0))
                return 0.0;
            return std::norm(s.dot(Y)) / den;
        };
        auto correlations = [&](double tau)
        {
            Eigen::VectorXcd e(w.size());
            for (Eigen::Index k = 0; k < w.size(); ++k)
                e[k] = std::polar(1.0, w[k] * tau);
            Eigen::VectorXcd Y(static_cast<Eigen::Index>(Q));
            for (std::size_t i = 0; i < Q; ++i)
                Y[Eigen::Index(i)] = e.cwiseProduct(y[i]).sum();
            return Y;
        };

        // Coarse delay window from the incoherent energy
        std::vector<Eigen::VectorXcd> prof(Q);
        Eigen::VectorXd energy = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < Q; ++i)
        {
            prof[i] = padded_inverse_dft(y[i], n);
            energy += prof[i].cwiseAbs2() / L[i];
        }
        Eigen::Index m0 = 0;
        energy.maxCoeff(&m0);

        // 2-D grid search over delay and AOD
        const std::size_t n_ang = std::size_t(std::floor(pi / opt.angle_step + 1e-9)) + 1;
        double best = -1.0, best_tau = 0.0, best_phi = 0.0;
        double ang_min = std::numeric_limits<double>::infinity(), ang_max = 0.0;
        const long W = long(opt.window);
        for (std::size_t a = 0; a < n_ang; ++a)
        {
            double phi = -pi / 2.0 + double(a) * opt.angle_step;
            Eigen::VectorXcd s = beam(phi);
            double best_here = 0.0;
            for (long dm = -W; dm <= W; ++dm)
            {
                std::size_t m = std::size_t((long(m0) + dm + long(n)) % long(n));
                Eigen::VectorXcd Y(static_cast<Eigen::Index>(Q));
                for (std::size_t i = 0; i < Q; ++i)
                    Y[Eigen::Index(i)] = prof[i][Eigen::Index(m)];
                double f = objective(s, Y);
                best_here = std::max(best_here, f);
                if (f > best)
                {
                    best = f;
                    best_tau = double(long(m0) + dm) * grid;
                    best_phi = phi;
                }
            }
            ang_min = std::min(ang_min, best_here);
            ang_max = std::max(ang_max, best_here);
        }
        if (!(best > 0.0) || ang_max - ang_min <= 1e-9 * ang_max)
            throw NonIdentifiableError("AOD is not identifiable: the likelihood is flat in angle.");

        // Alternating refinement; the grid phase factor does not matter for the magnitude
        double tau = best_tau, phi = best_phi;
        for (int it = 0; it < 50; ++it)
        {
            Eigen::VectorXcd s = beam(phi);
            auto ft = [&](double u) { return -objective(s, correlations(tau + u * grid)); };
            double t_new = tau + grid * boost::math::tools::brent_find_minima(ft, -1.0, 1.0, brent_bits).first;
            Eigen::VectorXcd Y = correlations(t_new);
            auto fp = [&](double p) { return -objective(beam(p), Y); };
            double lo = std::max(-pi / 2.0, phi - opt.angle_step), hi = std::min(pi / 2.0, phi + opt.angle_step);
            double p_new = boost::math::tools::brent_find_minima(fp, lo, hi, brent_bits).first;
            double dt = std::abs(t_new - tau) / grid, dp = std::abs(p_new - phi) / opt.angle_step;
            tau = t_new;
            phi = p_new;
            if (dt < 1e-2 * opt.tolerance && dp < 1e-2 * opt.tolerance)
                break;
        }

        RisEstimate out;
        const double period = 1.0 / radio.delta_f();
        out.aod = phi;
        Eigen::VectorXcd s = beam(phi);
        Eigen::VectorXcd Y = correlations(tau);
        double den = 0.0;
        for (std::size_t i = 0; i < Q; ++i)
            den += L[i] * std::norm(s[Eigen::Index(i)]);
        out.gain = s.dot(Y) / (double(K) * den);
        out.objective = objective(s, Y);
        out.tau = std::fmod(std::fmod(tau, period) + period, period);
        return out;
    }
}
