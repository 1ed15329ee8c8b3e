// SPDX-License-Identifier: Apache-2.0

#include "ris/locsense.hpp"

#include <boost/math/tools/roots.hpp>

#include <iostream>

namespace ris::loc
{
    PositionSolution solve_position(double tau_los, double tau_ris, double aod, const Vec2 &p_bs,
                                    const RisDeployment &ris)
    {
        if (!std::isfinite(tau_los) || !std::isfinite(tau_ris) || !std::isfinite(aod))
            throw std::invalid_argument("Measurements must be finite.");
        const double c = speed_of_light;
        const double D = (p_bs - ris.position).norm();
        if (D == 0.0)
            throw std::invalid_argument("RIS and BS positions coincide.");
        const double tdoa = (tau_ris - tau_los) * c;
        const Vec2 k = ris.direction(aod);

        // f is non-decreasing in the range r from the RIS along the AOD ray
        auto f = [&](double r) { return r + D - (ris.position + r * k - p_bs).norm() - tdoa; };
        auto df = [&](double r)
        {
            Vec2 v = ris.position + r * k - p_bs;
            double n = v.norm();
            return n > 0.0 ? 1.0 - k.dot(v) / n : 1.0;
        };

        PositionSolution out;
        double lo = 0.0, hi = std::max(1.0, 2.0 * D);
        const double f_lo = f(lo);
        if (f_lo > 0.0)
            throw InfeasibleMeasurementError("TDOA is negative: no position on the AOD ray matches it.");
        double r = 0.0;
        if (f_lo == 0.0)
            r = 0.0;
        else
        {
            while (f(hi) < 0.0)
            {
                hi *= 2.0;
                if (hi > 1e8)
                    throw InfeasibleMeasurementError("TDOA is not reached anywhere on the AOD ray.");
            }
            std::uintmax_t iters = 200;
            auto root = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52),
                                                          iters);
            r = 0.5 * (root.first + root.second);
        }
        out.range = r;
        out.p = ris.position + r * k;
        out.clk = tau_los - (p_bs - out.p).norm() / c;
        if (df(r) < 1e-9)
        {
            out.ill_conditioned = true;
            std::cerr << "warning: position solver is ill-conditioned (user near the BS-RIS line behind the BS)\n";
        }
        return out;
    }

    double Ellipse::range_sum_residual(const Vec2 &q) const
    {
        return (q - focus1).norm() + (q - focus2).norm() - range_sum;
    }

    double Ellipse::signed_distance(const Vec2 &q) const
    {
        // Closest point on the ellipse in its canonical frame by bisection on the Lagrange multiplier
        const Vec2 center = 0.5 * (focus1 + focus2);
        const double a = 0.5 * range_sum;
        const double e = 0.5 * (focus2 - focus1).norm();
        const double b = std::sqrt(std::max(a * a - e * e, 0.0));
        Vec2 ux = e > 0.0 ? Vec2((focus2 - focus1) / (2.0 * e)) : Vec2(1.0, 0.0);
        Vec2 uy(-ux.y(), ux.x());
        Vec2 d = q - center;
        double y0 = std::abs(d.dot(ux)), y1 = std::abs(d.dot(uy));
        const double sign = range_sum_residual(q) < 0.0 ? -1.0 : 1.0;

        double x0 = 0.0, x1 = 0.0;
        if (y1 > 0.0)
        {
            if (y0 > 0.0)
            {
                // Root of (a y0 / (t + a^2))^2 + (b y1 / (t + b^2))^2 = 1 for t > -b^2
                auto g = [&](double t)
                {
                    double r0 = a * y0 / (t + a * a), r1 = b * y1 / (t + b * b);
                    return r0 * r0 + r1 * r1 - 1.0;
                };
                double t0 = -b * b + b * y1, t1 = -b * b + std::hypot(a * y0, b * y1);
                if (g(t0) < 0.0)
                    t0 = -b * b + 1e-300;
                for (int it = 0; it < 200; ++it)
                {
                    double tm = 0.5 * (t0 + t1);
                    if (tm == t0 || tm == t1)
                        break;
                    (g(tm) > 0.0 ? t0 : t1) = tm;
                }
                double t = 0.5 * (t0 + t1);
                x0 = a * a * y0 / (t + a * a);
                x1 = b * b * y1 / (t + b * b);
            }
            else
            {
                x0 = 0.0;
                x1 = b;
            }
        }
        else
        {
            double num = a * y0, den = a * a - b * b;
            if (num < den)
            {
                double xa = num / den;
                x0 = a * xa;
                x1 = b * std::sqrt(std::max(1.0 - xa * xa, 0.0));
            }
            else
            {
                x0 = a;
                x1 = 0.0;
            }
        }
        return sign * std::hypot(y0 - x0, y1 - x1);
    }

    Ellipse sense_tsoa(double tau_sp, double tau_los, const Vec2 &p_user, const Vec2 &p_bs)
    {
        if (!std::isfinite(tau_sp) || !std::isfinite(tau_los) || !p_user.allFinite() || !p_bs.allFinite())
            throw std::invalid_argument("TSOA inputs must be finite.");
        Ellipse el;
        el.focus1 = p_bs;
        el.focus2 = p_user;
        const double focal = (p_user - p_bs).norm();
        el.range_sum = (tau_sp - tau_los) * speed_of_light + focal;
        if (!(el.range_sum > focal))
            throw std::invalid_argument("Range sum does not exceed the focal distance: degenerate ellipse.");
        return el;
    }

    LocalizationResult localize(const SeparatedChannels &obs, const CodedSchedule &schedule, const Vec2 &p_bs,
                                const RisDeployment &ris, const Eigen::VectorXcd &pilot, const RadioParams &radio,
                                std::size_t max_paths, const DelayEstimatorOptions &delay_opt,
                                const RisEstimatorOptions &ris_opt)
    {
        if (max_paths == 0)
            throw std::invalid_argument("At least the LOS path must be estimated.");
        LocalizationResult out;
        out.delays = estimate_uncontrollable_delays(obs.uncontrollable, pilot, radio, max_paths, delay_opt);
        if (out.delays.tau.empty())
            throw NonIdentifiableError("No uncontrollable path was detected.");
        out.ris = estimate_ris_params(obs.per_config, schedule, ris, ris.azimuth_to(p_bs), pilot, radio, ris_opt);
        const double tau_los = out.delays.tau[0];
        out.position = solve_position(tau_los, out.ris.tau, out.ris.aod, p_bs, ris);
        for (std::size_t l = 1; l < out.delays.tau.size(); ++l)
            out.scatterers.push_back(sense_tsoa(out.delays.tau[l], tau_los, out.position.p, p_bs));
        return out;
    }
}
