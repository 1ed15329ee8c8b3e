// SPDX-License-Identifier: Apache-2.0

#include "ris/locsense.hpp"
#include "ris/parallel.hpp"

#include <cmath>
#include <limits>

namespace ris::loc
{
    namespace
    {
        constexpr double inf = std::numeric_limits<double>::infinity();
    }

    void Grid::validate() const
    {
        if (!(dx > 0.0) || !(dy > 0.0))
            throw std::invalid_argument("Grid step must be positive.");
        if (nx == 0 || ny == 0)
            throw std::invalid_argument("Grid region is empty.");
        if (!std::isfinite(x0) || !std::isfinite(y0))
            throw std::invalid_argument("Grid origin must be finite.");
    }

    Grid Grid::cells(double xmin, double xmax, double ymin, double ymax, double step)
    {
        if (!(step > 0.0))
            throw std::invalid_argument("Grid step must be positive.");
        if (!(xmax > xmin) || !(ymax > ymin))
            throw std::invalid_argument("Grid region is empty.");
        Grid g;
        g.dx = g.dy = step;
        g.nx = std::size_t(std::llround((xmax - xmin) / step));
        g.ny = std::size_t(std::llround((ymax - ymin) / step));
        if (g.nx == 0 || g.ny == 0)
            throw std::invalid_argument("Grid region is smaller than one cell.");
        g.x0 = xmin + 0.5 * step;
        g.y0 = ymin + 0.5 * step;
        return g;
    }

    CoverageResult offline_coverage(const Scenario &base, const std::vector<RisDeployment> &placement,
                                    const Grid &grid, const RadioParams &radio, const CoverageOptions &opt)
    {
        grid.validate();
        radio.validate();
        if (!(opt.epsilon > 0.0))
            throw std::invalid_argument("PEB threshold must be positive.");
        if (opt.draws == 0)
            throw std::invalid_argument("At least one configuration draw is required.");
        if (opt.n_configs == 0 || opt.n_blocks % opt.n_configs != 0 || opt.n_blocks / opt.n_configs < 2)
            throw std::invalid_argument("Q must divide T with at least two blocks per configuration.");

        const double c = speed_of_light;
        const double lambda = radio.wavelength();
        const Eigen::VectorXcd pilot = constant_pilot(radio);
        const double beff2 = effective_bandwidth_sq(pilot, radio);
        const double energy = pilot.squaredNorm();
        const double T = double(opt.n_blocks);
        const std::vector<std::size_t> lengths(opt.n_configs, opt.n_blocks / opt.n_configs);
        const std::size_t R = placement.size();

        // Random configurations are shared by all grid points; draw d of RIS slot r is fixed by the seed
        std::vector<std::vector<std::vector<Eigen::VectorXcd>>> configs(opt.draws);
        for (std::size_t d = 0; d < opt.draws; ++d)
        {
            Rng rng(derive_seed(opt.seed, d));
            for (std::size_t r = 0; r < R; ++r)
                configs[d].push_back(random_configs(opt.n_configs, placement[r].size(), rng));
        }

        CoverageResult out;
        out.peb = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.ny), Eigen::Index(grid.nx));
        out.covered = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.ny), Eigen::Index(grid.nx));
        parallel_for(grid.size(), opt.threads, [&](std::size_t idx)
        {
            const std::size_t ix = idx % grid.nx, iy = idx / grid.nx;
            const Vec2 p = grid.point(ix, iy);
            const Vec2 v_bs = p - base.p_bs;
            const double d_bs = v_bs.norm();
            if (d_bs == 0.0)
            {
                out.peb(static_cast<Eigen::Index>(iy), Eigen::Index(ix)) = inf;
                return;
            }
            const double g_los2 = std::pow(lambda / (4.0 * pi * d_bs), 2);
            Eigen::Vector3d row_los;
            row_los << v_bs / (c * d_bs), 1.0;

            struct Slot
            {
                Eigen::VectorXcd b, bd;
                double g2 = 0.0;
                Eigen::Vector3d row_tau, row_aod;
            };
            std::vector<Slot> slots(R);
            for (std::size_t r = 0; r < R; ++r)
            {
                const auto &ris = placement[r];
                Vec2 v = p - ris.position;
                const double d = v.norm();
                const double aoa = ris.azimuth_to(base.p_bs), aod = ris.azimuth_to(p);
                const double size = ris.element_size_wl * lambda;
                const double a = d > 0.0 ? std::sqrt(gain_pattern(aoa) * gain_pattern(aod)) * size * size /
                                               (4.0 * pi) / (ris.position - base.p_bs).norm() / d
                                         : 0.0;
                slots[r].g2 = a * a;
                if (slots[r].g2 == 0.0)
                    continue;
                slots[r].b = ris_cascade(ris, aoa, aod);
                slots[r].bd = ris_cascade_d_aod(ris, aoa, aod);
                slots[r].row_tau << v / (c * d), 1.0;
                Vec2 g = (ris.tangent() * v.dot(ris.normal()) - ris.normal() * v.dot(ris.tangent())) / (d * d);
                slots[r].row_aod << g, 0.0;
            }

            double speb_sum = 0.0;
            std::size_t hits = 0;
            for (std::size_t dr = 0; dr < opt.draws; ++dr)
            {
                Eigen::MatrixXd Jt = Eigen::MatrixXd::Zero(3, 3);
                double J_los = 0.0;
                for (std::size_t r = 0; r < R; ++r)
                {
                    if (slots[r].g2 == 0.0)
                        continue;
                    BeamMoments m = beam_moments(slots[r].b, slots[r].bd, configs[dr][r], lengths);
                    ClosedFormFim e = closed_form_entries(m, g_los2, slots[r].g2, T, beff2, energy, radio.N0);
                    J_los = e.tau_los;
                    Jt += e.tau_ris * slots[r].row_tau * slots[r].row_tau.transpose();
                    Jt += e.aod * slots[r].row_aod * slots[r].row_aod.transpose();
                }
                if (J_los == 0.0)
                    J_los = 2.0 * g_los2 * T * beff2 / radio.N0;
                Jt += J_los * row_los * row_los.transpose();
                LocationBound lb = location_bound(Jt);
                speb_sum += lb.speb;
                if (lb.identifiable && std::sqrt(lb.speb) <= opt.epsilon)
                    ++hits;
            }
            out.peb(static_cast<Eigen::Index>(iy), Eigen::Index(ix)) = std::sqrt(speb_sum / double(opt.draws));
            out.covered(static_cast<Eigen::Index>(iy), Eigen::Index(ix)) = double(hits) / double(opt.draws);
        });
        out.fraction = out.covered.mean();
        return out;
    }

    OnlineSweepResult online_sweep(const Scenario &scn, const ChannelParams &prm, const std::vector<double> &fractions,
                                   std::size_t T, const RadioParams &radio, std::size_t n_random,
                                   std::size_t random_draws, std::uint64_t seed)
    {
        if (scn.ris.size() != 1 || prm.n_ris() != 1)
            throw std::invalid_argument("Online sweep requires exactly one RIS.");
        if (fractions.empty())
            throw std::invalid_argument("Online sweep needs at least one fraction.");
        if (T < 4)
            throw std::invalid_argument("Online sweep needs at least four blocks.");
        const auto &ris = scn.ris[0];
        const auto &rp = prm.ris[0];
        const Eigen::VectorXcd pilot = constant_pilot(radio);
        const Eigen::VectorXcd w_dir = direct_beam(ris, rp.aoa, rp.aod);
        const Eigen::VectorXcd w_der = derivative_beam(ris, rp.aoa, rp.aod);
        const ParamLayout lay{prm.n_paths(), 1, true};

        OnlineSweepResult out;
        double best = inf;
        for (double f : fractions)
        {
            if (!(f >= 0.0 && f <= 1.0))
                throw std::invalid_argument("Fractions must lie in [0, 1].");
            OnlinePoint pt;
            pt.fraction = f;
            pt.t1 = std::size_t(std::llround(f * double(T)));
            if (pt.t1 == 1 || pt.t1 + 1 == T)
                throw std::invalid_argument("Each beam needs at least two blocks for a balanced code.");
            std::vector<Eigen::VectorXcd> cfg;
            std::vector<std::size_t> len;
            if (pt.t1 > 0)
            {
                cfg.push_back(w_dir);
                len.push_back(pt.t1);
            }
            if (pt.t1 < T)
            {
                cfg.push_back(w_der);
                len.push_back(T - pt.t1);
            }
            FimBundle fb = fim_channel(scn, prm, {weighted_schedule(cfg, len)}, pilot, radio);
            position_fim(fb, scn, prm);
            pt.finite = fb.identifiable;
            pt.peb = fb.peb;
            double jt = effective_information(fb, lay.tau_ris(0));
            double ja = effective_information(fb, lay.aod(0));
            // Beams that carry no information in closed form are reported as exactly unbounded
            const BeamMoments m = beam_moments(ris_cascade(ris, rp.aoa, rp.aod), ris_cascade_d_aod(ris, rp.aoa, rp.aod),
                                               cfg, len);
            const ClosedFormFim e = closed_form_entries(m, std::norm(prm.gain[0]), std::norm(rp.gain), double(T),
                                                        effective_bandwidth_sq(pilot, radio), pilot.squaredNorm(),
                                                        radio.N0);
            pt.tau_ris_bound = jt > 0.0 && e.tau_ris > 0.0 ? speed_of_light / std::sqrt(jt) : inf;
            pt.aod_bound = ja > 0.0 && e.aod > 0.0 ? 1.0 / std::sqrt(ja) : inf;
            if (pt.finite && pt.peb < best)
            {
                best = pt.peb;
                out.argmin = out.points.size();
            }
            out.points.push_back(pt);
        }

        // Random-configuration baseline with equal group lengths
        if (n_random > 0 && random_draws > 0)
        {
            double speb = 0.0;
            for (std::size_t d = 0; d < random_draws; ++d)
            {
                Rng rng(derive_seed(seed, d));
                auto cfg = random_configs(n_random, ris.size(), rng);
                FimBundle fb = fim_channel(scn, prm, {coded_schedule(n_random, T, cfg)}, pilot, radio);
                position_fim(fb, scn, prm);
                speb += fb.speb;
            }
            out.random_peb = std::sqrt(speb / double(random_draws));
        }
        return out;
    }
}
