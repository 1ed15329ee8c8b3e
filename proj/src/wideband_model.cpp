// SPDX-License-Identifier: Apache-2.0

#include "ris/wideband_model.hpp"
#include "ris/comm.hpp"

#include <vector>

namespace ris
{
    void WidebandScenario::validate() const
    {
        if (!(f_c > 0.0))
            throw std::invalid_argument("Carrier frequency must be positive.");
        if (n_side == 0 || !(spacing_wl > 0.0))
            throw std::invalid_argument("RIS must have at least one element and positive spacing.");
        if (!(tx.x() > 0.0) || !(rx.x() > 0.0))
            throw std::invalid_argument("Transmitter and receiver must be in front of the RIS (x > 0).");
        for (const ClusterSpec *c : {&tx_ris.clusters, &ris_rx.clusters, &direct})
            if (c->count > 0 && !(c->rms_delay_spread > 0.0))
                throw std::invalid_argument("Cluster delay spread must be positive.");
        if (!tx_ris.los && tx_ris.clusters.count == 0)
            throw std::invalid_argument("An NLOS leg needs at least one cluster.");
        if (!ris_rx.los && ris_rx.clusters.count == 0)
            throw std::invalid_argument("An NLOS leg needs at least one cluster.");
        if (direct.count == 0)
            throw std::invalid_argument("The direct link needs at least one cluster.");
    }

    namespace
    {
        struct Cluster
        {
            double excess = 0.0;   // Excess delay [s]
            double power = 0.0;    // Share of the leg power
            Eigen::Vector3d u;     // Direction towards the scatterer
            double phase = 0.0;
        };

        std::vector<Cluster> draw_clusters(Rng &rng, const ClusterSpec &spec, double total_power)
        {
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            std::vector<Cluster> out(spec.count);
            const double tail = 1.0 - std::exp(-spec.truncation);
            double sum = 0.0;
            for (auto &c : out)
            {
                c.excess = -spec.rms_delay_spread * std::log(1.0 - uni(rng) * tail);
                c.power = std::exp(-c.excess / spec.rms_delay_spread);
                sum += c.power;
                double az = pi * (uni(rng) - 0.5);
                double el = spec.elevation_spread * (2.0 * uni(rng) - 1.0);
                c.u = Eigen::Vector3d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
                c.phase = 2.0 * pi * uni(rng);
            }
            for (auto &c : out)
                c.power *= total_power / sum;
            return out;
        }

        // Per-element paths of one leg: amplitude-squared losses and delays
        struct LegPath
        {
            Eigen::VectorXd loss;
            Eigen::VectorXd delay;
        };

        std::vector<LegPath> leg_paths(Rng &rng, const LegSpec &leg, const Eigen::Matrix3Xd &el,
                                       const Eigen::Vector3d &terminal, double area, double f_c)
        {
            const Eigen::Index N = el.cols();
            Eigen::VectorXd aperture(N), dist(N);
            for (Eigen::Index n = 0; n < N; ++n)
            {
                Eigen::Vector3d v = terminal - el.col(n);
                dist[n] = v.norm();
                aperture[n] = area * (v.x() / dist[n]) / (4.0 * pi * dist[n] * dist[n]);
            }

            std::vector<LegPath> out;
            double cluster_share = 1.0;
            if (leg.los)
            {
                double k = db_to_lin(leg.k_factor_db);
                out.push_back({aperture * (k / (1.0 + k)), dist / speed_of_light});
                cluster_share = 1.0 / (1.0 + k);
            }
            else
                cluster_share = db_to_lin(-leg.excess_loss_db);

            const double base = terminal.norm() / speed_of_light;
            for (const auto &c : draw_clusters(rng, leg.clusters, cluster_share))
            {
                LegPath p;
                p.loss = aperture * c.power;
                p.delay = Eigen::VectorXd::Constant(N, base + c.excess + c.phase / (2.0 * pi * f_c));
                p.delay -= (el.transpose() * c.u) / speed_of_light;
                out.push_back(std::move(p));
            }
            return out;
        }
    }

    PathSet generate_clustered_paths(const WidebandScenario &scn, std::uint64_t seed)
    {
        scn.validate();
        const double lambda = speed_of_light / scn.f_c;
        const Eigen::Matrix3Xd el = scn.geometry().pos * lambda;
        const Eigen::Index N = el.cols();

        const double area = std::pow(scn.spacing_wl * lambda, 2.0);

        Rng rng(seed);
        auto a_paths = leg_paths(rng, scn.tx_ris, el, scn.tx, area, scn.f_c);
        auto b_paths = leg_paths(rng, scn.ris_rx, el, scn.rx, area, scn.f_c);

        PathSet ps;
        ps.ris.resize(std::size_t(N));
        for (Eigen::Index n = 0; n < N; ++n)
        {
            auto &element = ps.ris[std::size_t(n)];
            element.reserve(a_paths.size() * b_paths.size());
            for (const auto &a : a_paths)
                for (const auto &b : b_paths)
                    element.push_back({a.loss[n], b.loss[n], a.delay[n] + b.delay[n]});
        }

        const double d = (scn.tx - scn.rx).norm();
        const double fspl = std::pow(lambda / (4.0 * pi * d), 2.0);
        for (const auto &c : draw_clusters(rng, scn.direct, fspl * db_to_lin(-scn.direct_excess_loss_db)))
            ps.direct.push_back({c.power, d / speed_of_light + c.excess + c.phase / (2.0 * pi * scn.f_c)});
        return ps;
    }

    WidebandRates evaluate_wideband(const PathSet &paths, double f_c, double B, double snr_db, double spacing,
                                    std::size_t guard)
    {
        if (!(B > 0.0) || !(spacing > 0.0))
            throw std::invalid_argument("Bandwidth and subcarrier spacing must be positive.");
        RadioParams radio;
        radio.f_c = f_c;
        radio.B = B;
        radio.K = std::size_t(std::llround(B / spacing));
        radio.eta = default_sampling_delay(paths);
        radio.N0 = 1.0;
        radio.P = db_to_lin(snr_db) * B * radio.N0;
        radio.M = required_taps(paths, radio, guard);
        if (radio.K < radio.M)
            throw std::invalid_argument("Too few subcarriers for the channel length at B = " + std::to_string(B) + " Hz.");
        radio.validate();

        const TapVector h_d = direct_impulse_response(paths, radio, guard);
        const TapMatrix V = tap_matrix(paths, radio, guard);
        WidebandRates out;
        out.K = radio.K;
        out.M = radio.M;
        out.stm = wideband_rate_waterfilled(h_d, V, stm_configure(h_d, V), radio).rate;
        out.bound = rate_upper_bound_waterfilled(h_d, V, radio).rate;
        out.no_ris = wideband_rate_waterfilled(h_d, V, RisConfig::off(paths.n_elements()), radio).rate;
        return out;
    }
}
