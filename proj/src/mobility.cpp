// SPDX-License-Identifier: Apache-2.0

#include "ris/mobility.hpp"

#include <algorithm>
#include <limits>

namespace ris
{
    void Trajectory::validate() const
    {
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw std::invalid_argument("Trajectory time step must be positive.");
        if (rx.empty())
            throw std::invalid_argument("Trajectory is empty.");
        for (const auto &p : rx)
            if (!p.allFinite())
                throw std::invalid_argument("Trajectory positions must be finite.");
    }

    Trajectory Trajectory::linear(const Eigen::Vector3d &start, const Eigen::Vector3d &velocity, double dt,
                                  std::size_t n_samples, double t0)
    {
        Trajectory tr;
        tr.t0 = t0;
        tr.dt = dt;
        tr.rx.reserve(n_samples);
        for (std::size_t i = 0; i < n_samples; ++i)
            tr.rx.push_back(start + velocity * (double(i) * dt));
        return tr;
    }

    Eigen::Matrix3Xd MobilityScene::element_positions() const
    {
        const double lambda = speed_of_light / f_c;
        Eigen::Matrix3Xd p = ris_rotation * (geometry.pos * lambda);
        p.colwise() += ris_center;
        return p;
    }

    Eigen::VectorXd MobilityScene::incoming_delays() const
    {
        Eigen::Matrix3Xd el = element_positions();
        Eigen::VectorXd t(el.cols());
        for (Eigen::Index n = 0; n < el.cols(); ++n)
            t[n] = (el.col(n) - tx).norm() / speed_of_light;
        return t;
    }

    Eigen::VectorXd MobilityScene::outgoing_delays(const Eigen::Vector3d &rx) const
    {
        Eigen::Matrix3Xd el = element_positions();
        Eigen::VectorXd t(el.cols());
        for (Eigen::Index n = 0; n < el.cols(); ++n)
            t[n] = (rx - el.col(n)).norm() / speed_of_light;
        return t;
    }

    double MobilityScene::direct_delay(const Eigen::Vector3d &rx) const
    {
        return (rx - tx).norm() / speed_of_light;
    }

    bool MobilityScene::in_front(const Eigen::Vector3d &p) const
    {
        return (p - ris_center).dot(ris_rotation.col(0)) > 0.0;
    }

    PathSet MobilityScene::paths_at(const Eigen::Vector3d &rx) const
    {
        const double lambda = speed_of_light / f_c;
        auto fs = [lambda](double tau)
        {
            double a = lambda / (4.0 * pi * tau * speed_of_light);
            return std::min(a * a, 1.0);
        };
        Eigen::VectorXd ta = incoming_delays(), tb = outgoing_delays(rx);
        PathSet ps;
        ps.ris.resize(std::size_t(ta.size()));
        for (Eigen::Index n = 0; n < ta.size(); ++n)
            ps.ris[std::size_t(n)].push_back({fs(ta[n]), fs(tb[n]), ta[n] + tb[n]});
        if (has_direct)
        {
            double td = direct_delay(rx);
            ps.direct.push_back({fs(td), td});
        }
        return ps;
    }

    TrackingResult tracking_config(const Trajectory &traj, const MobilityScene &scene, bool with_direct)
    {
        traj.validate();
        if (with_direct && !scene.has_direct)
            throw std::invalid_argument("Direct-path tracking requested for a scene without direct path.");
        const double f_c = scene.f_c;
        const Eigen::VectorXd ta = scene.incoming_delays();
        const Eigen::Index N = ta.size();

        TrackingResult res;
        res.with_direct = with_direct;
        res.configs.reserve(traj.size());
        res.cycles.reserve(traj.size());
        for (const auto &rx : traj.rx)
        {
            if (!scene.in_front(rx))
                throw std::invalid_argument("Receiver left the half-space in front of the RIS.");
            Eigen::VectorXd tb = scene.outgoing_delays(rx);
            Eigen::VectorXd delay(N);
            std::vector<long long> k(std::size_t(N), 0);
            if (with_direct)
            {
                double td = scene.direct_delay(rx);
                for (Eigen::Index n = 0; n < N; ++n)
                {
                    double x = f_c * (ta[n] + tb[n] - td);
                    double kn = std::ceil(x);
                    delay[n] = (kn - x) / f_c;
                    k[std::size_t(n)] = (long long)kn;
                }
            }
            else
            {
                double k_common = -std::numeric_limits<double>::infinity();
                for (Eigen::Index n = 0; n < N; ++n)
                    k_common = std::max(k_common, std::ceil(f_c * (ta[n] + tb[n])));
                for (Eigen::Index n = 0; n < N; ++n)
                {
                    delay[n] = (k_common - f_c * (ta[n] + tb[n])) / f_c;
                    k[std::size_t(n)] = (long long)k_common;
                }
            }
            res.configs.push_back(RisConfig::from_delays(delay, f_c));
            res.cycles.push_back(std::move(k));
        }
        return res;
    }

    std::vector<RisConfig> frozen_config(const RisConfig &config, std::size_t n_samples)
    {
        return std::vector<RisConfig>(n_samples, config);
    }

    namespace
    {
        Eigen::VectorXd config_delays(const RisConfig &c, double f_c)
        {
            if (c.delay.size() == c.phase.size())
                return c.delay;
            Eigen::VectorXd d(c.phase.size());
            for (Eigen::Index n = 0; n < d.size(); ++n)
                d[n] = wrap_phase(-c.phase[n]) / (2.0 * pi * f_c);
            return d;
        }
    }

    DopplerResult doppler_metrics(const Trajectory &traj, const std::vector<RisConfig> &configs,
                                  const MobilityScene &scene)
    {
        traj.validate();
        const std::size_t T = traj.size();
        if (T < 3)
            throw std::invalid_argument("Doppler metrics need at least 3 time samples.");
        if (configs.size() != T)
            throw std::invalid_argument("One configuration per time sample is required.");
        const double f_c = scene.f_c;
        const Eigen::VectorXd ta = scene.incoming_delays();
        const Eigen::Index N = ta.size();

        // Total delay of every path at every sample; the direct path sits in column N
        Eigen::MatrixXd total(static_cast<Eigen::Index>(T), N + 1);
        Eigen::MatrixXd theta(static_cast<Eigen::Index>(T), N);
        for (std::size_t i = 0; i < T; ++i)
        {
            if (configs[i].size() != std::size_t(N))
                throw std::invalid_argument("Configuration length does not match the RIS.");
            Eigen::VectorXd tb = scene.outgoing_delays(traj.rx[i]);
            Eigen::VectorXd tt = config_delays(configs[i], f_c);
            for (Eigen::Index n = 0; n < N; ++n)
            {
                theta(static_cast<Eigen::Index>(i), n) = tt[n];
                total(static_cast<Eigen::Index>(i), n) = tt[n] + ta[n] + tb[n];
            }
            total(static_cast<Eigen::Index>(i), N) = scene.direct_delay(traj.rx[i]);
        }

        DopplerResult res;
        res.shift = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T), N + 1);
        res.valid = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(static_cast<Eigen::Index>(T), N + 1, false);
        res.spread = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(T), std::numeric_limits<double>::quiet_NaN());

        // Jumps are steps of the element delay well above any smooth change within one sample
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> jump =
            Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(static_cast<Eigen::Index>(T), N, false);
        for (std::size_t i = 0; i + 1 < T; ++i)
        {
            bool any = false;
            for (Eigen::Index n = 0; n < N; ++n)
                if (std::abs(theta(static_cast<Eigen::Index>(i + 1), n) - theta(static_cast<Eigen::Index>(i), n)) > 0.5 / f_c)
                {
                    jump(static_cast<Eigen::Index>(i), n) = true;
                    any = true;
                }
            if (any)
                res.jumps.push_back(i);
        }

        for (std::size_t i = 1; i + 1 < T; ++i)
        {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (Eigen::Index n = 0; n <= N; ++n)
            {
                if (n == N && !scene.has_direct)
                    continue;
                if (n < N && (jump(static_cast<Eigen::Index>(i - 1), n) || jump(static_cast<Eigen::Index>(i), n)))
                    continue;
                double d = -f_c * (total(static_cast<Eigen::Index>(i + 1), n) - total(static_cast<Eigen::Index>(i - 1), n)) / (2.0 * traj.dt);
                res.shift(static_cast<Eigen::Index>(i), n) = d;
                res.valid(static_cast<Eigen::Index>(i), n) = true;
                lo = std::min(lo, d);
                hi = std::max(hi, d);
                if (std::abs(d) * traj.dt > 0.1)
                    res.coarse_step = true;
            }
            if (hi >= lo)
            {
                res.spread[Eigen::Index(i)] = hi - lo;
                res.max_spread = std::max(res.max_spread, hi - lo);
            }
        }
        return res;
    }

    double phase_alignment_residual(const Trajectory &traj, const TrackingResult &tracking,
                                    const MobilityScene &scene)
    {
        if (tracking.configs.size() != traj.size())
            throw std::invalid_argument("Tracking result does not match the trajectory.");
        const double f_c = scene.f_c;
        const Eigen::VectorXd ta = scene.incoming_delays();
        double worst = 0.0;
        for (std::size_t i = 0; i < traj.size(); ++i)
        {
            Eigen::VectorXd tb = scene.outgoing_delays(traj.rx[i]);
            double ref = tracking.with_direct ? scene.direct_delay(traj.rx[i]) : 0.0;
            const auto &d = tracking.configs[i].delay;
            for (Eigen::Index n = 0; n < ta.size(); ++n)
            {
                double cycles = f_c * (d[n] + ta[n] + tb[n] - ref);
                worst = std::max(worst, std::abs(cycles - double(tracking.cycles[i][std::size_t(n)])));
            }
        }
        return worst;
    }
}
