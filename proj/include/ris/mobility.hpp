// SPDX-License-Identifier: Apache-2.0

#ifndef RIS_MOBILITY_HPP
#define RIS_MOBILITY_HPP

#include "ris/channel.hpp"

#include <vector>

namespace ris
{
    // Receiver positions sampled at t0 + i dt
    struct Trajectory
    {
        double t0 = 0.0;
        double dt = 1e-4;                  // [s]
        std::vector<Eigen::Vector3d> rx;   // [m]

        std::size_t size() const { return rx.size(); }
        double time(std::size_t i) const { return t0 + double(i) * dt; }
        void validate() const;

        // Constant-velocity motion
        static Trajectory linear(const Eigen::Vector3d &start, const Eigen::Vector3d &velocity, double dt,
                                 std::size_t n_samples, double t0 = 0.0);
    };

    // Static part of a single-bounce link: transmitter, RIS placement and optional direct path.
    // Losses follow free-space spreading per leg.
    struct MobilityScene
    {
        Eigen::Vector3d tx = Eigen::Vector3d::Zero();
        Eigen::Vector3d ris_center = Eigen::Vector3d::Zero();
        Eigen::Matrix3d ris_rotation = Eigen::Matrix3d::Identity(); // Local to global, column 0 is the normal
        ArrayGeometry geometry;
        double f_c = 3.0e9;
        bool has_direct = true;

        Eigen::Matrix3Xd element_positions() const; // Global element positions [m]
        Eigen::VectorXd incoming_delays() const;     // tau_{n,a}
        Eigen::VectorXd outgoing_delays(const Eigen::Vector3d &rx) const; // tau_{n,b}
        double direct_delay(const Eigen::Vector3d &rx) const;
        bool in_front(const Eigen::Vector3d &p) const;

        // Narrowband path set for a frozen receiver position
        PathSet paths_at(const Eigen::Vector3d &rx) const;
    };

    struct TrackingResult
    {
        std::vector<RisConfig> configs;                // One per time sample, delays populated
        std::vector<std::vector<long long>> cycles;    // Integer carrier-cycle counts k_n(t)
        bool with_direct = true;
    };

    // Time-varying configuration that keeps every RIS path phase-aligned. With a direct path each element
    // uses the smallest non-negative delay aligned to the direct path; otherwise all elements share the
    // common count max_i ceil(f_c (tau_ia + tau_ib(t))).
    TrackingResult tracking_config(const Trajectory &traj, const MobilityScene &scene, bool with_direct);

    // Static configuration repeated over the trajectory
    std::vector<RisConfig> frozen_config(const RisConfig &config, std::size_t n_samples);

    struct DopplerResult
    {
        Eigen::MatrixXd shift;          // [n_samples, N + 1] Doppler shift [Hz]; last column is the direct path
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> valid; // Same size; false at the ends and at jump instants
        Eigen::VectorXd spread;         // max - min over valid paths per sample; NaN if no sample is valid
        std::vector<std::size_t> jumps; // Sample indices i where some element delay jumps between i and i+1
        double max_spread = 0.0;
        bool coarse_step = false;       // Set when |D| dt > 0.1 for some valid sample
    };

    // D_n(t) = -f_c d(tau_theta_n(t) + tau_nb(t))/dt by central differences, excluding one sample on
    // either side of each configuration delay jump
    DopplerResult doppler_metrics(const Trajectory &traj, const std::vector<RisConfig> &configs,
                                  const MobilityScene &scene);

    // Largest |f_c (tau_theta_n + tau_na + tau_nb - tau_d) - k_n| over all samples and elements [cycles]
    double phase_alignment_residual(const Trajectory &traj, const TrackingResult &tracking,
                                    const MobilityScene &scene);
}

#endif
