// SPDX-License-Identifier: Apache-2.0

#ifndef RIS_WIDEBAND_MODEL_HPP
#define RIS_WIDEBAND_MODEL_HPP

#include "ris/channel.hpp"

namespace ris
{
    // Clustered multipath with an exponential power-delay profile.
    // Cluster excess delays are exponential with mean rms_delay_spread, truncated at truncation * rms_delay_spread.
    struct ClusterSpec
    {
        std::size_t count = 0;
        double rms_delay_spread = 0.0; // [s]
        double truncation = 4.0;
        double elevation_spread = pi / 6.0; // Cluster elevations uniform in +/- this value [rad]
    };

    // One leg between the RIS and a terminal.
    // With LOS, the geometric path carries K/(1+K) of the aperture power and the clusters the rest.
    // Without LOS, the clusters carry the aperture power reduced by excess_loss_db.
    struct LegSpec
    {
        bool los = true;
        double k_factor_db = 10.0;
        double excess_loss_db = 0.0;
        ClusterSpec clusters;
    };

    // RIS of n_side x n_side elements in the y-z plane at the origin with its normal along +x.
    // The direct link is NLOS: free-space power reduced by direct_excess_loss_db, spread over clusters.
    struct WidebandScenario
    {
        double f_c = 3.0e9;
        std::size_t n_side = 20;
        double spacing_wl = 0.25;
        Eigen::Vector3d tx = Eigen::Vector3d(400.0 * std::cos(40.0 * pi / 180.0), -400.0 * std::sin(40.0 * pi / 180.0), 15.0);
        Eigen::Vector3d rx = Eigen::Vector3d(10.0, 6.0, -1.0);
        LegSpec tx_ris;
        LegSpec ris_rx;
        ClusterSpec direct;
        double direct_excess_loss_db = 31.0;

        ArrayGeometry geometry() const { return ArrayGeometry::upa(n_side, n_side, spacing_wl); }
        void validate() const;
    };

    // Draws one channel realization; the random cluster phases enter as sub-cycle delay offsets
    PathSet generate_clustered_paths(const WidebandScenario &scn, std::uint64_t seed);

    struct WidebandRates
    {
        double stm = 0.0;     // STM configuration with waterfilling [bit/s]
        double bound = 0.0;   // Per-subcarrier coherent upper bound with waterfilling [bit/s]
        double no_ris = 0.0;  // RIS switched off [bit/s]
        std::size_t K = 0;
        std::size_t M = 0;
    };

    // Rates of one realization at bandwidth B with K = round(B / spacing) subcarriers, the sampling delay at the
    // earliest path and the smallest tap count for the given guard. P/(B N0) is held at snr_db.
    WidebandRates evaluate_wideband(const PathSet &paths, double f_c, double B, double snr_db = 135.0,
                                    double spacing = 150e3, std::size_t guard = 1);
}

#endif
