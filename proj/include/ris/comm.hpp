// SPDX-License-Identifier: Apache-2.0

#ifndef RIS_COMM_HPP
#define RIS_COMM_HPP

#include "ris/channel.hpp"

#include <vector>

namespace ris
{
    // Set of phases an element can apply. An empty value list with continuous = true means any phase.
    struct PhaseAlphabet
    {
        std::vector<double> values; // Allowed phases in [0, 2pi)
        bool continuous = false;

        static PhaseAlphabet any_phase();
        static PhaseAlphabet four_phase(); // {pi/2, 0, -pi/2, pi} wrapped to [0, 2pi)
        static PhaseAlphabet uniform(std::size_t n_levels);
        void validate() const;
        double nearest(double phase) const; // Member with minimal angular distance
    };

    struct RateResult
    {
        double rate = 0.0;              // [bit/s]
        Eigen::VectorXd snr;            // Per-subcarrier SNR including power allocation
        Eigen::VectorXd power;          // Per-subcarrier power [W], mean equals P
        double water_level = 0.0;       // Water level of the power allocation
        RisConfig config;
    };

    struct NarrowbandResult
    {
        double snr = 0.0;               // P |h|^2 / (B N0)
        double capacity = 0.0;          // [bit/s]
        cplx coefficient = 0.0;         // Resulting narrowband channel coefficient
        RisConfig config;
        std::vector<long long> carrier_cycles; // Integers k_n of the minimum-delay solution
        double delay_spread = 0.0;      // Spread of the arrival times of all paths [s]
    };

    struct WaterfillingResult
    {
        Eigen::VectorXd power;
        double water_level = 0.0;
    };

    // B log2(1 + snr)
    double awgn_capacity(double snr, double B);

    // Phase alignment of a narrowband channel. With a continuous alphabet the configuration uses the
    // minimum-delay solution and the coherent-sum SNR is reached; otherwise each element takes the alphabet
    // member closest to its aligning phase.
    NarrowbandResult optimize_narrowband(const PathSet &paths, const PhaseAlphabet &alphabet,
                                         const RadioParams &radio, double gamma = 1.0);

    // Closed-form SNR (P/(B N0)) (sqrt(rho) + sum_n sqrt(alpha_n beta_n gamma))^2
    double coherent_snr(const PathSet &paths, const RadioParams &radio, double gamma = 1.0);

    // P_nu = max(mu - w_nu, 0) with mean P; infinite weights receive zero power
    WaterfillingResult waterfilling(const Eigen::VectorXd &inv_snr_weights, double P);

    // Per-subcarrier channel gains |F (h_d + V^T omega)|^2
    Eigen::VectorXd subcarrier_gains(const TapVector &h_d, const TapMatrix &V, const Eigen::VectorXcd &omega,
                                     std::size_t K);

    // B/(K+M-1) sum log2(1 + P_nu gain_nu / (B N0))
    double rate_from_gains(const Eigen::VectorXd &gains, const Eigen::VectorXd &power, const RadioParams &radio,
                           std::size_t n_taps);

    double wideband_rate(const TapVector &h_d, const TapMatrix &V, const RisConfig &config,
                         const RadioParams &radio, const Eigen::VectorXd &power);

    // Wideband rate with waterfilling over the resulting channel
    RateResult wideband_rate_waterfilled(const TapVector &h_d, const TapMatrix &V, const RisConfig &config,
                                         const RadioParams &radio);

    // Strongest tap maximization; the lowest tap index wins ties
    RisConfig stm_configure(const TapVector &h_d, const TapMatrix &V);
    std::size_t stm_tap(const TapVector &h_d, const TapMatrix &V);

    // Per-subcarrier coherent gains (|f^H h_d| + ||f^H V^T||_1)^2
    Eigen::VectorXd upper_bound_gains(const TapVector &h_d, const TapMatrix &V, std::size_t K);

    double rate_upper_bound(const TapVector &h_d, const TapMatrix &V, const RadioParams &radio,
                            const Eigen::VectorXd &power);

    // Upper bound with waterfilling over the coherent gains
    RateResult rate_upper_bound_waterfilled(const TapVector &h_d, const TapMatrix &V, const RadioParams &radio);
}

#endif
