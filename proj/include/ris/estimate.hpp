// SPDX-License-Identifier: Apache-2.0

#ifndef RIS_ESTIMATE_HPP
#define RIS_ESTIMATE_HPP

#include "ris/channel.hpp"

#include <vector>

namespace ris
{
    enum class PilotSubcarriers
    {
        first,      // Subcarriers 0 ... M-1
        equispaced  // Subcarriers j*K/M; requires M to divide K
    };

    // Pilot transmission plan for estimating the cascade tap matrix
    struct PilotPlan
    {
        cplx x = 1.0;                          // Pilot symbol on every pilot subcarrier
        std::size_t K = 1;                     // Total subcarrier count
        std::vector<std::size_t> subcarriers;  // M distinct pilot subcarriers
        Eigen::MatrixXcd configs;              // [N, N], column j is the configuration of block j

        std::size_t n_taps() const { return subcarriers.size(); }
        std::size_t n_elements() const { return std::size_t(configs.rows()); }

        Eigen::MatrixXcd pilot_dft() const; // F_M: pilot rows of the K x M DFT matrix
        void validate() const;
    };

    // N x N DFT matrix, Omega^H Omega = N I
    Eigen::MatrixXcd build_config_matrix(std::size_t N);

    // Plan with |x|^2 = P/B, DFT configurations and the chosen subcarrier selection
    PilotPlan make_pilot_plan(std::size_t N, std::size_t M, std::size_t K, double P, double B,
                              PilotSubcarriers selection = PilotSubcarriers::first);

    // V_hat^T = (1/x) F_M^-1 Z Omega^-1 for the [M, N] matrix of received pilots; returns V_hat [N, M]
    Eigen::MatrixXcd ls_estimate(const Eigen::MatrixXcd &Z, const PilotPlan &plan);

    // Expected squared Frobenius error N0 tr((F_M^H F_M)^-1) tr((Omega^H Omega)^-1) / |x|^2
    double ls_mse_total(const PilotPlan &plan, double N0);

    // Expected squared error of a single entry, averaged over all M N entries
    double ls_mse_per_entry(const PilotPlan &plan, double N0);

    // Runs the N pilot blocks through the OFDM observation model and returns the [M, N] pilot matrix
    Eigen::MatrixXcd simulate_pilot_blocks(const TapMatrix &V, const PilotPlan &plan, double N0, Rng &rng);
}

#endif
