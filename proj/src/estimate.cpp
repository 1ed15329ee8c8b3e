// SPDX-License-Identifier: Apache-2.0

#include "ris/estimate.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace ris
{
    namespace
    {
        double condition_number(const Eigen::MatrixXcd &A)
        {
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
            const auto &s = svd.singularValues();
            if (s.size() == 0 || s[s.size() - 1] == 0.0)
                return std::numeric_limits<double>::infinity();
            return s[0] / s[s.size() - 1];
        }
    }

    Eigen::MatrixXcd PilotPlan::pilot_dft() const
    {
        const std::size_t M = n_taps();
        Eigen::MatrixXcd F(static_cast<Eigen::Index>(M), Eigen::Index(M));
        for (std::size_t r = 0; r < M; ++r)
            for (std::size_t k = 0; k < M; ++k)
            {
                std::size_t idx = (k * subcarriers[r]) % K;
                F(static_cast<Eigen::Index>(r), Eigen::Index(k)) = std::polar(1.0, -2.0 * pi * double(idx) / double(K));
            }
        return F;
    }

    void PilotPlan::validate() const
    {
        if (subcarriers.empty())
            throw std::invalid_argument("Pilot plan needs at least one pilot subcarrier.");
        if (subcarriers.size() > K)
            throw std::invalid_argument("More pilot subcarriers than subcarriers.");
        std::set<std::size_t> seen;
        for (std::size_t s : subcarriers)
        {
            if (s >= K)
                throw std::invalid_argument("Pilot subcarrier index out of range.");
            if (!seen.insert(s).second)
                throw std::invalid_argument("Pilot subcarrier indices must be distinct.");
        }
        if (configs.rows() == 0 || configs.rows() != configs.cols())
            throw std::invalid_argument("Configuration matrix must be square and non-empty.");
        if (!(std::abs(x) > 0.0))
            throw std::invalid_argument("Pilot symbol must be non-zero.");
        if (condition_number(configs) >= 1e10)
            throw std::invalid_argument("Configuration matrix is singular or ill-conditioned.");
        if (condition_number(pilot_dft()) >= 1e10)
            throw std::invalid_argument("Pilot DFT matrix is singular or ill-conditioned.");
    }

    Eigen::MatrixXcd build_config_matrix(std::size_t N)
    {
        if (N == 0)
            throw std::invalid_argument("Configuration matrix needs N >= 1.");
        Eigen::MatrixXcd W(static_cast<Eigen::Index>(N), Eigen::Index(N));
        for (std::size_t r = 0; r < N; ++r)
            for (std::size_t c = 0; c < N; ++c)
            {
                std::size_t idx = (r * c) % N;
                W(static_cast<Eigen::Index>(r), Eigen::Index(c)) = std::polar(1.0, -2.0 * pi * double(idx) / double(N));
            }
        // Exact values on the real and imaginary axes
        for (Eigen::Index i = 0; i < W.size(); ++i)
        {
            cplx &w = W.data()[i];
            if (std::abs(w.imag()) < 1e-15)
                w = {std::round(w.real()), 0.0};
            else if (std::abs(w.real()) < 1e-15)
                w = {0.0, std::round(w.imag())};
        }
        return W;
    }

    PilotPlan make_pilot_plan(std::size_t N, std::size_t M, std::size_t K, double P, double B,
                              PilotSubcarriers selection)
    {
        if (M == 0 || M > K)
            throw std::invalid_argument("Pilot count must be in [1, K].");
        if (!(P > 0.0) || !(B > 0.0))
            throw std::invalid_argument("Power and bandwidth must be positive.");
        PilotPlan plan;
        plan.K = K;
        plan.x = std::sqrt(P / B);
        plan.configs = build_config_matrix(N);
        if (selection == PilotSubcarriers::equispaced && K % M != 0)
            throw std::invalid_argument("Equispaced pilots require M to divide K.");
        for (std::size_t j = 0; j < M; ++j)
            plan.subcarriers.push_back(selection == PilotSubcarriers::first ? j : j * (K / M));
        return plan;
    }

    Eigen::MatrixXcd ls_estimate(const Eigen::MatrixXcd &Z, const PilotPlan &plan)
    {
        plan.validate();
        const Eigen::Index M = Eigen::Index(plan.n_taps()), N = plan.configs.rows();
        if (Z.rows() != M || Z.cols() != N)
            throw std::invalid_argument("Pilot matrix must have size [M, N].");
        Eigen::MatrixXcd Vt = plan.pilot_dft().fullPivLu().solve(Z) / plan.x; // F_M^-1 Z / x
        // (Vt Omega^-1)^T = Omega^-T Vt^T
        return plan.configs.transpose().fullPivLu().solve(Vt.transpose());
    }

    double ls_mse_total(const PilotPlan &plan, double N0)
    {
        plan.validate();
        Eigen::MatrixXcd F = plan.pilot_dft();
        double tf = (F.adjoint() * F).inverse().trace().real();
        double tw = (plan.configs.adjoint() * plan.configs).inverse().trace().real();
        return N0 * tf * tw / std::norm(plan.x);
    }

    double ls_mse_per_entry(const PilotPlan &plan, double N0)
    {
        return ls_mse_total(plan, N0) / double(plan.n_taps() * plan.n_elements());
    }

    Eigen::MatrixXcd simulate_pilot_blocks(const TapMatrix &V, const PilotPlan &plan, double N0, Rng &rng)
    {
        const std::size_t M = plan.n_taps(), N = plan.n_elements();
        if (std::size_t(V.rows()) != N || std::size_t(V.cols()) != M)
            throw std::invalid_argument("Tap matrix must have size [N, M].");
        Eigen::VectorXcd xbar = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(plan.K));
        for (std::size_t s : plan.subcarriers)
            xbar[Eigen::Index(s)] = plan.x;

        Eigen::MatrixXcd Z(static_cast<Eigen::Index>(M), Eigen::Index(N));
        for (std::size_t j = 0; j < N; ++j)
        {
            TapVector h = V.transpose() * plan.configs.col(static_cast<Eigen::Index>(j));
            Eigen::VectorXcd z = simulate_ofdm_block(xbar, frequency_response(h, plan.K), N0, rng);
            for (std::size_t r = 0; r < M; ++r)
                Z(static_cast<Eigen::Index>(r), Eigen::Index(j)) = z[Eigen::Index(plan.subcarriers[r])];
        }
        return Z;
    }
}
