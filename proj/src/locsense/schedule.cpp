// SPDX-License-Identifier: Apache-2.0

#include "ris/locsense.hpp"

namespace ris::loc
{
    namespace
    {
        // Column j of the L-point DFT with exact values on the axes
        Eigen::VectorXcd dft_code(std::size_t L, std::size_t j)
        {
            Eigen::VectorXcd c(static_cast<Eigen::Index>(L));
            for (std::size_t t = 0; t < L; ++t)
            {
                std::size_t idx = (j * t) % L;
                cplx v = std::polar(1.0, -2.0 * pi * double(idx) / double(L));
                if (std::abs(v.imag()) < 1e-15)
                    v = {std::round(v.real()), 0.0};
                else if (std::abs(v.real()) < 1e-15)
                    v = {0.0, std::round(v.imag())};
                c[Eigen::Index(t)] = v;
            }
            return c;
        }
    }

    std::size_t CodedSchedule::n_blocks() const
    {
        std::size_t T = 0;
        for (std::size_t L : lengths)
            T += L;
        return T;
    }

    void CodedSchedule::validate() const
    {
        if (configs.empty())
            throw std::invalid_argument("Schedule needs at least one configuration.");
        if (lengths.size() != configs.size() || codes.size() != configs.size())
            throw std::invalid_argument("Schedule configurations, lengths and codes differ in count.");
        const Eigen::Index N = configs[0].size();
        for (std::size_t i = 0; i < configs.size(); ++i)
        {
            if (configs[i].size() != N || N == 0)
                throw std::invalid_argument("Schedule configurations must share a non-zero length.");
            if (lengths[i] < 2)
                throw std::invalid_argument("Every configuration needs at least two blocks for a balanced code.");
            if (std::size_t(codes[i].size()) != lengths[i])
                throw std::invalid_argument("Code length does not match the group length.");
            for (Eigen::Index t = 0; t < codes[i].size(); ++t)
                if (std::abs(std::abs(codes[i][t]) - 1.0) > 1e-12)
                    throw std::invalid_argument("Code entries must have unit modulus.");
            if (std::abs(codes[i].sum()) > 1e-9 * double(lengths[i]))
                throw std::invalid_argument("Codes must be balanced.");
        }
    }

    CodedSchedule coded_schedule(std::size_t Q, std::size_t T, const std::vector<Eigen::VectorXcd> &configs,
                                 std::size_t code_offset)
    {
        if (Q == 0 || T % Q != 0)
            throw std::invalid_argument("Q must divide T.");
        if (T / Q < 2)
            throw std::invalid_argument("Each configuration needs at least two blocks.");
        if (configs.size() != Q)
            throw std::invalid_argument("Exactly Q base configurations are required.");
        const std::size_t L = T / Q;
        if (Q > L - 1)
            throw std::invalid_argument("Not enough distinct balanced codes: Q must not exceed T/Q - 1.");
        CodedSchedule s;
        s.configs = configs;
        s.lengths.assign(Q, L);
        for (std::size_t i = 0; i < Q; ++i)
            s.codes.push_back(dft_code(L, (code_offset + i) % (L - 1) + 1));
        s.validate();
        return s;
    }

    CodedSchedule weighted_schedule(const std::vector<Eigen::VectorXcd> &configs,
                                    const std::vector<std::size_t> &lengths)
    {
        if (configs.size() != lengths.size())
            throw std::invalid_argument("One length per configuration is required.");
        CodedSchedule s;
        s.configs = configs;
        s.lengths = lengths;
        for (std::size_t L : lengths)
            s.codes.push_back(dft_code(L, 1));
        s.validate();
        return s;
    }

    std::vector<Eigen::VectorXcd> random_configs(std::size_t n_configs, std::size_t N, Rng &rng)
    {
        std::uniform_real_distribution<double> phase(0.0, 2.0 * pi);
        std::vector<Eigen::VectorXcd> out;
        out.reserve(n_configs);
        for (std::size_t i = 0; i < n_configs; ++i)
        {
            Eigen::VectorXcd w(static_cast<Eigen::Index>(N));
            for (std::size_t n = 0; n < N; ++n)
                w[Eigen::Index(n)] = std::polar(1.0, phase(rng));
            out.push_back(std::move(w));
        }
        return out;
    }

    namespace
    {
        void check_schedules(const Scenario &scn, const ChannelParams &prm, const std::vector<CodedSchedule> &sch)
        {
            if (sch.size() != scn.ris.size() || prm.n_ris() != scn.ris.size())
                throw std::invalid_argument("One schedule and one RIS path per RIS are required.");
            for (std::size_t r = 0; r < sch.size(); ++r)
            {
                sch[r].validate();
                if (sch[r].lengths != sch[0].lengths)
                    throw std::invalid_argument("All RIS schedules must share the group lengths.");
                if (std::size_t(sch[r].configs[0].size()) != scn.ris[r].size())
                    throw std::invalid_argument("Configuration length does not match the RIS.");
            }
        }
    }

    std::vector<Eigen::MatrixXcd> simulate_blocks(const Scenario &scn, const ChannelParams &prm,
                                                  const std::vector<CodedSchedule> &schedules,
                                                  const Eigen::VectorXcd &pilot, const RadioParams &radio,
                                                  double N0, Rng &rng)
    {
        check_schedules(scn, prm, schedules);
        if (schedules.empty())
            throw std::invalid_argument("At least one RIS schedule is required.");
        if (!(N0 >= 0.0))
            throw std::invalid_argument("Noise level must be non-negative.");
        const Eigen::VectorXcd u = uncontrollable_response(prm, pilot, radio);
        const std::size_t G = schedules[0].n_groups();
        std::vector<Eigen::MatrixXcd> out;
        out.reserve(G);
        for (std::size_t i = 0; i < G; ++i)
        {
            std::vector<Eigen::VectorXcd> ris_terms;
            for (std::size_t r = 0; r < schedules.size(); ++r)
                ris_terms.push_back(ris_response(prm, r, scn.ris[r], schedules[r].configs[i], pilot, radio));
            const std::size_t L = schedules[0].lengths[i];
            Eigen::MatrixXcd Z(u.size(), Eigen::Index(L));
            for (std::size_t t = 0; t < L; ++t)
            {
                Eigen::VectorXcd mu = u;
                for (std::size_t r = 0; r < schedules.size(); ++r)
                    mu += schedules[r].codes[i][Eigen::Index(t)] * ris_terms[r];
                for (Eigen::Index k = 0; k < mu.size(); ++k)
                    Z(k, Eigen::Index(t)) = mu[k] + (N0 > 0.0 ? complex_normal(rng, N0) : cplx(0.0));
            }
            out.push_back(std::move(Z));
        }
        return out;
    }

    SeparatedChannels separate_channels(const std::vector<Eigen::MatrixXcd> &blocks, const CodedSchedule &schedule)
    {
        schedule.validate();
        if (blocks.size() != schedule.n_groups())
            throw std::invalid_argument("One block matrix per configuration is required.");
        const Eigen::Index K = blocks[0].rows();
        SeparatedChannels out;
        out.uncontrollable = Eigen::VectorXcd::Zero(K);
        for (std::size_t i = 0; i < blocks.size(); ++i)
        {
            if (blocks[i].rows() != K || std::size_t(blocks[i].cols()) != schedule.lengths[i])
                throw std::invalid_argument("Block matrix dimensions do not match the schedule.");
            out.uncontrollable += blocks[i].rowwise().sum();
            out.per_config.push_back(blocks[i] * schedule.codes[i].conjugate());
        }
        return out;
    }

    SeparatedChannels simulate_separated(const Scenario &scn, const ChannelParams &prm, std::size_t r,
                                         const CodedSchedule &schedule, const Eigen::VectorXcd &pilot,
                                         const RadioParams &radio, double N0, Rng &rng)
    {
        schedule.validate();
        if (r >= scn.ris.size() || r >= prm.n_ris())
            throw std::invalid_argument("RIS index out of range.");
        if (!(N0 >= 0.0))
            throw std::invalid_argument("Noise level must be non-negative.");
        const double T = double(schedule.n_blocks());
        SeparatedChannels out;
        out.uncontrollable = T * uncontrollable_response(prm, pilot, radio);
        for (Eigen::Index k = 0; k < out.uncontrollable.size(); ++k)
            out.uncontrollable[k] += N0 > 0.0 ? complex_normal(rng, T * N0) : cplx(0.0);
        for (std::size_t i = 0; i < schedule.n_groups(); ++i)
        {
            const double L = double(schedule.lengths[i]);
            Eigen::VectorXcd z = L * ris_response(prm, r, scn.ris[r], schedule.configs[i], pilot, radio);
            for (Eigen::Index k = 0; k < z.size(); ++k)
                z[k] += N0 > 0.0 ? complex_normal(rng, L * N0) : cplx(0.0);
            out.per_config.push_back(std::move(z));
        }
        return out;
    }
}
