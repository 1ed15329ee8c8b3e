// SPDX-License-Identifier: Apache-2.0

#include "ris/locsense.hpp"

#include <limits>

namespace ris::loc
{
    namespace
    {
        constexpr double inf = std::numeric_limits<double>::infinity();

        // Relative level below which analytically vanishing sums are treated as rounding residue
        constexpr double residue = 1e-12;

        // Normalized information threshold for declaring a parameter unobservable
        constexpr double unobservable = 1e-10;

        Eigen::VectorXcd delay_vec(double tau, const Eigen::VectorXd &nu, double df)
        {
            Eigen::VectorXcd d(nu.size());
            for (Eigen::Index k = 0; k < nu.size(); ++k)
                d[k] = std::polar(1.0, -2.0 * pi * nu[k] * df * tau);
            return d;
        }

        void check_inputs(const Scenario &scn, const ChannelParams &prm, const std::vector<CodedSchedule> &sch,
                          const Eigen::VectorXcd &pilot, const RadioParams &radio)
        {
            radio.validate();
            if (std::size_t(pilot.size()) != radio.K)
                throw std::invalid_argument("Pilot length must equal K.");
            if (prm.n_paths() == 0 || prm.gain.size() != prm.n_paths())
                throw std::invalid_argument("At least the LOS path is required.");
            if (prm.n_ris() != scn.ris.size() || sch.size() != scn.ris.size())
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

        // Gradient columns with the code factor of each RIS left out; the RIS columns of RIS r are nonzero only
        // in part r + 1
        std::vector<Eigen::MatrixXcd> gradient_parts(const Scenario &scn, const ChannelParams &prm,
                                                     const std::vector<CodedSchedule> &sch, std::size_t group,
                                                     const Eigen::VectorXcd &pilot, const RadioParams &radio,
                                                     const ParamLayout &lay)
        {
            const Eigen::Index K = pilot.size();
            const Eigen::Index P = Eigen::Index(lay.size());
            const Eigen::VectorXd nu = subcarrier_offsets(radio.K);
            const double df = radio.delta_f();
            Eigen::VectorXcd jw(K);
            for (Eigen::Index k = 0; k < K; ++k)
                jw[k] = cplx(0.0, -2.0 * pi * nu[k] * df);

            std::vector<Eigen::MatrixXcd> parts(prm.n_ris() + 1, Eigen::MatrixXcd::Zero(K, P));
            Eigen::MatrixXcd &A = parts[0];
            for (std::size_t l = 0; l < prm.n_paths(); ++l)
            {
                Eigen::VectorXcd ex = delay_vec(prm.tau[l], nu, df).cwiseProduct(pilot);
                A.col(static_cast<Eigen::Index>(lay.tau(l))) = prm.gain[l] * jw.cwiseProduct(ex);
                if (lay.with_gains)
                {
                    A.col(static_cast<Eigen::Index>(lay.gain_re(l))) = ex;
                    A.col(static_cast<Eigen::Index>(lay.gain_im(l))) = I * ex;
                }
            }
            for (std::size_t r = 0; r < prm.n_ris(); ++r)
            {
                const auto &rp = prm.ris[r];
                const auto &w = sch[r].configs[group];
                cplx s = ris_cascade(scn.ris[r], rp.aoa, rp.aod).cwiseProduct(w).sum();
                cplx sd = ris_cascade_d_aod(scn.ris[r], rp.aoa, rp.aod).cwiseProduct(w).sum();
                Eigen::VectorXcd ex = delay_vec(rp.tau, nu, df).cwiseProduct(pilot);
                Eigen::MatrixXcd &C = parts[r + 1];
                C.col(static_cast<Eigen::Index>(lay.tau_ris(r))) = rp.gain * s * jw.cwiseProduct(ex);
                C.col(static_cast<Eigen::Index>(lay.aod(r))) = rp.gain * sd * ex;
                if (lay.with_gains)
                {
                    C.col(static_cast<Eigen::Index>(lay.ris_gain_re(r))) = s * ex;
                    C.col(static_cast<Eigen::Index>(lay.ris_gain_im(r))) = I * s * ex;
                }
            }
            return parts;
        }

        // Eliminates all parameters outside "keep" from a symmetric information matrix. Works on the
        // diagonally normalized matrix; returns the normalized result and the scaling of the kept block.
        struct Elimination
        {
            Eigen::MatrixXd normalized;
            Eigen::VectorXd scale;   // J_keep = diag(scale) normalized diag(scale)
            bool pinv = false;
        };

        Elimination eliminate(const Eigen::MatrixXd &J, const std::vector<Eigen::Index> &keep)
        {
            const Eigen::Index P = J.rows();
            std::vector<char> kept(std::size_t(P), 0);
            for (auto k : keep)
                kept[std::size_t(k)] = 1;
            std::vector<Eigen::Index> other;
            for (Eigen::Index i = 0; i < P; ++i)
                if (!kept[std::size_t(i)])
                    other.push_back(i);

            Eigen::VectorXd d(P);
            for (Eigen::Index i = 0; i < P; ++i)
                d[i] = J(i, i) > 0.0 ? std::sqrt(J(i, i)) : 1.0;
            Eigen::MatrixXd Jn = d.cwiseInverse().asDiagonal() * J * d.cwiseInverse().asDiagonal();

            const Eigen::Index nk = Eigen::Index(keep.size()), no = Eigen::Index(other.size());
            Eigen::MatrixXd A(nk, nk), Bm(nk, no), C(no, no);
            for (Eigen::Index i = 0; i < nk; ++i)
            {
                for (Eigen::Index j = 0; j < nk; ++j)
                    A(i, j) = Jn(keep[std::size_t(i)], keep[std::size_t(j)]);
                for (Eigen::Index j = 0; j < no; ++j)
                    Bm(i, j) = Jn(keep[std::size_t(i)], other[std::size_t(j)]);
            }
            for (Eigen::Index i = 0; i < no; ++i)
                for (Eigen::Index j = 0; j < no; ++j)
                    C(i, j) = Jn(other[std::size_t(i)], other[std::size_t(j)]);

            Elimination out;
            out.scale.resize(nk);
            for (Eigen::Index i = 0; i < nk; ++i)
                out.scale[i] = d[keep[std::size_t(i)]];
            if (no == 0)
            {
                out.normalized = A;
                return out;
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
            const Eigen::VectorXd &ev = es.eigenvalues();
            const double lmax = std::max(ev.maxCoeff(), 0.0);
            const double thr = lmax * 1e-12;
            Eigen::VectorXd inv(no);
            for (Eigen::Index i = 0; i < no; ++i)
            {
                if (ev[i] > thr && ev[i] > 0.0)
                    inv[i] = 1.0 / ev[i];
                else
                {
                    inv[i] = 0.0;
                    out.pinv = true;
                }
            }
            Eigen::MatrixXd BV = Bm * es.eigenvectors();
            out.normalized = A - BV * inv.asDiagonal() * BV.transpose();
            out.normalized = 0.5 * (out.normalized + out.normalized.transpose());
            return out;
        }
    }

    std::vector<std::string> ParamLayout::names() const
    {
        std::vector<std::string> n(size());
        n[tau(0)] = "tau_los";
        for (std::size_t r = 0; r < n_ris; ++r)
        {
            n[tau_ris(r)] = "tau_ris" + std::to_string(r);
            n[aod(r)] = "aod" + std::to_string(r);
        }
        for (std::size_t l = 1; l < n_paths; ++l)
            n[tau(l)] = "tau_sp" + std::to_string(l);
        if (with_gains)
        {
            for (std::size_t l = 0; l < n_paths; ++l)
            {
                n[gain_re(l)] = "re_g" + std::to_string(l);
                n[gain_im(l)] = "im_g" + std::to_string(l);
            }
            for (std::size_t r = 0; r < n_ris; ++r)
            {
                n[ris_gain_re(r)] = "re_g_ris" + std::to_string(r);
                n[ris_gain_im(r)] = "im_g_ris" + std::to_string(r);
            }
        }
        return n;
    }

    Eigen::MatrixXcd observation_gradient(const Scenario &scn, const ChannelParams &prm,
                                          const std::vector<CodedSchedule> &schedules, std::size_t group,
                                          std::size_t block, const Eigen::VectorXcd &pilot, const RadioParams &radio)
    {
        check_inputs(scn, prm, schedules, pilot, radio);
        if (schedules.empty() || group >= schedules[0].n_groups() || block >= schedules[0].lengths[group])
            throw std::invalid_argument("Block index out of range.");
        ParamLayout lay{prm.n_paths(), prm.n_ris(), true};
        auto parts = gradient_parts(scn, prm, schedules, group, pilot, radio, lay);
        Eigen::MatrixXcd G = parts[0];
        for (std::size_t r = 0; r < prm.n_ris(); ++r)
            G += schedules[r].codes[group][Eigen::Index(block)] * parts[r + 1];
        return G;
    }

    Eigen::VectorXcd observation_mean(const Scenario &scn, const ChannelParams &prm,
                                      const std::vector<CodedSchedule> &schedules, std::size_t group,
                                      std::size_t block, const Eigen::VectorXcd &pilot, const RadioParams &radio)
    {
        check_inputs(scn, prm, schedules, pilot, radio);
        if (schedules.empty() || group >= schedules[0].n_groups() || block >= schedules[0].lengths[group])
            throw std::invalid_argument("Block index out of range.");
        Eigen::VectorXcd mu = uncontrollable_response(prm, pilot, radio);
        for (std::size_t r = 0; r < prm.n_ris(); ++r)
            mu += schedules[r].codes[group][Eigen::Index(block)] *
                  ris_response(prm, r, scn.ris[r], schedules[r].configs[group], pilot, radio);
        return mu;
    }

    FimBundle fim_channel(const Scenario &scn, const ChannelParams &prm, const std::vector<CodedSchedule> &schedules,
                          const Eigen::VectorXcd &pilot, const RadioParams &radio)
    {
        check_inputs(scn, prm, schedules, pilot, radio);
        if (schedules.empty())
            throw std::invalid_argument("At least one RIS schedule is required.");
        FimBundle out;
        out.layout = ParamLayout{prm.n_paths(), prm.n_ris(), true};
        const Eigen::Index P = Eigen::Index(out.layout.size());
        if (std::size_t(P) > 2 * radio.K * schedules[0].n_blocks())
            throw std::invalid_argument("More parameters than real observations.");

        // Summing G_t^H G_t over the blocks of a group only needs the code moments
        Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(P, P);
        const std::size_t R = prm.n_ris();
        for (std::size_t i = 0; i < schedules[0].n_groups(); ++i)
        {
            auto parts = gradient_parts(scn, prm, schedules, i, pilot, radio, out.layout);
            const Eigen::Index L = Eigen::Index(schedules[0].lengths[i]);
            // Code of part 0 is the all-ones sequence
            auto code = [&](std::size_t q) -> Eigen::VectorXcd
            {
                return q == 0 ? Eigen::VectorXcd::Ones(L) : schedules[q - 1].codes[i];
            };
            for (std::size_t q = 0; q <= R; ++q)
                for (std::size_t q2 = 0; q2 <= R; ++q2)
                {
                    cplx m = code(q).conjugate().cwiseProduct(code(q2)).sum();
                    if (m == 0.0)
                        continue;
                    S += m * (parts[q].adjoint() * parts[q2]);
                }
        }
        out.J_channel = (2.0 / radio.N0) * S.real();
        out.J_channel = 0.5 * (out.J_channel + out.J_channel.transpose());
        out.b_eff_sq = effective_bandwidth_sq(pilot, radio);
        return out;
    }

    ClosedFormFim fim_closed_form(const Scenario &scn, const ChannelParams &prm, const CodedSchedule &schedule,
                                  const Eigen::VectorXcd &pilot, const RadioParams &radio)
    {
        if (prm.n_paths() != 1 || !scn.p_sp.empty())
            throw std::invalid_argument("Closed-form FIM requires a LOS-only uncontrollable channel.");
        if (prm.n_ris() != 1 || scn.ris.size() != 1)
            throw std::invalid_argument("Closed-form FIM requires exactly one RIS.");
        check_inputs(scn, prm, {schedule}, pilot, radio);
        const double x2 = std::norm(pilot[0]);
        for (Eigen::Index k = 0; k < pilot.size(); ++k)
            if (std::abs(std::norm(pilot[k]) - x2) > 1e-12 * x2)
                throw std::invalid_argument("Closed-form FIM requires a constant-modulus pilot.");

        const auto &rp = prm.ris[0];
        const auto &ris = scn.ris[0];
        BeamMoments m = beam_moments(ris_cascade(ris, rp.aoa, rp.aod), ris_cascade_d_aod(ris, rp.aoa, rp.aod),
                                     schedule.configs, schedule.lengths);
        return closed_form_entries(m, std::norm(prm.gain[0]), std::norm(rp.gain), double(schedule.n_blocks()),
                                   effective_bandwidth_sq(pilot, radio), pilot.squaredNorm(), radio.N0);
    }

    BeamMoments beam_moments(const Eigen::VectorXcd &b, const Eigen::VectorXcd &bd,
                             const std::vector<Eigen::VectorXcd> &configs, const std::vector<std::size_t> &lengths)
    {
        if (configs.size() != lengths.size())
            throw std::invalid_argument("One length per configuration is required.");
        BeamMoments m;
        const double nb = b.squaredNorm(), nbd = bd.squaredNorm();
        for (std::size_t i = 0; i < configs.size(); ++i)
        {
            const auto &w = configs[i];
            if (w.size() != b.size())
                throw std::invalid_argument("Configuration length does not match the RIS.");
            const double L = double(lengths[i]);
            cplx a = b.cwiseProduct(w).sum();
            cplx e = bd.cwiseProduct(w).sum();
            m.aa += L * std::norm(a);
            m.ee += L * std::norm(e);
            m.ae += L * a * std::conj(e);
            const double nw = w.squaredNorm();
            m.bound_a += L * nb * nw;
            m.bound_e += L * nbd * nw;
        }
        return m;
    }

    ClosedFormFim closed_form_entries(const BeamMoments &m, double gain_los_sq, double gain_ris_sq, double T,
                                      double b_eff_sq, double pilot_energy, double N0)
    {
        ClosedFormFim out;
        out.tau_los = 2.0 * gain_los_sq * T * b_eff_sq / N0;
        if (m.aa <= residue * m.bound_a)
            return out;
        out.tau_ris = 2.0 * gain_ris_sq * m.aa * b_eff_sq / N0;
        double q = m.ee - std::norm(m.ae) / m.aa;
        if (q <= residue * m.bound_e)
            q = 0.0;
        out.aod = 2.0 * gain_ris_sq * pilot_energy * q / N0;
        return out;
    }

    FimBundle fim_reduced_los(const Scenario &scn, const ChannelParams &prm,
                              const std::vector<CodedSchedule> &schedules, const Eigen::VectorXcd &pilot,
                              const RadioParams &radio)
    {
        if (prm.n_paths() != 1 || !scn.p_sp.empty())
            throw std::invalid_argument("Reduced FIM requires a LOS-only uncontrollable channel.");
        check_inputs(scn, prm, schedules, pilot, radio);
        const std::size_t R = prm.n_ris();
        for (std::size_t i = 0; R > 0 && i < schedules[0].n_groups(); ++i)
            for (std::size_t r = 0; r < R; ++r)
                for (std::size_t r2 = r + 1; r2 < R; ++r2)
                    if (std::abs(schedules[r].codes[i].dot(schedules[r2].codes[i])) >
                        1e-9 * double(schedules[0].lengths[i]))
                        throw std::invalid_argument("Codes of different RIS must be orthogonal.");

        FimBundle out;
        out.layout = ParamLayout{1, R, false};
        out.J_channel = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.layout.size()), Eigen::Index(out.layout.size()));
        out.b_eff_sq = effective_bandwidth_sq(pilot, radio);
        if (R == 0)
            throw std::invalid_argument("Reduced FIM needs at least one RIS.");
        for (std::size_t r = 0; r < R; ++r)
        {
            Scenario one = scn;
            one.ris = {scn.ris[r]};
            ChannelParams p1 = prm;
            p1.ris = {prm.ris[r]};
            ClosedFormFim e = fim_closed_form(one, p1, schedules[r], pilot, radio);
            out.J_channel(0, 0) = e.tau_los;
            out.J_channel(static_cast<Eigen::Index>(out.layout.tau_ris(r)), Eigen::Index(out.layout.tau_ris(r))) = e.tau_ris;
            out.J_channel(static_cast<Eigen::Index>(out.layout.aod(r)), Eigen::Index(out.layout.aod(r))) = e.aod;
        }
        return out;
    }

    double effective_information(const FimBundle &bundle, std::size_t index)
    {
        const Eigen::Index P = bundle.J_channel.rows();
        if (static_cast<Eigen::Index>(index) >= P)
            throw std::invalid_argument("Parameter index out of range.");
        if (!(bundle.J_channel(static_cast<Eigen::Index>(index), Eigen::Index(index)) > 0.0))
            return 0.0;
        Elimination e = eliminate(bundle.J_channel, {Eigen::Index(index)});
        double v = e.normalized(0, 0);
        if (v <= unobservable)
            return 0.0;
        return v * e.scale[0] * e.scale[0];
    }

    void position_fim(FimBundle &bundle, const Scenario &scn, const ChannelParams &prm)
    {
        const ParamLayout &lay = bundle.layout;
        if (bundle.J_channel.rows() != Eigen::Index(lay.size()) || bundle.J_channel.cols() != bundle.J_channel.rows())
            throw std::invalid_argument("Channel FIM does not match its layout.");
        if (lay.n_paths != prm.n_paths() || lay.n_ris != prm.n_ris() || lay.n_ris != scn.ris.size())
            throw std::invalid_argument("Channel FIM layout does not match the scenario.");
        const double c = speed_of_light;
        const Eigen::Index P = Eigen::Index(lay.size());
        const Eigen::Index n_nuis = Eigen::Index(lay.n_paths - 1 + (lay.with_gains ? 2 * lay.n_paths + 2 * lay.n_ris : 0));
        Eigen::MatrixXd U = Eigen::MatrixXd::Zero(P, 3 + n_nuis);

        Vec2 d_bs = scn.p - scn.p_bs;
        if (d_bs.norm() > 0.0)
            U.block<1, 2>(0, 0) = d_bs.transpose() / (c * d_bs.norm());
        U(0, 2) = 1.0;
        for (std::size_t r = 0; r < lay.n_ris; ++r)
        {
            const auto &ris = scn.ris[r];
            Vec2 v = scn.p - ris.position;
            const double d = v.norm();
            const Eigen::Index it = Eigen::Index(lay.tau_ris(r)), ia = Eigen::Index(lay.aod(r));
            U.block<1, 2>(it, 0) = v.transpose() / (c * d);
            U(it, 2) = 1.0;
            Vec2 g = (ris.tangent() * v.dot(ris.normal()) - ris.normal() * v.dot(ris.tangent())) / (d * d);
            U.block<1, 2>(ia, 0) = g.transpose();
        }
        Eigen::Index col = 3;
        for (std::size_t l = 1; l < lay.n_paths; ++l)
            U(static_cast<Eigen::Index>(lay.tau(l)), col++) = 1.0;
        if (lay.with_gains)
        {
            for (std::size_t l = 0; l < lay.n_paths; ++l)
            {
                U(static_cast<Eigen::Index>(lay.gain_re(l)), col++) = 1.0;
                U(static_cast<Eigen::Index>(lay.gain_im(l)), col++) = 1.0;
            }
            for (std::size_t r = 0; r < lay.n_ris; ++r)
            {
                U(static_cast<Eigen::Index>(lay.ris_gain_re(r)), col++) = 1.0;
                U(static_cast<Eigen::Index>(lay.ris_gain_im(r)), col++) = 1.0;
            }
        }
        bundle.jacobian = U;

        Eigen::MatrixXd Jt = U.transpose() * bundle.J_channel * U;
        LocationBound lb = location_bound(0.5 * (Jt + Jt.transpose()));
        bundle.J_location = lb.J;
        bundle.nuisance_pinv = lb.nuisance_pinv;
        bundle.identifiable = lb.identifiable;
        bundle.speb = lb.speb;
        bundle.peb = std::sqrt(lb.speb);
    }

    LocationBound location_bound(const Eigen::MatrixXd &J_tilde)
    {
        if (J_tilde.rows() < 2 || J_tilde.rows() != J_tilde.cols())
            throw std::invalid_argument("Transformed FIM must be square with the position first.");
        Elimination e = eliminate(J_tilde, {0, 1});
        LocationBound out;
        out.nuisance_pinv = e.pinv;
        out.J = e.scale.asDiagonal() * e.normalized * e.scale.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Eigen::Matrix2d(e.normalized));
        const double lmin = es.eigenvalues()[0], lmax = es.eigenvalues()[1];
        if (!(lmin > unobservable && lmin > lmax * 1e-12))
            return out;
        out.speb = speb_from_location_fim(out.J);
        out.identifiable = std::isfinite(out.speb);
        return out;
    }

    double speb_from_location_fim(const Eigen::Matrix2d &J)
    {
        Eigen::Matrix2d Js = 0.5 * (J + J.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Js);
        const double lmin = es.eigenvalues()[0], lmax = es.eigenvalues()[1];
        if (!(lmax > 0.0) || lmin <= lmax * 1e-12)
            return inf;
        return 1.0 / lmin + 1.0 / lmax;
    }

    Eigen::Matrix2d location_fim_los(const Scenario &scn, const ClosedFormFim &entries)
    {
        if (scn.ris.size() != 1)
            throw std::invalid_argument("Closed-form location FIM requires exactly one RIS.");
        const double c = speed_of_light;
        const auto &ris = scn.ris[0];
        Vec2 u_bs = (scn.p - scn.p_bs).normalized();
        Vec2 v = scn.p - ris.position;
        const double d = v.norm();
        Vec2 u_ris = v / d;
        Vec2 xi(-u_ris.y(), u_ris.x());
        Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
        const double Jd = entries.tau_los, Jr = entries.tau_ris;
        if (Jd + Jr > 0.0)
        {
            Vec2 du = u_bs - u_ris;
            J += (Jd * Jr / (Jd + Jr)) / (c * c) * du * du.transpose();
        }
        J += entries.aod / (d * d) * xi * xi.transpose();
        return J;
    }
}
