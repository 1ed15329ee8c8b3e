// SPDX-License-Identifier: Apache-2.0

#include "ris/cli/experiments.hpp"

#include "ris/comm.hpp"
#include "ris/estimate.hpp"
#include "ris/mobility.hpp"
#include "ris/parallel.hpp"
#include "ris/wideband_model.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace ris::cli
{
    namespace
    {
        constexpr double inf = std::numeric_limits<double>::infinity();

        std::string point_line(const Table &t, const std::vector<Cell> &row)
        {
            std::string s;
            for (std::size_t i = 0; i < row.size(); ++i)
            {
                if (i)
                    s += i == 1 ? ": " : ", ";
                s += t.header[i] + "=";
                if (const double *v = std::get_if<double>(&row[i]))
                    s += format_value(*v);
                else
                    s += std::get<std::string>(row[i]);
            }
            return s;
        }

        void emit(RunSummary &sum, const std::filesystem::path &file, const Table &t, bool points = true)
        {
            write_text(file, to_csv(t));
            sum.files.push_back(file);
            sum.flagged_rows += t.flagged_rows();
            if (points)
                for (const auto &r : t.rows)
                    sum.points.push_back(point_line(t, r));
        }

        void require_axis(const ExperimentConfig &cfg, const std::string &axis)
        {
            if (cfg.sweep.axis != axis)
                throw ConfigError("sweep.axis", "experiment '" + cfg.id + "' sweeps '" + axis + "', not '" +
                                                    cfg.sweep.axis + "'");
        }

        std::size_t as_count(double v, const std::string &field)
        {
            if (!(v >= 1.0) || v != std::floor(v) || v > 1e7)
                throw ConfigError(field, "expected a positive integer");
            return std::size_t(v);
        }

        Eigen::Vector3d unit(const Eigen::Vector3d &v, const std::string &field)
        {
            if (!(v.norm() > 0.0))
                throw ConfigError(field, "direction must be non-zero");
            return v.normalized();
        }

        // ---------------------------------------------------------------- narrowband_capacity

        struct NarrowbandSetup
        {
            RadioParams radio;
            double alpha_beta = 0.0;
            double gamma = 1.0;
            std::vector<double> direct_db;
            std::size_t realizations = 20;
            std::vector<std::size_t> N;
        };

        NarrowbandSetup parse_narrowband(const ExperimentConfig &cfg)
        {
            require_axis(cfg, "N");
            Node root = cfg.root();
            NarrowbandSetup s;
            Node radio = root.child("radio");
            s.radio.f_c = radio.positive("f_c");
            s.radio.B = radio.positive("B");
            s.radio.N0 = 1.0;
            s.radio.P = root.positive("snr") * s.radio.B;
            s.alpha_beta = root.positive("alpha_beta");
            if (s.alpha_beta > 1.0)
                throw ConfigError("alpha_beta", "path loss product must not exceed 1");
            s.gamma = root.positive("gamma", 1.0);
            if (s.gamma > 1.0)
                throw ConfigError("gamma", "must lie in (0, 1]");
            for (double rho : root.numbers("direct"))
            {
                if (!(rho > 0.0 && rho <= 1.0))
                    throw ConfigError("direct", "direct path losses must lie in (0, 1]");
                s.direct_db.push_back(lin_to_db(rho));
            }
            s.realizations = root.count("realizations", 20);
            if (s.realizations == 0)
                throw ConfigError("realizations", "must be positive");
            for (double v : cfg.sweep.numbers())
                s.N.push_back(as_count(v, "sweep.values"));
            return s;
        }

        PathSet narrowband_paths(const NarrowbandSetup &s, std::size_t N, double rho, std::uint64_t seed)
        {
            // Element delays spread over one carrier cycle give uniform random path phases
            Rng rng(seed);
            std::uniform_real_distribution<double> cycle(0.0, 1.0);
            PathSet p;
            const double a = std::sqrt(s.alpha_beta);
            for (std::size_t n = 0; n < N; ++n)
                p.ris.push_back({RisPath{a, a, 100e-9 + cycle(rng) / s.radio.f_c}});
            if (rho > 0.0)
                p.direct.push_back({rho, 50e-9 + cycle(rng) / s.radio.f_c});
            return p;
        }

        RunSummary run_narrowband(const ExperimentConfig &cfg, const std::filesystem::path &out, std::size_t threads)
        {
            NarrowbandSetup s = parse_narrowband(cfg);
            Table t;
            t.header = {"N", "ris_only_snr_db"};
            for (double d : s.direct_db)
            {
                std::string tag = format_value(d) + "dB";
                t.header.push_back("direct_only_snr_db_rho" + tag);
                t.header.push_back("continuous_snr_db_rho" + tag);
                t.header.push_back("four_phase_snr_db_rho" + tag);
            }
            const PhaseAlphabet four = PhaseAlphabet::four_phase();
            std::vector<std::vector<Cell>> rows(s.N.size());
            parallel_for(s.N.size(), thread_count(threads), [&](std::size_t i)
            {
                const std::size_t N = s.N[i];
                std::vector<Cell> row{double(N), lin_to_db(coherent_snr(narrowband_paths(s, N, 0.0, 0), s.radio,
                                                                        s.gamma))};
                for (std::size_t d = 0; d < s.direct_db.size(); ++d)
                {
                    const double rho = db_to_lin(s.direct_db[d]);
                    PathSet p0 = narrowband_paths(s, N, rho, 0);
                    row.push_back(lin_to_db(s.radio.P * rho / (s.radio.B * s.radio.N0)));
                    row.push_back(lin_to_db(coherent_snr(p0, s.radio, s.gamma)));
                    double q = 0.0;
                    for (std::size_t r = 0; r < s.realizations; ++r)
                    {
                        std::uint64_t seed = derive_seed(derive_seed(cfg.seed, N), d * 1000003ULL + r);
                        q += optimize_narrowband(narrowband_paths(s, N, rho, seed), four, s.radio, s.gamma).snr;
                    }
                    row.push_back(lin_to_db(q / double(s.realizations)));
                }
                rows[i] = std::move(row);
            });
            for (auto &r : rows)
                t.add(std::move(r));

            RunSummary sum;
            emit(sum, out / "narrowband.csv", t);
            // Element count where the RIS path power reaches each direct path
            for (double d : s.direct_db)
                sum.metrics.emplace_back("crossover_N_rho" + format_value(d) + "dB",
                                         format_value(std::sqrt(db_to_lin(d) / s.alpha_beta)));
            return sum;
        }

        // ---------------------------------------------------------------- wideband_rate

        struct WidebandSetup
        {
            WidebandScenario scn;
            double snr_db = 135.0;
            double spacing = 150e3;
            std::size_t guard = 1;
            std::size_t realizations = 50;
            std::vector<double> B_mhz;
        };

        ClusterSpec parse_clusters(const Node &n)
        {
            ClusterSpec c;
            c.count = n.count("clusters");
            if (c.count > 0)
                c.rms_delay_spread = n.positive("rms_delay_spread");
            c.truncation = n.positive("truncation", c.truncation);
            c.elevation_spread = n.number("elevation_spread", c.elevation_spread);
            return c;
        }

        LegSpec parse_leg(const Node &n)
        {
            LegSpec l;
            l.los = n.flag("los", true);
            l.k_factor_db = lin_to_db(n.positive("k_factor", db_to_lin(l.k_factor_db)));
            l.excess_loss_db = lin_to_db(n.positive("excess_loss", 1.0));
            l.clusters = parse_clusters(n);
            return l;
        }

        WidebandSetup parse_wideband(const ExperimentConfig &cfg)
        {
            require_axis(cfg, "B_mhz");
            Node root = cfg.root();
            WidebandSetup s;
            Node sc = root.child("scenario");
            s.scn.f_c = sc.positive("f_c", s.scn.f_c);
            s.scn.n_side = sc.count("n_side", s.scn.n_side);
            s.scn.spacing_wl = sc.positive("spacing_wl", s.scn.spacing_wl);
            if (sc.has("tx"))
                s.scn.tx = sc.vec3("tx");
            if (sc.has("rx"))
                s.scn.rx = sc.vec3("rx");
            s.scn.direct = parse_clusters(sc.child("direct"));
            s.scn.direct_excess_loss_db = lin_to_db(sc.child("direct").positive("excess_loss", 1.0));
            s.scn.tx_ris = parse_leg(sc.child("tx_ris"));
            s.scn.ris_rx = parse_leg(sc.child("ris_rx"));
            try
            {
                s.scn.validate();
            }
            catch (const std::invalid_argument &e)
            {
                throw ConfigError("scenario", e.what());
            }
            s.snr_db = lin_to_db(root.positive("snr", db_to_lin(s.snr_db)));
            s.spacing = root.positive("subcarrier_spacing", s.spacing);
            s.guard = root.count("guard", s.guard);
            s.realizations = root.count("realizations", s.realizations);
            if (s.realizations == 0)
                throw ConfigError("realizations", "must be positive");
            for (double b : cfg.sweep.numbers())
            {
                if (!(b > 0.0))
                    throw ConfigError("sweep.values", "bandwidths must be positive");
                if (std::llround(b * 1e6 / s.spacing) < 1)
                    throw ConfigError("sweep.values", "bandwidth below one subcarrier");
                s.B_mhz.push_back(b);
            }
            return s;
        }

        RunSummary run_wideband(const ExperimentConfig &cfg, const std::filesystem::path &out, std::size_t threads)
        {
            WidebandSetup s = parse_wideband(cfg);
            const std::size_t nb = s.B_mhz.size(), nr = s.realizations;
            std::vector<WidebandRates> res(nb * nr);
            // Realizations are shared by all bandwidths
            parallel_for(nr, thread_count(threads), [&](std::size_t r)
            {
                PathSet paths = generate_clustered_paths(s.scn, derive_seed(cfg.seed, r));
                for (std::size_t b = 0; b < nb; ++b)
                    res[r * nb + b] = evaluate_wideband(paths, s.scn.f_c, s.B_mhz[b] * 1e6, s.snr_db, s.spacing,
                                                        s.guard);
            });
            Table t;
            t.header = {"B_mhz", "stm_mbps", "bound_mbps", "no_ris_mbps", "stm_over_bound", "stm_over_no_ris",
                        "K", "M_max"};
            for (std::size_t b = 0; b < nb; ++b)
            {
                double stm = 0.0, bound = 0.0, off = 0.0;
                std::size_t K = 0, M = 0;
                for (std::size_t r = 0; r < nr; ++r)
                {
                    const auto &x = res[r * nb + b];
                    stm += x.stm;
                    bound += x.bound;
                    off += x.no_ris;
                    K = x.K;
                    M = std::max(M, x.M);
                }
                stm /= double(nr) * 1e6;
                bound /= double(nr) * 1e6;
                off /= double(nr) * 1e6;
                t.add({s.B_mhz[b], stm, bound, off, stm / bound, stm / off, double(K), double(M)});
            }
            RunSummary sum;
            emit(sum, out / "wideband.csv", t);
            return sum;
        }

        // ---------------------------------------------------------------- localization scenes

        struct LocScene
        {
            RadioParams radio;
            loc::Scenario scn;
        };

        LocScene parse_loc_scene(const Node &root, bool need_ris)
        {
            LocScene s;
            s.radio = parse_loc_radio(root.child("radio"));
            s.scn.p_bs = root.vec2("bs");
            s.scn.p = root.vec2("user");
            if (need_ris)
                s.scn.ris.push_back(parse_ris(root.child("ris")));
            if (root.has("scatter_points"))
                s.scn.p_sp = parse_points(root, "scatter_points");
            s.scn.sigma_rcs = root.positive("sigma_rcs", 1.0);
            s.scn.clk = root.number("clock_bias", 0.0);
            try
            {
                s.scn.validate();
            }
            catch (const std::invalid_argument &e)
            {
                throw ConfigError("", e.what());
            }
            return s;
        }

        // ---------------------------------------------------------------- loc_offline

        struct OfflineSetup
        {
            RadioParams radio;
            loc::Scenario base;
            loc::Grid grid;
            loc::CoverageOptions opt;
            std::vector<std::string> names;
            std::map<std::string, std::vector<loc::RisDeployment>> placements;
        };

        OfflineSetup parse_offline(const ExperimentConfig &cfg)
        {
            require_axis(cfg, "placement");
            Node root = cfg.root();
            OfflineSetup s;
            s.radio = parse_loc_radio(root.child("radio"));
            s.base.p_bs = root.vec2("bs");
            Node region = root.child("region");
            auto xs = region.numbers("x"), ys = region.numbers("y");
            if (xs.size() != 2 || ys.size() != 2)
                throw ConfigError("region", "x and y need [min, max]");
            try
            {
                s.grid = loc::Grid::cells(xs[0], xs[1], ys[0], ys[1], region.positive("step"));
            }
            catch (const std::invalid_argument &e)
            {
                throw ConfigError("region", e.what());
            }
            s.opt.epsilon = root.positive("epsilon");
            s.opt.n_configs = root.count("Q", 8);
            s.opt.n_blocks = root.count("T", 256);
            if (s.opt.n_configs == 0 || s.opt.n_blocks % s.opt.n_configs != 0 ||
                s.opt.n_blocks / s.opt.n_configs < 2)
                throw ConfigError("Q", "Q must divide T with at least two blocks per configuration");
            s.opt.draws = root.count("draws", 200);
            if (s.opt.draws == 0)
                throw ConfigError("draws", "must be positive");
            s.opt.seed = cfg.seed;
            Node pl = root.child("placements");
            for (const auto &name : pl.keys())
            {
                std::vector<loc::RisDeployment> v;
                for (const Node &r : pl.items(name))
                    v.push_back(parse_ris(r));
                s.placements[name] = std::move(v);
            }
            s.names = cfg.sweep.labels();
            for (const auto &n : s.names)
            {
                if (!s.placements.count(n))
                    throw ConfigError("sweep.values", "unknown placement '" + n + "'");
                for (char c : n)
                    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
                        throw ConfigError("sweep.values", "placement names may use letters, digits, '_' and '-'");
            }
            return s;
        }

        RunSummary run_offline(const ExperimentConfig &cfg, const std::filesystem::path &out, std::size_t threads)
        {
            OfflineSetup s = parse_offline(cfg);
            s.opt.threads = thread_count(threads);
            Table t;
            t.header = {"placement", "n_ris", "coverage", "median_peb_m"};
            RunSummary sum;
            for (const auto &name : s.names)
            {
                const auto &pl = s.placements.at(name);
                loc::CoverageResult r = loc::offline_coverage(s.base, pl, s.grid, s.radio, s.opt);
                std::vector<double> v(r.peb.data(), r.peb.data() + r.peb.size());
                std::nth_element(v.begin(), v.begin() + std::ptrdiff_t(v.size() / 2), v.end());
                t.add({name, double(pl.size()), r.fraction, v[v.size() / 2]});
                Eigen::MatrixXd db = r.peb.unaryExpr([](double x) { return 10.0 * std::log10(x); });
                auto file = out / ("peb_" + name + ".grid");
                write_text(file, to_grid(s.grid, db));
                sum.files.push_back(file);
                sum.metrics.emplace_back("coverage_" + name, format_value(r.fraction));
            }
            emit(sum, out / "coverage.csv", t);
            return sum;
        }

        // ---------------------------------------------------------------- loc_online

        struct OnlineSetup
        {
            LocScene scene;
            std::size_t T = 256;
            std::size_t n_random = 8;
            std::size_t random_draws = 20;
            std::vector<double> fractions;
        };

        OnlineSetup parse_online(const ExperimentConfig &cfg)
        {
            require_axis(cfg, "fraction");
            Node root = cfg.root();
            OnlineSetup s;
            s.scene = parse_loc_scene(root, true);
            s.T = root.count("T", 256);
            if (s.T < 4)
                throw ConfigError("T", "needs at least four blocks");
            if (root.has("random"))
            {
                Node r = root.child("random");
                s.n_random = r.count("configs", s.n_random);
                s.random_draws = r.count("draws", s.random_draws);
                if (s.n_random > 0 && (s.T % s.n_random != 0 || s.n_random > s.T / s.n_random - 1))
                    throw ConfigError("random.configs", "must divide T and leave enough balanced codes");
            }
            s.fractions = cfg.sweep.numbers();
            for (double f : s.fractions)
            {
                if (!(f >= 0.0 && f <= 1.0))
                    throw ConfigError("sweep.values", "fractions must lie in [0, 1]");
                auto t1 = std::size_t(std::llround(f * double(s.T)));
                if (t1 == 1 || t1 + 1 == s.T)
                    throw ConfigError("sweep.values", "each beam needs zero or at least two blocks");
            }
            return s;
        }

        RunSummary run_online(const ExperimentConfig &cfg, const std::filesystem::path &out, std::size_t)
        {
            OnlineSetup s = parse_online(cfg);
            const auto &sc = s.scene;
            loc::ChannelParams prm = loc::geometric_params(sc.scn, sc.radio, cfg.seed);
            loc::OnlineSweepResult r = loc::online_sweep(sc.scn, prm, s.fractions, s.T, sc.radio, s.n_random,
                                                         s.random_draws, derive_seed(cfg.seed, 1));
            Table t;
            t.header = {"fraction", "T1", "peb_m", "tau_ris_std_m", "aod_std_rad"};
            for (const auto &p : r.points)
                t.add({p.fraction, double(p.t1), p.finite ? p.peb : inf, p.tau_ris_bound, p.aod_bound});
            RunSummary sum;
            emit(sum, out / "online.csv", t);
            const bool any = std::any_of(r.points.begin(), r.points.end(), [](const auto &p) { return p.finite; });
            sum.metrics.emplace_back("argmin_fraction", any ? format_value(r.points[r.argmin].fraction) : "none");
            sum.metrics.emplace_back("min_peb_m", any ? format_value(r.points[r.argmin].peb) : "inf");
            sum.metrics.emplace_back("random_peb_m", format_value(r.random_peb));
            Table b;
            b.header = {"argmin_fraction", "min_peb_m", "random_peb_m"};
            b.add({any ? r.points[r.argmin].fraction : inf, any ? r.points[r.argmin].peb : inf, r.random_peb});
            emit(sum, out / "online_summary.csv", b, false);
            return sum;
        }

        // ---------------------------------------------------------------- loc_solve

        struct SolveSetup
        {
            LocScene scene;
            std::size_t Q = 8;
            std::size_t T = 256;
            std::size_t trials = 500;
            std::size_t max_paths = 2;
            std::vector<double> power_dbm;
        };

        SolveSetup parse_solve(const ExperimentConfig &cfg)
        {
            require_axis(cfg, "P_dbm");
            Node root = cfg.root();
            SolveSetup s;
            s.scene = parse_loc_scene(root, true);
            s.Q = root.count("Q", s.Q);
            s.T = root.count("T", s.T);
            if (s.Q < 2 || s.T % s.Q != 0 || s.Q > s.T / s.Q - 1)
                throw ConfigError("Q", "needs Q >= 2 dividing T with Q <= T/Q - 1");
            s.trials = root.count("trials", s.trials);
            s.max_paths = root.count("max_paths", 1 + s.scene.scn.p_sp.size());
            if (s.max_paths == 0)
                throw ConfigError("max_paths", "must be positive");
            s.power_dbm = cfg.sweep.numbers();
            return s;
        }

        RunSummary run_solve(const ExperimentConfig &cfg, const std::filesystem::path &out, std::size_t threads)
        {
            SolveSetup s = parse_solve(cfg);
            const loc::Scenario &scn = s.scene.scn;
            const auto &ris = scn.ris[0];
            Rng cfg_rng(derive_seed(cfg.seed, 0));
            loc::CodedSchedule sch = loc::coded_schedule(s.Q, s.T, loc::random_configs(s.Q, ris.size(), cfg_rng));
            loc::ChannelParams prm = loc::geometric_params(scn, s.scene.radio, cfg.seed);
            const double c = speed_of_light;

            RunSummary sum;
            {
                // Noiseless pass through the whole chain
                RadioParams radio = s.scene.radio;
                Eigen::VectorXcd pilot = loc::constant_pilot(radio);
                Rng rng(0);
                loc::SeparatedChannels obs = loc::simulate_separated(scn, prm, 0, sch, pilot, radio, 0.0, rng);
                loc::LocalizationResult lr = loc::localize(obs, sch, scn.p_bs, ris, pilot, radio, s.max_paths);
                Table t;
                t.header = {"p_x", "p_y", "position_error_m", "clk_s", "clk_error_s", "tau_ris_error_m",
                            "aod_error_rad"};
                for (std::size_t i = 0; i < scn.p_sp.size(); ++i)
                    t.header.push_back("sp" + std::to_string(i) + "_ellipse_distance_m");
                std::vector<Cell> row{lr.position.p.x(), lr.position.p.y(), (lr.position.p - scn.p).norm(),
                                      lr.position.clk, lr.position.clk - scn.clk,
                                      c * (lr.ris.tau - prm.ris[0].tau), lr.ris.aod - prm.ris[0].aod};
                for (std::size_t i = 0; i < scn.p_sp.size(); ++i)
                {
                    double d = inf;
                    for (const auto &el : lr.scatterers)
                        d = std::min(d, std::abs(el.signed_distance(scn.p_sp[i])));
                    row.push_back(d);
                }
                t.add(std::move(row));
                emit(sum, out / "solve_noiseless.csv", t, false);
                sum.metrics.emplace_back("noiseless_position_error_m", format_value((lr.position.p - scn.p).norm()));
            }

            Table t;
            t.header = {"P_dbm", "rmse_position_m", "peb_m", "rmse_tau_los_m", "crb_tau_los_m", "rmse_tau_ris_m",
                        "crb_tau_ris_m", "rmse_aod_rad", "crb_aod_rad", "failures"};
            for (std::size_t ip = 0; ip < s.power_dbm.size(); ++ip)
            {
                RadioParams radio = s.scene.radio;
                radio.P = dbm_to_watt(s.power_dbm[ip]);
                Eigen::VectorXcd pilot = loc::constant_pilot(radio);
                loc::ChannelParams pp = loc::geometric_params(scn, radio, cfg.seed);
                loc::FimBundle fb = loc::fim_channel(scn, pp, {sch}, pilot, radio);
                loc::position_fim(fb, scn, pp);
                const loc::ParamLayout &lay = fb.layout;
                auto crb = [&](std::size_t i)
                {
                    double j = loc::effective_information(fb, i);
                    return j > 0.0 ? 1.0 / std::sqrt(j) : inf;
                };
                loc::DelayEstimatorOptions dopt;
                dopt.noise_var = double(s.T) * radio.N0;

                struct Err
                {
                    double pos = 0.0, tl = 0.0, tr = 0.0, aod = 0.0;
                    bool ok = false;
                };
                std::vector<Err> err(s.trials);
                parallel_for(s.trials, thread_count(threads), [&](std::size_t k)
                {
                    Rng rng(derive_seed(derive_seed(cfg.seed, ip + 1), k));
                    try
                    {
                        auto obs = loc::simulate_separated(scn, pp, 0, sch, pilot, radio, radio.N0, rng);
                        auto lr = loc::localize(obs, sch, scn.p_bs, ris, pilot, radio, s.max_paths, dopt);
                        err[k].pos = (lr.position.p - scn.p).squaredNorm();
                        err[k].tl = std::pow(lr.delays.tau[0] - pp.tau[0], 2);
                        err[k].tr = std::pow(lr.ris.tau - pp.ris[0].tau, 2);
                        err[k].aod = std::pow(lr.ris.aod - pp.ris[0].aod, 2);
                        err[k].ok = true;
                    }
                    catch (const std::runtime_error &)
                    {
                        err[k].ok = false;
                    }
                });
                double pos = 0.0, tl = 0.0, tr = 0.0, aod = 0.0;
                std::size_t ok = 0;
                for (const auto &e : err)
                    if (e.ok)
                    {
                        pos += e.pos;
                        tl += e.tl;
                        tr += e.tr;
                        aod += e.aod;
                        ++ok;
                    }
                const double n = double(ok);
                auto rm = [&](double v) { return ok ? std::sqrt(v / n) : inf; };
                t.add({s.power_dbm[ip], rm(pos), fb.identifiable ? fb.peb : inf, c * rm(tl), c * crb(lay.tau(0)),
                       c * rm(tr), c * crb(lay.tau_ris(0)), rm(aod), crb(lay.aod(0)), double(s.trials - ok)});
            }
            emit(sum, out / "solve.csv", t);
            return sum;
        }

        // ---------------------------------------------------------------- estimation

        struct EstimationSetup
        {
            std::size_t N = 16, M = 4, K = 64;
            double B = 1e6;
            double N0 = dbm_to_watt(-174.0);
            double channel_power = 1e-10;
            PilotSubcarriers selection = PilotSubcarriers::first;
            std::size_t trials = 10000;
            std::vector<double> power_dbm;
        };

        EstimationSetup parse_estimation(const ExperimentConfig &cfg)
        {
            require_axis(cfg, "P_dbm");
            Node root = cfg.root();
            EstimationSetup s;
            s.N = root.count("N");
            s.M = root.count("M");
            s.K = root.count("K");
            if (s.N == 0 || s.M == 0 || s.M > s.K)
                throw ConfigError("M", "need N >= 1 and 1 <= M <= K");
            s.B = root.positive("B");
            s.N0 = root.positive("N0");
            s.channel_power = root.positive("channel_power", s.channel_power);
            std::string sel = root.raw().contains("pilots") ? root.text("pilots") : "first";
            if (sel == "first")
                s.selection = PilotSubcarriers::first;
            else if (sel == "equispaced")
            {
                s.selection = PilotSubcarriers::equispaced;
                if (s.K % s.M != 0)
                    throw ConfigError("pilots", "equispaced pilots need M to divide K");
            }
            else
                throw ConfigError("pilots", "expected 'first' or 'equispaced'");
            s.trials = root.count("trials", s.trials);
            if (s.trials == 0)
                throw ConfigError("trials", "must be positive");
            s.power_dbm = cfg.sweep.numbers();
            return s;
        }

        RunSummary run_estimation(const ExperimentConfig &cfg, const std::filesystem::path &out, std::size_t threads)
        {
            EstimationSetup s = parse_estimation(cfg);
            Rng vrng(derive_seed(cfg.seed, 0));
            TapMatrix V(Eigen::Index(s.N), Eigen::Index(s.M));
            for (Eigen::Index i = 0; i < V.size(); ++i)
                V(i) = complex_normal(vrng, s.channel_power);

            Table t;
            t.header = {"P_dbm", "mse_empirical", "mse_analytic", "ratio", "noiseless_relative_error"};
            const std::size_t workers = thread_count(threads);
            for (std::size_t ip = 0; ip < s.power_dbm.size(); ++ip)
            {
                PilotPlan plan = make_pilot_plan(s.N, s.M, s.K, dbm_to_watt(s.power_dbm[ip]), s.B, s.selection);
                Rng r0(0);
                Eigen::MatrixXcd V0 = ls_estimate(simulate_pilot_blocks(V, plan, 0.0, r0), plan);
                const double rel = (V0 - V).norm() / V.norm();

                // Fixed chunking keeps the summation order independent of the worker count
                const std::size_t chunks = 64;
                std::vector<double> part(chunks, 0.0);
                parallel_for(chunks, workers, [&](std::size_t c)
                {
                    for (std::size_t k = c; k < s.trials; k += chunks)
                    {
                        Rng rng(derive_seed(derive_seed(cfg.seed, ip + 1), k));
                        Eigen::MatrixXcd Vh = ls_estimate(simulate_pilot_blocks(V, plan, s.N0, rng), plan);
                        part[c] += (Vh - V).squaredNorm();
                    }
                });
                double total = 0.0;
                for (double p : part)
                    total += p;
                const double emp = total / double(s.trials) / double(s.N * s.M);
                const double ana = ls_mse_per_entry(plan, s.N0);
                t.add({s.power_dbm[ip], emp, ana, emp / ana, rel});
            }
            RunSummary sum;
            emit(sum, out / "estimation.csv", t);
            return sum;
        }

        // ---------------------------------------------------------------- mobility

        struct MobilitySetup
        {
            MobilityScene scene;
            Eigen::Vector3d rx0;
            Eigen::Vector3d direction;
            double dt = 1e-4;
            std::size_t samples = 200;
            std::vector<double> speeds;
        };

        MobilitySetup parse_mobility(const ExperimentConfig &cfg)
        {
            require_axis(cfg, "speed");
            Node root = cfg.root();
            MobilitySetup s;
            s.scene.f_c = root.positive("f_c");
            Node ris = root.child("ris");
            s.scene.geometry = ArrayGeometry::ula(ris.count("elements"), ris.positive("spacing_wl", 0.5));
            if (s.scene.geometry.size() == 0)
                throw ConfigError("ris.elements", "must be positive");
            s.scene.ris_center = ris.has("center") ? ris.vec3("center") : Eigen::Vector3d::Zero();
            s.scene.tx = root.vec3("tx");
            s.rx0 = root.vec3("rx_start");
            if (root.raw().contains("direction") && root.raw()["direction"].is_string())
            {
                if (root.text("direction") != "receding")
                    throw ConfigError("direction", "expected 'receding' or a vector");
                s.direction = unit(s.rx0 - s.scene.ris_center, "direction");
            }
            else
                s.direction = unit(root.vec3("direction"), "direction");
            if (!s.scene.in_front(s.scene.tx) || !s.scene.in_front(s.rx0))
                throw ConfigError("tx", "transmitter and receiver must be in front of the RIS");
            s.dt = root.positive("dt");
            s.samples = root.count("samples", s.samples);
            if (s.samples < 3)
                throw ConfigError("samples", "need at least three samples");
            s.speeds = cfg.sweep.numbers();
            for (double v : s.speeds)
                if (!(v >= 0.0))
                    throw ConfigError("sweep.values", "speeds must be non-negative");
            return s;
        }

        RunSummary run_mobility(const ExperimentConfig &cfg, const std::filesystem::path &out, std::size_t)
        {
            MobilitySetup s = parse_mobility(cfg);
            Table t;
            t.header = {"speed_mps", "spread_tracking_direct_hz", "spread_tracking_no_direct_hz",
                        "residual_direct_cycles", "residual_no_direct_cycles", "static_shift_hz",
                        "predicted_shift_hz", "static_relative_error", "coarse_step"};
            for (double v : s.speeds)
            {
                Trajectory traj = Trajectory::linear(s.rx0, v * s.direction, s.dt, s.samples);
                MobilityScene with = s.scene, without = s.scene;
                with.has_direct = true;
                without.has_direct = false;
                TrackingResult tw = tracking_config(traj, with, true);
                TrackingResult tn = tracking_config(traj, without, false);
                DopplerResult dw = doppler_metrics(traj, tw.configs, with);
                DopplerResult dn = doppler_metrics(traj, tn.configs, without);

                // Static configuration: optimum at the start, frozen along the trajectory
                RadioParams radio;
                radio.f_c = s.scene.f_c;
                NarrowbandResult nb = optimize_narrowband(with.paths_at(s.rx0), PhaseAlphabet::any_phase(), radio);
                DopplerResult ds = doppler_metrics(traj, frozen_config(nb.config, s.samples), with);
                const std::size_t mid = s.samples / 2;
                const Eigen::Index N = Eigen::Index(s.scene.geometry.size());
                double shift = ds.shift.row(Eigen::Index(mid)).head(N).mean();
                Eigen::Vector3d rmid = traj.rx[mid];
                double predicted = -s.scene.f_c * v * s.direction.dot((rmid - s.scene.ris_center).normalized()) /
                                   speed_of_light;
                double relerr = predicted != 0.0 ? std::abs(shift - predicted) / std::abs(predicted) : std::abs(shift);
                t.add({v, dw.max_spread, dn.max_spread, phase_alignment_residual(traj, tw, with),
                       phase_alignment_residual(traj, tn, without), shift, predicted, relerr,
                       double(dw.coarse_step || dn.coarse_step || ds.coarse_step)});
            }
            RunSummary sum;
            emit(sum, out / "mobility.csv", t);
            return sum;
        }
    }

    RadioParams parse_loc_radio(const Node &n)
    {
        RadioParams r;
        r.f_c = n.positive("f_c");
        r.B = n.positive("B");
        r.K = n.count("K");
        if (r.K == 0)
            throw ConfigError(n.field("K"), "must be positive");
        r.P = n.positive("P");
        r.N0 = n.positive("N0");
        r.M = 1;
        return r;
    }

    loc::RisDeployment parse_ris(const Node &n)
    {
        loc::RisDeployment r;
        r.position = n.vec2("position");
        r.orientation = n.number("orientation");
        std::size_t N = n.count("elements", 64);
        if (N == 0)
            throw ConfigError(n.field("elements"), "must be positive");
        r.geometry = ArrayGeometry::ula(N, n.positive("spacing_wl", 0.2));
        r.element_size_wl = n.positive("element_size_wl", 0.2);
        return r;
    }

    std::vector<loc::Vec2> parse_points(const Node &n, const std::string &key)
    {
        auto it = n.raw().find(key);
        if (it == n.raw().end() || !it->is_array())
            throw ConfigError(n.field(key), "expected an array of [x, y] points");
        std::vector<loc::Vec2> out;
        for (const auto &p : *it)
        {
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
                throw ConfigError(n.field(key), "expected an array of [x, y] points");
            out.emplace_back(p[0].get<double>(), p[1].get<double>());
        }
        return out;
    }

    void validate_experiment(const ExperimentConfig &cfg)
    {
        const std::string &id = cfg.id;
        if (id == "narrowband_capacity")
            parse_narrowband(cfg);
        else if (id == "wideband_rate")
            parse_wideband(cfg);
        else if (id == "loc_offline")
            parse_offline(cfg);
        else if (id == "loc_online")
            parse_online(cfg);
        else if (id == "loc_solve")
            parse_solve(cfg);
        else if (id == "estimation")
            parse_estimation(cfg);
        else if (id == "mobility")
            parse_mobility(cfg);
        else
            throw ConfigError("experiment", "unknown experiment '" + id + "'");
    }

    RunSummary run_experiment(const ExperimentConfig &cfg, const std::filesystem::path &out_dir,
                              std::size_t threads)
    {
        validate_experiment(cfg);
        std::filesystem::create_directories(out_dir);
        RunSummary sum;
        const std::string &id = cfg.id;
        if (id == "narrowband_capacity")
            sum = run_narrowband(cfg, out_dir, threads);
        else if (id == "wideband_rate")
            sum = run_wideband(cfg, out_dir, threads);
        else if (id == "loc_offline")
            sum = run_offline(cfg, out_dir, threads);
        else if (id == "loc_online")
            sum = run_online(cfg, out_dir, threads);
        else if (id == "loc_solve")
            sum = run_solve(cfg, out_dir, threads);
        else if (id == "estimation")
            sum = run_estimation(cfg, out_dir, threads);
        else
            sum = run_mobility(cfg, out_dir, threads);
        sum.id = id;
        return sum;
    }
}
