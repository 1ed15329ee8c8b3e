// SPDX-License-Identifier: Apache-2.0

#ifndef RIS_LOCSENSE_HPP
#define RIS_LOCSENSE_HPP

#include "ris/channel.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

// Localization and sensing in the horizontal plane. Positions are 2-D [m], angles are azimuths in the RIS
// local frame whose x-axis is the surface normal.
namespace ris::loc
{
    using Vec2 = Eigen::Vector2d;

    // Unit per-element gain in front of the surface, zero behind it
    double gain_pattern(double az);

    struct RisDeployment
    {
        Vec2 position = Vec2::Zero();
        double orientation = 0.0;        // Direction of the surface normal in the global frame [rad]
        ArrayGeometry geometry = ArrayGeometry::ula(64, 0.2); // Local y-axis along the surface
        double element_size_wl = 0.2;    // Element side length in wavelengths

        Vec2 normal() const { return {std::cos(orientation), std::sin(orientation)}; }
        Vec2 tangent() const { return {-std::sin(orientation), std::cos(orientation)}; }
        Eigen::Matrix2d rotation() const; // Local to global
        double azimuth_to(const Vec2 &p) const; // Local azimuth of the direction towards p
        Vec2 direction(double az) const;        // Global unit vector of a local azimuth
        std::size_t size() const { return geometry.size(); }
    };

    struct Scenario
    {
        Vec2 p_bs = Vec2::Zero();
        Vec2 p = Vec2::Zero();                // User
        std::vector<RisDeployment> ris;
        std::vector<Vec2> p_sp;               // Scatter points
        double clk = 0.0;                     // Clock bias [s]
        double sigma_rcs = 1.0;               // Radar cross section [m^2]

        void validate() const;
    };

    // Centered subcarrier offsets nu_k = k - (K-1)/2
    Eigen::VectorXd subcarrier_offsets(std::size_t K);

    // Constant-modulus pilot with |x|^2 = P/B on every subcarrier
    Eigen::VectorXcd constant_pilot(const RadioParams &radio);

    // sum_k (2 pi nu_k delta_f)^2 |x_k|^2
    double effective_bandwidth_sq(const Eigen::VectorXcd &pilot, const RadioParams &radio);

    struct RisPathParams
    {
        double tau = 0.0;     // [s]
        double aoa = 0.0;     // Azimuth towards the BS
        double aod = 0.0;     // Azimuth towards the user
        cplx gain = 0.0;
    };

    // Channel parameters: uncontrollable paths (index 0 is the LOS path) and one controllable path per RIS
    struct ChannelParams
    {
        std::vector<double> tau;
        std::vector<cplx> gain;
        std::vector<RisPathParams> ris;

        std::size_t n_paths() const { return tau.size(); }
        std::size_t n_ris() const { return ris.size(); }
    };

    // Delays and angles only; coincident user and BS are allowed
    ChannelParams path_delays(const Scenario &scn);

    // Delays, angles and complex gains with phases drawn uniformly from the seed
    ChannelParams geometric_params(const Scenario &scn, const RadioParams &radio, std::uint64_t seed);

    // Configuration sequence where group i applies configs[i] for lengths[i] consecutive blocks, the block
    // t within the group being multiplied by codes[i][t]
    struct CodedSchedule
    {
        std::vector<Eigen::VectorXcd> configs;
        std::vector<std::size_t> lengths;
        std::vector<Eigen::VectorXcd> codes;

        std::size_t n_groups() const { return configs.size(); }
        std::size_t n_blocks() const;
        void validate() const;
    };

    // Q groups of T/Q blocks; group i uses column (offset + i) mod (T/Q - 1) + 1 of the T/Q-point DFT
    CodedSchedule coded_schedule(std::size_t Q, std::size_t T, const std::vector<Eigen::VectorXcd> &configs,
                                 std::size_t code_offset = 0);

    // Groups of arbitrary lengths, each coded with the first non-constant DFT column of its length
    CodedSchedule weighted_schedule(const std::vector<Eigen::VectorXcd> &configs,
                                    const std::vector<std::size_t> &lengths);

    // Unit-modulus random configurations
    std::vector<Eigen::VectorXcd> random_configs(std::size_t n_configs, std::size_t N, Rng &rng);

    // Direct beam b* and its derivative beam projected to unit modulus
    Eigen::VectorXcd direct_beam(const RisDeployment &ris, double aoa, double aod);
    Eigen::VectorXcd derivative_beam(const RisDeployment &ris, double aoa, double aod);

    // b(aod) = a(aoa) .* a(aod) and its azimuth derivative
    Eigen::VectorXcd ris_cascade(const RisDeployment &ris, double aoa, double aod);
    Eigen::VectorXcd ris_cascade_d_aod(const RisDeployment &ris, double aoa, double aod);

    // Noise-free observation of the uncontrollable part, and of RIS r under configuration omega
    Eigen::VectorXcd uncontrollable_response(const ChannelParams &prm, const Eigen::VectorXcd &pilot,
                                             const RadioParams &radio);
    Eigen::VectorXcd ris_response(const ChannelParams &prm, std::size_t r, const RisDeployment &ris,
                                  const Eigen::VectorXcd &omega, const Eigen::VectorXcd &pilot,
                                  const RadioParams &radio);

    // Per-group [K, L_i] block observations; schedules holds one schedule per RIS with identical group lengths
    std::vector<Eigen::MatrixXcd> simulate_blocks(const Scenario &scn, const ChannelParams &prm,
                                                  const std::vector<CodedSchedule> &schedules,
                                                  const Eigen::VectorXcd &pilot, const RadioParams &radio,
                                                  double N0, Rng &rng);

    struct SeparatedChannels
    {
        Eigen::VectorXcd uncontrollable;        // sum over all blocks, gain T
        std::vector<Eigen::VectorXcd> per_config; // code-matched sum per group, gain L_i
    };

    SeparatedChannels separate_channels(const std::vector<Eigen::MatrixXcd> &blocks, const CodedSchedule &schedule);

    // Statistically equivalent draw of the separated observations for one RIS
    SeparatedChannels simulate_separated(const Scenario &scn, const ChannelParams &prm, std::size_t r,
                                         const CodedSchedule &schedule, const Eigen::VectorXcd &pilot,
                                         const RadioParams &radio, double N0, Rng &rng);

    // Index map of the channel parameter vector:
    // [tau_los, (tau_ris_r, aod_r)_r, tau_sp..., (Re g_l, Im g_l)_l, (Re g_ris_r, Im g_ris_r)_r]
    struct ParamLayout
    {
        std::size_t n_paths = 1;
        std::size_t n_ris = 1;
        bool with_gains = true;

        std::size_t tau(std::size_t l) const { return l == 0 ? 0 : 2 * n_ris + l; }
        std::size_t tau_ris(std::size_t r) const { return 1 + 2 * r; }
        std::size_t aod(std::size_t r) const { return 2 + 2 * r; }
        std::size_t gain_re(std::size_t l) const { return 1 + 2 * n_ris + (n_paths - 1) + 2 * l; }
        std::size_t gain_im(std::size_t l) const { return gain_re(l) + 1; }
        std::size_t ris_gain_re(std::size_t r) const { return 1 + 2 * n_ris + (n_paths - 1) + 2 * n_paths + 2 * r; }
        std::size_t ris_gain_im(std::size_t r) const { return ris_gain_re(r) + 1; }
        std::size_t size() const
        {
            return 1 + 2 * n_ris + (n_paths - 1) + (with_gains ? 2 * n_paths + 2 * n_ris : 0);
        }
        std::vector<std::string> names() const;
    };

    struct FimBundle
    {
        Eigen::MatrixXd J_channel;     // FIM of the channel parameters
        ParamLayout layout;
        Eigen::MatrixXd jacobian;      // d channel / d [p, clk, nuisance]
        Eigen::Matrix2d J_location = Eigen::Matrix2d::Zero();
        double speb = std::numeric_limits<double>::infinity(); // [m^2]
        double peb = std::numeric_limits<double>::infinity();  // [m]
        double b_eff_sq = 0.0;
        bool identifiable = false;
        bool nuisance_pinv = false;    // Nuisance block was rank deficient and pseudo-inverted
    };

    // (2/N0) sum_t Re{ grad mu[t]^H grad mu[t] }
    FimBundle fim_channel(const Scenario &scn, const ChannelParams &prm, const std::vector<CodedSchedule> &schedules,
                          const Eigen::VectorXcd &pilot, const RadioParams &radio);

    // Gradient of the noise-free block observation with respect to every channel parameter, [K, size]
    Eigen::MatrixXcd observation_gradient(const Scenario &scn, const ChannelParams &prm,
                                          const std::vector<CodedSchedule> &schedules, std::size_t group,
                                          std::size_t block, const Eigen::VectorXcd &pilot, const RadioParams &radio);

    // Noise-free block observation
    Eigen::VectorXcd observation_mean(const Scenario &scn, const ChannelParams &prm,
                                      const std::vector<CodedSchedule> &schedules, std::size_t group,
                                      std::size_t block, const Eigen::VectorXcd &pilot, const RadioParams &radio);

    struct ClosedFormFim
    {
        double tau_los = 0.0;
        double tau_ris = 0.0;
        double aod = 0.0; // After elimination of the RIS path gain
    };

    // Closed-form entries for a single RIS without scatter points
    ClosedFormFim fim_closed_form(const Scenario &scn, const ChannelParams &prm, const CodedSchedule &schedule,
                                  const Eigen::VectorXcd &pilot, const RadioParams &radio);

    // Weighted beam moments sum_i L_i |a_i|^2, sum_i L_i |e_i|^2 and sum_i L_i a_i e_i^* with a_i = b^T w_i and
    // e_i = bdot^T w_i, plus their Cauchy-Schwarz bounds
    struct BeamMoments
    {
        double aa = 0.0, ee = 0.0;
        cplx ae = 0.0;
        double bound_a = 0.0, bound_e = 0.0;
    };

    BeamMoments beam_moments(const Eigen::VectorXcd &b, const Eigen::VectorXcd &bd,
                             const std::vector<Eigen::VectorXcd> &configs, const std::vector<std::size_t> &lengths);

    // Closed-form entries from the moments; |x|^2 constant over the subcarriers
    ClosedFormFim closed_form_entries(const BeamMoments &m, double gain_los_sq, double gain_ris_sq, double T,
                                      double b_eff_sq, double pilot_energy, double N0);

    struct LocationBound
    {
        Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
        double speb = std::numeric_limits<double>::infinity();
        bool identifiable = false;
        bool nuisance_pinv = false;
    };

    // Schur complement onto the first two parameters (the position) of a transformed FIM
    LocationBound location_bound(const Eigen::MatrixXd &J_tilde);

    // Effective Fisher information 1 / [J^-1]_jj of one channel parameter
    double effective_information(const FimBundle &bundle, std::size_t index);

    // Reduced FIM over [tau_los, (tau_ris_r, aod_r)_r] from the closed forms; LOS-only, any number of RIS with
    // mutually orthogonal codes
    FimBundle fim_reduced_los(const Scenario &scn, const ChannelParams &prm,
                              const std::vector<CodedSchedule> &schedules, const Eigen::VectorXcd &pilot,
                              const RadioParams &radio);

    // Maps to the location domain and eliminates clock bias and nuisance parameters
    void position_fim(FimBundle &bundle, const Scenario &scn, const ChannelParams &prm);

    // trace(J^-1) for a 2 x 2 location FIM; infinite when singular
    double speb_from_location_fim(const Eigen::Matrix2d &J);

    // Closed-form LOS location FIM: J_d J_r / (J_d + J_r) / c^2 along u_bs - u_ris plus the AOD term across
    Eigen::Matrix2d location_fim_los(const Scenario &scn, const ClosedFormFim &entries);

    struct Grid
    {
        double x0 = 0.0, y0 = 0.0;  // First cell center
        double dx = 1.0, dy = 1.0;
        std::size_t nx = 1, ny = 1;

        Vec2 point(std::size_t ix, std::size_t iy) const { return {x0 + double(ix) * dx, y0 + double(iy) * dy}; }
        std::size_t size() const { return nx * ny; }
        void validate() const;

        // Cell-centered grid covering [xmin, xmax] x [ymin, ymax]
        static Grid cells(double xmin, double xmax, double ymin, double ymax, double step);
    };

    struct CoverageOptions
    {
        double epsilon = 0.1;           // PEB threshold [m]
        std::size_t n_configs = 8;      // Q
        std::size_t n_blocks = 256;     // T
        std::size_t draws = 200;        // Random configuration draws per grid point
        std::uint64_t seed = 1;
        std::size_t threads = 0;        // 0 = automatic
    };

    struct CoverageResult
    {
        double fraction = 0.0;          // Mean over grid points of P(PEB <= epsilon)
        Eigen::MatrixXd peb;            // [ny, nx] sqrt of the draw-averaged SPEB [m]
        Eigen::MatrixXd covered;        // [ny, nx] fraction of draws with PEB <= epsilon
    };

    // Coverage of one RIS placement (empty list: BS only) over the grid with random configurations
    CoverageResult offline_coverage(const Scenario &base, const std::vector<RisDeployment> &placement,
                                    const Grid &grid, const RadioParams &radio, const CoverageOptions &opt);

    struct OnlinePoint
    {
        double fraction = 0.0;         // T1/T
        std::size_t t1 = 0;
        double peb = 0.0;              // [m], infinite when not identifiable
        double tau_ris_bound = 0.0;    // c sqrt(J^-1(tau_ris)) [m]
        double aod_bound = 0.0;        // sqrt(J^-1(aod)) [rad]
        bool finite = false;
    };

    struct OnlineSweepResult
    {
        std::vector<OnlinePoint> points;
        std::size_t argmin = 0;
        double random_peb = 0.0;       // Random-configuration baseline
    };

    // T1 direct-beam blocks followed by T - T1 derivative-beam blocks for the first RIS of the scenario
    OnlineSweepResult online_sweep(const Scenario &scn, const ChannelParams &prm, const std::vector<double> &fractions,
                                   std::size_t T, const RadioParams &radio, std::size_t n_random = 8,
                                   std::size_t random_draws = 20, std::uint64_t seed = 1);

    struct DelayEstimate
    {
        std::vector<double> tau;       // Strongest first
        std::vector<cplx> amplitude;   // Fitted amplitude of z / x per path
    };

    struct DelayEstimatorOptions
    {
        std::size_t oversampling = 8;
        double noise_var = 0.0;        // Noise variance of the observation per subcarrier; 0 disables the noise threshold
        double threshold = 25.0;       // Detection threshold over the noise floor of the delay profile
        double dynamic_range = 1e-6;   // Minimum peak power relative to the strongest peak
        bool refine = true;            // Joint least-squares refinement after peak picking
    };

    // Peak picking on the zero-padded inverse transform with quadratic interpolation, successive cancellation
    // of detected paths and optional joint refinement. Returns fewer paths when fewer peaks qualify.
    DelayEstimate estimate_uncontrollable_delays(const Eigen::VectorXcd &z0, const Eigen::VectorXcd &pilot,
                                                 const RadioParams &radio, std::size_t max_paths,
                                                 const DelayEstimatorOptions &opt = {});

    struct RisEstimate
    {
        double tau = 0.0;
        double aod = 0.0;
        cplx gain = 0.0;
        double objective = 0.0;
    };

    struct RisEstimatorOptions
    {
        std::size_t delay_oversampling = 4;   // Delay grid step 1/(oversampling B)
        double angle_step = 0.5 * pi / 180.0;
        std::size_t window = 16;              // Half-width of the delay search window in grid steps
        double tolerance = 1e-4;              // Refinement tolerance in grid units
    };

    // Concentrated-likelihood search over delay and AOD with the path gain profiled out
    RisEstimate estimate_ris_params(const std::vector<Eigen::VectorXcd> &per_config, const CodedSchedule &schedule,
                                    const RisDeployment &ris, double aoa, const Eigen::VectorXcd &pilot,
                                    const RadioParams &radio, const RisEstimatorOptions &opt = {});

    struct PositionSolution
    {
        Vec2 p = Vec2::Zero();
        double clk = 0.0;
        double range = 0.0;            // Distance from the RIS [m]
        bool ill_conditioned = false;
    };

    // Intersection of the AOD ray with the TDOA hyperbola
    PositionSolution solve_position(double tau_los, double tau_ris, double aod, const Vec2 &p_bs,
                                    const RisDeployment &ris);

    struct Ellipse
    {
        Vec2 focus1 = Vec2::Zero();
        Vec2 focus2 = Vec2::Zero();
        double range_sum = 0.0;

        double range_sum_residual(const Vec2 &q) const; // |q - f1| + |q - f2| - range_sum
        double signed_distance(const Vec2 &q) const;    // Euclidean, negative inside
    };

    // Ellipse of candidate scatter-point positions with foci at the BS and the user
    Ellipse sense_tsoa(double tau_sp, double tau_los, const Vec2 &p_user, const Vec2 &p_bs);

    struct LocalizationResult
    {
        DelayEstimate delays;              // Strongest path is taken as LOS
        RisEstimate ris;
        PositionSolution position;
        std::vector<Ellipse> scatterers;   // One per remaining uncontrollable path
    };

    // Delay estimation, RIS parameter estimation, position solution and TSOA sensing for one RIS
    LocalizationResult localize(const SeparatedChannels &obs, const CodedSchedule &schedule, const Vec2 &p_bs,
                                const RisDeployment &ris, const Eigen::VectorXcd &pilot, const RadioParams &radio,
                                std::size_t max_paths, const DelayEstimatorOptions &delay_opt = {},
                                const RisEstimatorOptions &ris_opt = {});
}

#endif
