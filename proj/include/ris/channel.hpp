// SPDX-License-Identifier: Apache-2.0

#ifndef RIS_CHANNEL_HPP
#define RIS_CHANNEL_HPP

#include "ris/common.hpp"

#include <cstddef>
#include <vector>

namespace ris
{
    using TapVector = Eigen::VectorXcd; // FIR taps h[0..M-1]
    using TapMatrix = Eigen::MatrixXcd; // Cascade taps, size [N, M], column k holds v_k

    // System constants of an OFDM link
    struct RadioParams
    {
        double f_c = 1.0e9;    // Carrier frequency [Hz]
        double B = 1.0e6;      // Bandwidth and symbol rate [Hz]
        std::size_t K = 1;     // Number of subcarriers
        std::size_t M = 1;     // Number of FIR taps
        double eta = 0.0;      // Sampling delay [s]
        double N0 = 1.0e-20;   // Noise power spectral density [W/Hz]
        double P = 1.0;        // Transmit power [W]

        double delta_f() const { return B / double(K); }       // Subcarrier spacing [Hz]
        double wavelength() const { return speed_of_light / f_c; }
        void validate() const;                                 // Throws std::invalid_argument
    };

    // One propagation path through a single RIS element
    struct RisPath
    {
        double alpha = 0.0; // Power loss of the incoming leg, in [0, 1]
        double beta = 0.0;  // Power loss of the outgoing leg, in [0, 1]
        double delay = 0.0; // Propagation delay of both legs combined [s]
    };

    // One path that does not involve the RIS
    struct DirectPath
    {
        double rho = 0.0;   // Power loss, in [0, 1]
        double delay = 0.0; // [s]
    };

    struct PathSet
    {
        std::vector<std::vector<RisPath>> ris; // ris[n] lists all paths through element n
        std::vector<DirectPath> direct;

        std::size_t n_elements() const { return ris.size(); }
        void validate() const;
        double earliest_delay() const;
        double latest_delay() const;
    };

    // RIS configuration; element n reradiates sqrt(gamma_n) * exp(i phase_n)
    struct RisConfig
    {
        Eigen::VectorXd gamma; // Reradiated power fraction in [0, 1]
        Eigen::VectorXd phase; // Phase -2 pi f_c tau_n wrapped to [0, 2pi) [rad]
        Eigen::VectorXd delay; // Element delays tau_n [s]; empty if the configuration is defined by phase only

        std::size_t size() const { return std::size_t(phase.size()); }
        Eigen::VectorXcd omega() const;
        void validate() const;

        static RisConfig from_omega(const Eigen::VectorXcd &omega);
        static RisConfig from_delays(const Eigen::VectorXd &delay, double f_c, double gamma = 1.0);
        static RisConfig off(std::size_t n_elements); // gamma = 0 everywhere
    };

    // Element positions of an RIS in units of wavelengths, local frame, centroid at the origin.
    // The local x-axis is the surface normal.
    struct ArrayGeometry
    {
        Eigen::Matrix3Xd pos;

        std::size_t size() const { return std::size_t(pos.cols()); }

        // N elements along the local y-axis with given spacing, ordered by increasing y
        static ArrayGeometry ula(std::size_t n_elements, double spacing_wl);

        // n_y x n_z planar array in the local y-z plane
        static ArrayGeometry upa(std::size_t n_y, std::size_t n_z, double spacing_wl);
    };

    // Direction in the RIS local frame; elevation is the polar angle from the local z-axis
    struct Angle
    {
        double az = 0.0;
        double el = pi / 2.0;

        Eigen::Vector3d unit() const; // Unit vector pointing from the RIS towards this direction
        Eigen::Vector3d d_unit_d_az() const;
    };

    // Phase pattern a(phi) of a plane wave exchanged with direction phi: a_n = exp(i 2pi <u(phi), r_n>),
    // i.e. exp(-i 2pi <k, r_n>) with k = -u(phi) the propagation direction of the incident wave.
    Eigen::VectorXcd steering_vector(const ArrayGeometry &geometry, const Angle &angle);

    // Derivative of the steering vector with respect to the azimuth
    Eigen::VectorXcd steering_vector_d_az(const ArrayGeometry &geometry, const Angle &angle);

    // b = a(phi_a) .* a(phi_b)
    Eigen::VectorXcd cascade_vector(const Angle &phi_a, const Angle &phi_b, const ArrayGeometry &geometry);
    Eigen::VectorXcd cascade_vector(const Eigen::VectorXcd &a_in, const Eigen::VectorXcd &a_out);

    // Sampling delay that puts the earliest path on tap 0
    double default_sampling_delay(const PathSet &paths);

    // Smallest tap count such that every path satisfies B (tau - eta) <= M - 1 - guard
    std::size_t required_taps(const PathSet &paths, const RadioParams &radio, std::size_t guard = 8);

    // FIR taps of the end-to-end channel including direct paths
    TapVector discrete_impulse_response(const PathSet &paths, const RisConfig &config,
                                        const RadioParams &radio, std::size_t guard = 8);

    // FIR taps of the direct paths only
    TapVector direct_impulse_response(const PathSet &paths, const RadioParams &radio, std::size_t guard = 8);

    // Cascade tap matrix V with h_ris[k] = v_k^T omega
    TapMatrix tap_matrix(const PathSet &paths, const RadioParams &radio, std::size_t guard = 8);

    // hbar[nu] = sum_k h[k] exp(-i 2pi k nu / K), nu = 0 ... K-1
    Eigen::VectorXcd frequency_response(const TapVector &taps, std::size_t K);

    // K x M DFT matrix F[nu, k] = exp(-i 2pi k nu / K)
    Eigen::MatrixXcd dft_matrix(std::size_t K, std::size_t M);

    // Single-tap channel with one path per element and at most one direct path
    cplx narrowband_coefficient(const PathSet &paths, const RisConfig &config, const RadioParams &radio);

    // Far-field form sqrt(alpha beta) exp(i psi) b^T omega
    cplx los_cascade_coefficient(double alpha, double beta, double psi, const Eigen::VectorXcd &b,
                                 const Eigen::VectorXcd &omega);

    // zbar = hbar .* xbar + w with w ~ CN(0, N0) i.i.d.
    Eigen::VectorXcd simulate_ofdm_block(const Eigen::VectorXcd &xbar, const Eigen::VectorXcd &hbar,
                                         double N0, std::uint64_t seed);
    Eigen::VectorXcd simulate_ofdm_block(const Eigen::VectorXcd &xbar, const Eigen::VectorXcd &hbar,
                                         double N0, Rng &rng);
}

#endif
