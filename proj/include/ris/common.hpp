// SPDX-License-Identifier: Apache-2.0

#ifndef RIS_COMMON_HPP
#define RIS_COMMON_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace ris
{
    using cplx = std::complex<double>;
    using Rng = std::mt19937_64;

    inline constexpr double speed_of_light = 299792458.0; // [m/s]
    inline constexpr double pi = std::numbers::pi;
    inline constexpr cplx I{0.0, 1.0};

    inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
    inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }
    inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

    // Wraps a phase to [0, 2pi)
    inline double wrap_phase(double phase)
    {
        double w = std::fmod(phase, 2.0 * pi);
        if (w < 0.0)
            w += 2.0 * pi;
        if (w >= 2.0 * pi)
            w = 0.0;
        return w;
    }

    // Normalized sinc, sin(pi x) / (pi x)
    inline double sinc(double x)
    {
        if (std::abs(x) < 1e-12)
            return 1.0;
        double px = pi * x;
        return std::sin(px) / px;
    }

    // Circularly-symmetric complex Gaussian with variance "var"
    inline cplx complex_normal(Rng &rng, double var)
    {
        std::normal_distribution<double> n(0.0, std::sqrt(0.5 * var));
        double re = n(rng);
        double im = n(rng);
        return {re, im};
    }

    // Derives a child seed from a base seed and a stream index (splitmix64)
    inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream)
    {
        std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Raised when a parameter cannot be recovered from the available observations
    class NonIdentifiableError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Raised when measurements are inconsistent with any geometry
    class InfeasibleMeasurementError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };
}

#endif
