#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "ndb/physics.hpp"

namespace ndb {

// Homodyne 45-degree signal, sin^2(b) cos(a) sin(a) ~ xi near equilibrium.
inline double signal_p45(const EulerState& s) {
    const double sb = std::sin(s.beta);
    return sb * sb * std::cos(s.alpha) * std::sin(s.alpha);
}

// Split-detection signal, cos(b) sin(b) cos(a) ~ eta near equilibrium.
inline double signal_split(const EulerState& s) {
    return std::cos(s.beta) * std::sin(s.beta) * std::cos(s.alpha);
}

// z_d / z_R; multiplies homodyne signals when the Gouy toggle is on.
double gouy_attenuation(const ParticleParams& particle, const TrapParams& trap);

struct PsdResult {
    std::vector<double> frequency_hz;
    std::vector<double> psd;  // signal^2 / Hz, one-sided
    double dt = 0.0;
    std::size_t segment_length = 0;
    std::size_t segments = 0;
    double overlap = 0.5;
    const char* window = "hann";
    double variance = 0.0;       // of the (mean-removed) input
    double integrated = 0.0;     // sum psd * df

    double bin_width() const { return 1.0 / (dt * static_cast<double>(segment_length)); }
    // integrated / variance; ~1 for stationary input
    double parseval_ratio() const { return variance > 0.0 ? integrated / variance : 0.0; }
};

// Welch estimate: Hann window, mean removed per segment, density scaled by
// 2 / (fs sum w^2) off the DC and Nyquist bins. Throws InsufficientData.
PsdResult estimate_psd(const std::vector<double>& series, double dt, std::size_t segment_length,
                       double overlap = 0.5);

struct Peak {
    double frequency_hz = 0.0;
    double height = 0.0;
    double width_hz = 0.0;  // full width at half maximum
};

// The n highest local maxima above 3x the median level, highest first, with
// parabolic interpolation of the peak position. Optional band in Hz.
// Throws PeaksNotFound.
std::vector<Peak> find_peaks(const PsdResult& psd, std::size_t n,
                             std::optional<std::pair<double, double>> band = {});

// All local maxima above the floor, highest first (never throws).
std::vector<Peak> local_peaks(const PsdResult& psd, std::optional<std::pair<double, double>> band = {});

}  // namespace ndb
