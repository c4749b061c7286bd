#include "ndb/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "ndb/analytics.hpp"
#include "ndb/errors.hpp"

namespace ndb {

namespace {

// FFTW's planner is not re-entrant.
std::mutex planner_mutex;

struct FftwPlan {
    double* in = nullptr;
    fftw_complex* out = nullptr;
    fftw_plan plan = nullptr;

    explicit FftwPlan(std::size_t n) {
        std::lock_guard lock(planner_mutex);
        in = fftw_alloc_real(n);
        out = fftw_alloc_complex(n / 2 + 1);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    ~FftwPlan() {
        std::lock_guard lock(planner_mutex);
        fftw_destroy_plan(plan);
        fftw_free(in);
        fftw_free(out);
    }
    FftwPlan(const FftwPlan&) = delete;
    FftwPlan& operator=(const FftwPlan&) = delete;
};

}  // namespace

double gouy_attenuation(const ParticleParams& particle, const TrapParams& trap) {
    return axial_displacement_ratio(particle, trap);
}

PsdResult estimate_psd(const std::vector<double>& series, double dt, std::size_t segment_length, double overlap) {
    if (!(dt > 0.0)) {
        throw InsufficientData("sampling interval must be positive");
    }
    if (segment_length < 8 || series.size() < segment_length) {
        throw InsufficientData("series shorter than one PSD segment");
    }
    if (!(overlap >= 0.0 && overlap < 1.0)) {
        throw InsufficientData("PSD overlap must lie in [0, 1)");
    }
    const std::size_t n = segment_length;
    const std::size_t hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * (1.0 - overlap))));
    std::vector<double> w(n);
    double wsum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
        wsum_sq += w[i] * w[i];
    }
    const std::size_t nbins = n / 2 + 1;
    PsdResult r;
    r.dt = dt;
    r.segment_length = n;
    r.overlap = overlap;
    r.psd.assign(nbins, 0.0);
    r.frequency_hz.resize(nbins);
    for (std::size_t k = 0; k < nbins; ++k) {
        r.frequency_hz[k] = static_cast<double>(k) / (dt * static_cast<double>(n));
    }
    FftwPlan fft(n);
    for (std::size_t start = 0; start + n <= series.size(); start += hop) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += series[start + i];
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) fft.in[i] = (series[start + i] - mean) * w[i];
        fftw_execute(fft.plan);
        for (std::size_t k = 0; k < nbins; ++k) {
            r.psd[k] += fft.out[k][0] * fft.out[k][0] + fft.out[k][1] * fft.out[k][1];
        }
        ++r.segments;
    }
    const double fs = 1.0 / dt;
    for (std::size_t k = 0; k < nbins; ++k) {
        const bool edge = k == 0 || (n % 2 == 0 && k == nbins - 1);
        r.psd[k] *= (edge ? 1.0 : 2.0) / (fs * wsum_sq * static_cast<double>(r.segments));
    }
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(series.size());
    double var = 0.0;
    for (double v : series) var += (v - mean) * (v - mean);
    r.variance = var / static_cast<double>(series.size());
    const double df = r.bin_width();
    for (double p : r.psd) r.integrated += p * df;
    return r;
}

std::vector<Peak> local_peaks(const PsdResult& psd, std::optional<std::pair<double, double>> band) {
    const auto& p = psd.psd;
    const auto& f = psd.frequency_hz;
    std::size_t lo = 1, hi = p.size() >= 2 ? p.size() - 2 : 0;
    if (band) {
        while (lo < p.size() && f[lo] < band->first) ++lo;
        while (hi > 0 && f[hi] > band->second) --hi;
        lo = std::max<std::size_t>(lo, 1);
        hi = std::min(hi, p.size() >= 2 ? p.size() - 2 : 0);
    }
    std::vector<Peak> out;
    if (lo > hi) {
        return out;
    }
    std::vector<double> in_band(p.begin() + static_cast<long>(lo), p.begin() + static_cast<long>(hi) + 1);
    std::nth_element(in_band.begin(), in_band.begin() + static_cast<long>(in_band.size() / 2), in_band.end());
    const double floor = 3.0 * in_band[in_band.size() / 2];
    const double df = psd.bin_width();
    for (std::size_t k = lo; k <= hi; ++k) {
        if (!(p[k] > p[k - 1] && p[k] >= p[k + 1] && p[k] > floor)) {
            continue;
        }
        // parabola through log power of the three bins
        const double a = std::log(p[k - 1]), b = std::log(p[k]), c = std::log(p[k + 1]);
        const double denom = a - 2.0 * b + c;
        const double shift = denom < 0.0 ? std::clamp(0.5 * (a - c) / denom, -0.5, 0.5) : 0.0;
        Peak pk;
        pk.frequency_hz = f[k] + shift * df;
        pk.height = std::exp(b - 0.25 * (a - c) * shift);
        const double half = 0.5 * p[k];
        std::size_t l = k, r = k;
        while (l > 0 && p[l] > half) --l;
        while (r + 1 < p.size() && p[r] > half) ++r;
        auto cross = [&](std::size_t i0, std::size_t i1) {
            const double t = (half - p[i0]) / (p[i1] - p[i0]);
            return f[i0] + t * (f[i1] - f[i0]);
        };
        const double fl = p[l] <= half ? cross(l, l + 1) : f[l];
        const double fr = p[r] <= half ? cross(r, r - 1) : f[r];
        pk.width_hz = fr - fl;
        out.push_back(pk);
    }
    std::sort(out.begin(), out.end(), [](const Peak& x, const Peak& y) { return x.height > y.height; });
    return out;
}

std::vector<Peak> find_peaks(const PsdResult& psd, std::size_t n, std::optional<std::pair<double, double>> band) {
    if (n == 0) {
        throw PeaksNotFound("requested zero peaks");
    }
    auto peaks = local_peaks(psd, band);
    if (peaks.size() < n) {
        throw PeaksNotFound("found " + std::to_string(peaks.size()) + " peaks above the floor, wanted " +
                            std::to_string(n));
    }
    peaks.resize(n);
    return peaks;
}

}  // namespace ndb
