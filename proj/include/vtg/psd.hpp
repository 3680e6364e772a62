#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vtg/errors.hpp"

namespace vtg {

struct PsdSpectrum {
    std::vector<double> frequency_hz;  // [0, fs/2]
    std::vector<double> power;         // one-sided density, units^2 / Hz
    std::string window = "hamming";
    int segment = 512;
    double overlap = 0.5;
};

struct PsdPeak {
    double frequency_hz = 0;
    double power = 0;
};

namespace detail {

inline void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    if (n < 2) return;
    // Bit-reversal permutation, then iterative Cooley-Tukey.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

inline std::vector<std::complex<double>> dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if ((n & (n - 1)) == 0) {
        std::vector<std::complex<double>> a(x.begin(), x.end());
        fft_inplace(a);
        return a;
    }
    // Non-power-of-two segment sizes fall back to the direct transform.
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * j) /
                               static_cast<double>(n);
            acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

inline std::vector<double> hamming_window(int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i)
        w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / n);  // periodic form
    return w;
}

}  // namespace detail

/// Welch-averaged one-sided periodogram. Segments of `segment` samples are
/// Hamming-windowed, overlapped by `overlap`, and averaged. No detrending is
/// applied, so a constant signal lands entirely in the 0 Hz bin.
inline PsdSpectrum welch_psd(const std::vector<double>& signal,
                             double fs,
                             int segment = 512,
                             double overlap = 0.5) {
    if (!(fs > 0)) throw DomainError("sampling frequency must be positive");
    if (segment < 2) throw DomainError("segment size must be >= 2");
    if (!(overlap >= 0 && overlap < 1)) throw DomainError("overlap must lie in [0,1)");
    if (signal.size() < static_cast<std::size_t>(segment)) {
        std::ostringstream os;
        os << "signal too short for PSD: " << signal.size() << " samples, need at least "
           << segment;
        throw Error(os.str());
    }

    const auto win = detail::hamming_window(segment);
    double win_power = 0;
    for (double w : win) win_power += w * w;

    const std::size_t hop =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(segment * (1.0 - overlap))));
    const std::size_t n_bins = static_cast<std::size_t>(segment) / 2 + 1;

    std::vector<double> acc(n_bins, 0.0);
    std::size_t n_segments = 0;
    std::vector<double> buf(segment);
    for (std::size_t start = 0; start + segment <= signal.size(); start += hop) {
        for (int i = 0; i < segment; ++i) buf[i] = signal[start + i] * win[i];
        const auto spec = detail::dft(buf);
        for (std::size_t k = 0; k < n_bins; ++k) acc[k] += std::norm(spec[k]);
        ++n_segments;
    }

    PsdSpectrum out;
    out.segment = segment;
    out.overlap = overlap;
    out.frequency_hz.resize(n_bins);
    out.power.resize(n_bins);
    const double scale = 1.0 / (fs * win_power * static_cast<double>(n_segments));
    for (std::size_t k = 0; k < n_bins; ++k) {
        out.frequency_hz[k] = fs * static_cast<double>(k) / static_cast<double>(segment);
        double p = acc[k] * scale;
        if (k != 0 && !(segment % 2 == 0 && k == n_bins - 1)) p *= 2.0;  // one-sided fold
        out.power[k] = p;
    }
    return out;
}

/// Local maxima of the spectrum sorted by power, strongest first. Falls back
/// to the largest bins when the spectrum has fewer than k local maxima.
inline std::vector<PsdPeak> top_peaks(const PsdSpectrum& spectrum, int k = 3) {
    std::vector<PsdPeak> peaks;
    const auto& p = spectrum.power;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool left_ok = i == 0 || p[i] > p[i - 1];
        const bool right_ok = i + 1 == p.size() || p[i] >= p[i + 1];
        if (left_ok && right_ok) peaks.push_back({spectrum.frequency_hz[i], p[i]});
    }
    std::sort(peaks.begin(), peaks.end(),
              [](const PsdPeak& a, const PsdPeak& b) { return a.power > b.power; });
    if (static_cast<int>(peaks.size()) < k) {
        std::vector<std::size_t> idx(p.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
        peaks.clear();
        for (std::size_t i = 0; i < idx.size() && static_cast<int>(peaks.size()) < k; ++i)
            peaks.push_back({spectrum.frequency_hz[idx[i]], p[idx[i]]});
    }
    if (static_cast<int>(peaks.size()) > k) peaks.resize(k);
    return peaks;
}

/// Per-layer, per-axis vibration amplitude of an acceleration record.
struct LayerAmplitude {
    int layer = 0;            // 1-based
    bool present = true;      // false when the layer window holds no samples
    std::array<double, 3> rms{};   // per axis
    std::array<double, 3> peak{};  // per axis, max |a|
    double combined_rms = 0;       // sqrt(mean of squared samples across axes)
};

/// Splits a uniformly sampled (t, 3-axis acceleration) record along layer
/// time boundaries. `boundaries` has n_layers+1 entries; layer j covers
/// [boundaries[j-1], boundaries[j]).
inline std::vector<LayerAmplitude> layered_amplitude(
    const std::vector<double>& t,
    const std::array<std::vector<double>, 3>& accel,
    const std::vector<double>& boundaries) {
    if (boundaries.size() < 2) throw DomainError("need at least one layer window");
    for (const auto& a : accel)
        if (a.size() != t.size()) throw DomainError("acceleration/time length mismatch");

    std::vector<LayerAmplitude> out;
    for (std::size_t j = 0; j + 1 < boundaries.size(); ++j) {
        LayerAmplitude la;
        la.layer = static_cast<int>(j) + 1;
        std::size_t count = 0;
        std::array<double, 3> sumsq{};
        double total_sq = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] < boundaries[j] || t[i] >= boundaries[j + 1]) continue;
            ++count;
            for (int ax = 0; ax < 3; ++ax) {
                const double v = accel[ax][i];
                sumsq[ax] += v * v;
                total_sq += v * v;
                la.peak[ax] = std::max(la.peak[ax], std::abs(v));
            }
        }
        if (count == 0) {
            la.present = false;
        } else {
            for (int ax = 0; ax < 3; ++ax) la.rms[ax] = std::sqrt(sumsq[ax] / count);
            la.combined_rms = std::sqrt(total_sq / (3.0 * static_cast<double>(count)));
        }
        out.push_back(la);
    }
    return out;
}

/// (after - before) / before per layer on the combined RMS; empty optionals
/// mark layers absent from either run or with zero baseline.
inline std::vector<std::optional<double>> relative_rates(
    const std::vector<LayerAmplitude>& before, const std::vector<LayerAmplitude>& after) {
    const std::size_t n = std::min(before.size(), after.size());
    std::vector<std::optional<double>> rates(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!before[i].present || !after[i].present || before[i].combined_rms == 0) continue;
        rates[i] = (after[i].combined_rms - before[i].combined_rms) / before[i].combined_rms;
    }
    return rates;
}

}  // namespace vtg
