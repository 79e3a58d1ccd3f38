#include "sonalyzer/dsp.hpp"

#include <cmath>
#include <numbers>

namespace sonalyzer {

void DspConfig::validate() const {
    if (sr <= 0) throw ContractError("sr must be positive");
    if (hop <= 0 || hop > n_fft) throw ContractError("hop must satisfy 0 < hop <= n_fft");
    if (n_mels < 1) throw ContractError("n_mels must be >= 1");
    if (n_fft < 2 || (n_fft & (n_fft - 1)) != 0)
        throw ContractError("n_fft must be a power of two");
}

std::int64_t frame_count(double dur_s, int sr, int hop) {
    if (dur_s <= 0.0) return 0;
    return static_cast<std::int64_t>(std::floor(dur_s * sr / hop));
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace fft {

void forward(std::vector<std::complex<float>>& data) {
    const std::size_t n = data.size();
    if (n < 2) return;
    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = data[i + k];
                const std::complex<double> v =
                    std::complex<double>(data[i + k + len / 2]) * w;
                data[i + k] = std::complex<float>(u + v);
                data[i + k + len / 2] = std::complex<float>(u - v);
                w *= wlen;
            }
        }
    }
}

}  // namespace fft

Matf mel_filterbank(const DspConfig& config) {
    config.validate();
    const int n_bins = config.n_bins();
    const double mel_max = hz_to_mel(config.sr / 2.0);
    // n_mels + 2 points evenly spaced on the mel axis; filter m rises over
    // [f_m, f_{m+1}] and falls over [f_{m+1}, f_{m+2}].
    std::vector<double> hz_points(config.n_mels + 2);
    for (int i = 0; i < config.n_mels + 2; ++i)
        hz_points[i] = mel_to_hz(mel_max * i / (config.n_mels + 1));

    Matf bank = Matf::Zero(config.n_mels, n_bins);
    for (int m = 0; m < config.n_mels; ++m) {
        const double lo = hz_points[m], mid = hz_points[m + 1], hi = hz_points[m + 2];
        for (int b = 0; b < n_bins; ++b) {
            const double f = static_cast<double>(b) * config.sr / config.n_fft;
            double w = 0.0;
            if (f > lo && f < hi) {
                w = f <= mid ? (f - lo) / std::max(mid - lo, 1e-12)
                             : (hi - f) / std::max(hi - mid, 1e-12);
            }
            bank(m, b) = static_cast<float>(w);
        }
    }
    return bank;
}

namespace {

// Mirror an out-of-range sample index without repeating the edge sample.
std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

}  // namespace

Matf power_spectrogram(const AudioClip& clip, const DspConfig& config) {
    config.validate();
    if (clip.sr != config.sr)
        throw ContractError("clip sample rate " + std::to_string(clip.sr) +
                            " does not match config sr " + std::to_string(config.sr));
    const auto n_samples = static_cast<std::int64_t>(clip.samples.size());
    const std::int64_t l_f = n_samples / config.hop;
    if (l_f < 1) throw ContractError("clip too short for a single frame");

    std::vector<float> window(config.n_fft);
    for (int i = 0; i < config.n_fft; ++i)
        window[i] = 0.5f - 0.5f * static_cast<float>(
                                      std::cos(2.0 * std::numbers::pi * i / config.n_fft));

    const int n_bins = config.n_bins();
    Matf S(n_bins, l_f);
    std::vector<std::complex<float>> buf(config.n_fft);
    for (std::int64_t t = 0; t < l_f; ++t) {
        const std::int64_t center = t * config.hop;
        const std::int64_t start = center - config.n_fft / 2;
        for (int i = 0; i < config.n_fft; ++i) {
            const auto idx = reflect_index(start + i, n_samples);
            buf[i] = clip.samples[static_cast<std::size_t>(idx)] * window[i];
        }
        fft::forward(buf);
        for (int b = 0; b < n_bins; ++b) S(b, t) = std::norm(buf[b]);
    }
    return S;
}

Matf mel_spectrogram(const AudioClip& clip, const DspConfig& config) {
    const Matf S = power_spectrogram(clip, config);
    const Matf bank = mel_filterbank(config);
    Matf M = bank * S;
    M = M.cwiseMax(0.0f);  // clamp tiny negative rounding
    if (config.log_compress)
        M = (M.array() + 1.0f).log().matrix();
    return M;
}

}  // namespace sonalyzer
