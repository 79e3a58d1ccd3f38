#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "sonalyzer/common.hpp"

namespace sonalyzer {

struct DspConfig {
    int sr = 22050;
    int hop = 512;
    int n_mels = 128;
    int n_fft = 2048;       // power of two
    bool log_compress = false;  // off by default; log(1+M) when enabled

    int n_bins() const { return n_fft / 2 + 1; }
    void validate() const;
};

struct AudioClip {
    std::vector<float> samples;  // mono
    int sr = 0;

    double duration_s() const {
        return static_cast<double>(samples.size()) / static_cast<double>(sr);
    }
};

/// Number of spectrogram frames for a given duration: floor(dur * sr / hop).
std::int64_t frame_count(double dur_s, int sr, int hop);

/// Triangular mel filters, n_mels x (n_fft/2 + 1), spanning 0 Hz to sr/2.
Matf mel_filterbank(const DspConfig& config);

/// Magnitude-squared STFT, (n_fft/2 + 1) x l_f. Frames are Hann-windowed and
/// centered at i*hop with reflection padding at the edges.
Matf power_spectrogram(const AudioClip& clip, const DspConfig& config);

/// Filterbank-weighted power spectrogram, n_mels x l_f.
/// Throws ContractError when the clip is too short for one frame or its
/// sample rate does not match the config.
Matf mel_spectrogram(const AudioClip& clip, const DspConfig& config);

namespace fft {
/// In-place radix-2 complex FFT; size must be a power of two.
void forward(std::vector<std::complex<float>>& data);
}  // namespace fft

/// Frequency (Hz) -> mel and back, 2595 * log10(1 + f / 700).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

}  // namespace sonalyzer
