#pragma once

#include <span>
#include <string>
#include <vector>

#include "sonalyzer/dsp.hpp"

namespace sonalyzer {

/// Decode a WAV file (PCM 16/24/32 or IEEE float32) to mono at its native
/// rate; multi-channel input is mixed down by arithmetic mean.
AudioClip read_wav(const std::string& path);

void write_wav_pcm16(const std::string& path, std::span<const float> samples, int sr);

/// Band-limited (windowed-sinc) sample-rate conversion.
std::vector<float> resample(const std::vector<float>& in, int sr_in, int sr_out);

/// read_wav + resample to config.sr. Throws IoError on unreadable or
/// zero-length input.
AudioClip load_audio(const std::string& path, const DspConfig& config);

}  // namespace sonalyzer
