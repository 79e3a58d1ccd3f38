#include "sonalyzer/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace sonalyzer {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(x & 0xff);
    v.push_back((x >> 8) & 0xff);
    v.push_back((x >> 16) & 0xff);
    v.push_back((x >> 24) & 0xff);
}

void put_u16(std::vector<unsigned char>& v, std::uint16_t x) {
    v.push_back(x & 0xff);
    v.push_back((x >> 8) & 0xff);
}

}  // namespace

AudioClip read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open audio file: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw IoError("not a RIFF/WAVE file: " + path);

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t sr = 0;
    std::size_t data_off = 0, data_len = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t len = read_u32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + len > bytes.size()) break;
        if (std::memcmp(id, "fmt ", 4) == 0 && len >= 16) {
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            sr = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            if (format == 0xFFFE && len >= 40)  // extensible: sub-format GUID
                format = read_u16(bytes.data() + body + 24);
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_off = body;
            data_len = len;
        }
        pos = body + len + (len & 1);
    }
    if (channels == 0 || sr == 0) throw IoError("missing fmt chunk: " + path);
    if (data_len == 0) throw IoError("zero-length audio: " + path);

    const std::size_t bytes_per_sample = bits / 8;
    if (bytes_per_sample == 0) throw IoError("bad bits-per-sample: " + path);
    const std::size_t n_frames = data_len / (bytes_per_sample * channels);
    if (n_frames == 0) throw IoError("zero-length audio: " + path);

    auto sample_at = [&](std::size_t frame, std::size_t ch) -> float {
        const unsigned char* p =
            bytes.data() + data_off + (frame * channels + ch) * bytes_per_sample;
        if (format == 3 && bits == 32) {
            float f;
            std::memcpy(&f, p, 4);
            return f;
        }
        if (format == 1 && bits == 16) {
            const auto v = static_cast<std::int16_t>(read_u16(p));
            return static_cast<float>(v) / 32768.0f;
        }
        if (format == 1 && bits == 24) {
            std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
            if (v & 0x800000) v |= ~0xFFFFFF;
            return static_cast<float>(v) / 8388608.0f;
        }
        if (format == 1 && bits == 32) {
            const auto v = static_cast<std::int32_t>(read_u32(p));
            return static_cast<float>(v) / 2147483648.0f;
        }
        throw IoError("unsupported WAV codec (format " + std::to_string(format) +
                      ", " + std::to_string(bits) + " bit)");
    };

    AudioClip clip;
    clip.sr = static_cast<int>(sr);
    clip.samples.resize(n_frames);
    for (std::size_t fidx = 0; fidx < n_frames; ++fidx) {
        float acc = 0.0f;
        for (std::size_t ch = 0; ch < channels; ++ch) acc += sample_at(fidx, ch);
        clip.samples[fidx] = acc / static_cast<float>(channels);
    }
    return clip;
}

void write_wav_pcm16(const std::string& path, std::span<const float> samples, int sr) {
    std::vector<unsigned char> out;
    const std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 2);
    out.reserve(44 + data_len);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_len);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, static_cast<std::uint32_t>(sr));
    put_u32(out, static_cast<std::uint32_t>(sr) * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_len);
    for (float s : samples) {
        const float clamped = std::clamp(s, -1.0f, 1.0f);
        const auto v = static_cast<std::int16_t>(std::lrintf(clamped * 32767.0f));
        put_u16(out, static_cast<std::uint16_t>(v));
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write: " + path);
    f.write(reinterpret_cast<const char*>(out.data()),
            static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + path);
}

std::vector<float> resample(const std::vector<float>& in, int sr_in, int sr_out) {
    if (sr_in <= 0 || sr_out <= 0) throw ContractError("sample rates must be positive");
    if (sr_in == sr_out) return in;
    if (in.empty()) return {};

    const double ratio = static_cast<double>(sr_out) / sr_in;
    const auto n_out = static_cast<std::size_t>(
        std::llround(static_cast<double>(in.size()) * ratio));
    const double cutoff = std::min(1.0, ratio);  // anti-alias when downsampling
    constexpr int kTaps = 32;

    std::vector<float> out(n_out);
    const auto n_in = static_cast<std::int64_t>(in.size());
    for (std::size_t n = 0; n < n_out; ++n) {
        const double t = static_cast<double>(n) / ratio;  // position in input samples
        const auto m0 = static_cast<std::int64_t>(std::floor(t)) - kTaps + 1;
        const auto m1 = static_cast<std::int64_t>(std::floor(t)) + kTaps;
        double acc = 0.0;
        for (std::int64_t m = std::max<std::int64_t>(0, m0);
             m <= std::min(n_in - 1, m1); ++m) {
            const double x = t - static_cast<double>(m);
            const double sx = cutoff * x;
            const double sinc =
                sx == 0.0 ? 1.0
                          : std::sin(std::numbers::pi * sx) / (std::numbers::pi * sx);
            // Hann window over the 2*kTaps support
            const double w = 0.5 + 0.5 * std::cos(std::numbers::pi * x / kTaps);
            acc += in[static_cast<std::size_t>(m)] * cutoff * sinc * w;
        }
        out[n] = static_cast<float>(acc);
    }
    return out;
}

AudioClip load_audio(const std::string& path, const DspConfig& config) {
    AudioClip clip = read_wav(path);
    if (clip.samples.empty()) throw IoError("zero-length audio: " + path);
    if (clip.sr != config.sr) {
        clip.samples = resample(clip.samples, clip.sr, config.sr);
        clip.sr = config.sr;
    }
    for (float s : clip.samples)
        if (!std::isfinite(s)) throw IoError("non-finite sample in " + path);
    return clip;
}

}  // namespace sonalyzer
