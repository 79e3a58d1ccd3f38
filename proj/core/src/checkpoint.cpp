#include "sonalyzer/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace sonalyzer {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint layout assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'S', 'N', 'L', 'Z', 'C', 'K', 'P', '1'};

json model_to_json(const ModelConfig& m) {
    return json{{"channels", m.channels},   {"h_lstm", m.h_lstm},
                {"l_lstm", m.l_lstm},       {"gamma", m.gamma},
                {"n_mels", m.n_mels},       {"mlp_hidden", m.mlp_hidden},
                {"use_agg", m.use_agg},     {"use_pe", m.use_pe},
                {"use_dssm_sum", m.use_dssm_sum},
                {"use_dssm_mean", m.use_dssm_mean},
                {"use_lstm", m.use_lstm}};
}

ModelConfig model_from_json(const json& j) {
    ModelConfig m;
    m.channels = j.at("channels").get<int>();
    m.h_lstm = j.at("h_lstm").get<int>();
    m.l_lstm = j.at("l_lstm").get<int>();
    m.gamma = j.at("gamma").get<int>();
    m.n_mels = j.at("n_mels").get<int>();
    m.mlp_hidden = j.at("mlp_hidden").get<int>();
    m.use_agg = j.at("use_agg").get<bool>();
    m.use_pe = j.at("use_pe").get<bool>();
    m.use_dssm_sum = j.at("use_dssm_sum").get<bool>();
    m.use_dssm_mean = j.at("use_dssm_mean").get<bool>();
    m.use_lstm = j.at("use_lstm").get<bool>();
    return m;
}

json dsp_to_json(const DspConfig& d) {
    return json{{"sr", d.sr},
                {"hop", d.hop},
                {"n_mels", d.n_mels},
                {"n_fft", d.n_fft},
                {"log_compress", d.log_compress}};
}

DspConfig dsp_from_json(const json& j) {
    DspConfig d;
    d.sr = j.at("sr").get<int>();
    d.hop = j.at("hop").get<int>();
    d.n_mels = j.at("n_mels").get<int>();
    d.n_fft = j.at("n_fft").get<int>();
    d.log_compress = j.at("log_compress").get<bool>();
    return d;
}

}  // namespace

void save_checkpoint(const std::string& path, const Network<float>& net,
                     const CheckpointMeta& meta) {
    json tensors = json::array();
    for (const auto& e : net.params().entries())
        tensors.push_back(json{{"name", e.name},
                               {"offset", e.offset},
                               {"rows", e.rows},
                               {"cols", e.cols}});
    json extra = json::array();
    std::uint64_t extra_offset = static_cast<std::uint64_t>(net.params().size());
    for (const auto& [name, values] : meta.extra) {
        extra.push_back(json{{"name", name},
                             {"offset", extra_offset},
                             {"rows", values.size()},
                             {"cols", 1}});
        extra_offset += values.size();
    }
    json header{{"format_version", meta.format_version},
                {"scalar", "f32"},
                {"seed", meta.seed},
                {"epoch", meta.epoch},
                {"best_val_hr3f", meta.best_val_hr3f},
                {"model", model_to_json(net.config())},
                {"dsp", dsp_to_json(meta.dsp)},
                {"tensors", tensors},
                {"extra_tensors", extra}};
    const std::string header_str = header.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write checkpoint: " + path);
    f.write(kMagic, sizeof kMagic);
    const std::uint32_t version = meta.format_version;
    f.write(reinterpret_cast<const char*>(&version), sizeof version);
    const std::uint64_t header_len = header_str.size();
    f.write(reinterpret_cast<const char*>(&header_len), sizeof header_len);
    f.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    const auto& data = net.params().data();
    f.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(sizeof(float) * data.size()));
    for (const auto& [name, values] : meta.extra)
        f.write(reinterpret_cast<const char*>(values.data()),
                static_cast<std::streamsize>(sizeof(float) * values.size()));
    if (!f) throw IoError("checkpoint write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open checkpoint: " + path);
    char magic[8];
    f.read(magic, sizeof magic);
    if (!f || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw CheckpointError("bad checkpoint magic: " + path);
    std::uint32_t version = 0;
    std::uint64_t header_len = 0;
    f.read(reinterpret_cast<char*>(&version), sizeof version);
    f.read(reinterpret_cast<char*>(&header_len), sizeof header_len);
    if (!f || version != 1)
        throw CheckpointError("unsupported checkpoint version in " + path);
    std::string header_str(header_len, '\0');
    f.read(header_str.data(), static_cast<std::streamsize>(header_len));
    if (!f) throw CheckpointError("truncated checkpoint header: " + path);

    json header;
    try {
        header = json::parse(header_str);
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
    }

    LoadedCheckpoint out;
    try {
        out.model = model_from_json(header.at("model"));
        out.meta.format_version = header.at("format_version").get<std::uint32_t>();
        out.meta.seed = header.at("seed").get<std::uint64_t>();
        out.meta.epoch = header.at("epoch").get<int>();
        out.meta.best_val_hr3f = header.at("best_val_hr3f").get<double>();
        out.meta.dsp = dsp_from_json(header.at("dsp"));
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("incomplete checkpoint header: ") + e.what());
    }

    // Validate the tensor directory against the layout this build derives
    // from the stored config.
    Network<float> probe(out.model);
    const auto& expect = probe.params().entries();
    const auto& tensors = header.at("tensors");
    if (tensors.size() != expect.size())
        throw CheckpointError("checkpoint tensor directory mismatch: " + path);
    for (std::size_t i = 0; i < expect.size(); ++i) {
        const auto& t = tensors[i];
        if (t.at("name").get<std::string>() != expect[i].name ||
            t.at("offset").get<Index>() != expect[i].offset ||
            t.at("rows").get<Index>() != expect[i].rows ||
            t.at("cols").get<Index>() != expect[i].cols)
            throw CheckpointError("checkpoint tensor '" + expect[i].name +
                                  "' does not match the stored config: " + path);
    }

    out.flat_params.resize(static_cast<std::size_t>(probe.params().size()));
    f.read(reinterpret_cast<char*>(out.flat_params.data()),
           static_cast<std::streamsize>(sizeof(float) * out.flat_params.size()));
    if (!f) throw CheckpointError("truncated checkpoint data: " + path);

    for (const auto& t : header.at("extra_tensors")) {
        std::vector<float> values(t.at("rows").get<std::size_t>());
        f.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(sizeof(float) * values.size()));
        if (!f) throw CheckpointError("truncated checkpoint extras: " + path);
        out.meta.extra[t.at("name").get<std::string>()] = std::move(values);
    }
    return out;
}

Network<float> restore_network(const LoadedCheckpoint& ckpt) {
    Network<float> net(ckpt.model);
    net.params().data() = ckpt.flat_params;
    return net;
}

}  // namespace sonalyzer
