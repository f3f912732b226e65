#include "crossfuse/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

#include "crossfuse/errors.hpp"

namespace crossfuse {

namespace {

using nlohmann::json;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint64_t get_u64(std::span<const std::uint8_t> b, std::size_t at)
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(b[at + i]) << (8 * i);
    }
    return v;
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at)
{
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
    }
    return v;
}

const char* kind_name(LayerKind k)
{
    switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::strided_conv: return "strided_conv";
    case LayerKind::transposed_conv: return "transposed_conv";
    }
    return "conv";
}

LayerKind parse_kind(const std::string& s)
{
    if (s == "conv") return LayerKind::conv;
    if (s == "strided_conv") return LayerKind::strided_conv;
    if (s == "transposed_conv") return LayerKind::transposed_conv;
    throw VersionError("unknown layer kind '" + s + "'");
}

json spec_json(const NetworkSpec& spec)
{
    json layers = json::array();
    for (const LayerSpec& l : spec.layers) {
        layers.push_back({{"index", l.index},
                          {"kind", kind_name(l.kind)},
                          {"kernel_h", l.kernel_h},
                          {"kernel_w", l.kernel_w},
                          {"stride", l.stride},
                          {"dilation_h", l.dilation_h},
                          {"dilation_w", l.dilation_w},
                          {"pad_h", l.pad_h},
                          {"pad_w", l.pad_w},
                          {"in_channels", l.in_channels},
                          {"out_channels", l.out_channels},
                          {"dropout_p", l.dropout_p},
                          {"has_elu", l.has_elu}});
    }
    return {{"first_layer_feature_maps", spec.first_layer_feature_maps},
            {"num_classes", spec.num_classes},
            {"layers", layers}};
}

NetworkSpec spec_from(const json& j)
{
    NetworkSpec s;
    s.first_layer_feature_maps = j.at("first_layer_feature_maps").get<int>();
    s.num_classes = j.at("num_classes").get<int>();
    for (const json& lj : j.at("layers")) {
        LayerSpec l;
        l.index = lj.at("index").get<int>();
        l.kind = parse_kind(lj.at("kind").get<std::string>());
        l.kernel_h = lj.at("kernel_h").get<int>();
        l.kernel_w = lj.at("kernel_w").get<int>();
        l.stride = lj.at("stride").get<int>();
        l.dilation_h = lj.at("dilation_h").get<int>();
        l.dilation_w = lj.at("dilation_w").get<int>();
        l.pad_h = lj.at("pad_h").get<int>();
        l.pad_w = lj.at("pad_w").get<int>();
        l.in_channels = lj.at("in_channels").get<int>();
        l.out_channels = lj.at("out_channels").get<int>();
        l.dropout_p = lj.at("dropout_p").get<double>();
        l.has_elu = lj.at("has_elu").get<bool>();
        s.layers.push_back(l);
    }
    return s;
}

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string spec_to_json(const NetworkSpec& spec)
{
    return spec_json(spec).dump();
}

NetworkSpec spec_from_json(const std::string& text)
{
    try {
        return spec_from(json::parse(text));
    } catch (const json::exception& e) {
        throw ParseError(std::string("network spec JSON: ") + e.what());
    }
}

std::vector<std::uint8_t> serialize(const FusionNetwork& net)
{
    // parameters() needs a mutable network; the views are only read here.
    FusionNetwork& mut = const_cast<FusionNetwork&>(net);
    const std::vector<ParamView> views = mut.parameters();

    json tensors = json::array();
    for (const ParamView& v : views) {
        tensors.push_back({{"name", v.name}, {"count", v.value.size()}});
    }
    const json header = {{"mode", to_string(net.mode())},
                         {"modality", to_string(net.modality())},
                         {"spec", spec_json(net.spec())},
                         {"metadata", net.metadata()},
                         {"tensors", tensors}};
    const std::string text = header.dump();

    std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + 8);
    put_u32(out, kCheckpointVersion);
    put_u64(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    for (const ParamView& v : views) {
        for (double d : v.value) {
            put_u64(out, std::bit_cast<std::uint64_t>(d));
        }
    }
    put_u64(out, fnv1a64(out));
    return out;
}

FusionNetwork deserialize(std::span<const std::uint8_t> bytes)
{
    constexpr std::size_t fixed = 8 + 4 + 8 + 8;
    if (bytes.size() < fixed || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
        throw ChecksumError("checkpoint: missing magic or truncated file");
    }
    const std::uint64_t stored = get_u64(bytes, bytes.size() - 8);
    if (fnv1a64(bytes.first(bytes.size() - 8)) != stored) {
        throw ChecksumError("checkpoint: checksum mismatch, file is corrupt");
    }
    const std::uint32_t version = get_u32(bytes, 8);
    if (version != kCheckpointVersion) {
        throw VersionError("checkpoint: format version " + std::to_string(version) +
                           " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const std::uint64_t header_len = get_u64(bytes, 12);
    if (header_len > bytes.size() - fixed) {
        throw ChecksumError("checkpoint: header length exceeds file size");
    }
    const std::string text(reinterpret_cast<const char*>(bytes.data() + 20), header_len);

    json header;
    try {
        header = json::parse(text);
    } catch (const json::exception& e) {
        throw ChecksumError(std::string("checkpoint: unreadable header: ") + e.what());
    }

    FusionNetwork net = [&] {
        try {
            return FusionNetwork(parse_fusion_mode(header.at("mode").get<std::string>()),
                                 parse_modality(header.at("modality").get<std::string>()),
                                 spec_from(header.at("spec")));
        } catch (const json::exception& e) {
            throw VersionError(std::string("checkpoint: header fields: ") + e.what());
        } catch (const SpecError& e) {
            throw VersionError(std::string("checkpoint: stored spec is invalid: ") + e.what());
        }
    }();
    for (const auto& [k, v] : header.at("metadata").items()) {
        net.metadata()[k] = v.get<std::string>();
    }

    std::vector<ParamView> views = net.parameters();
    const json& table = header.at("tensors");
    if (table.size() != views.size()) {
        throw VersionError("checkpoint: tensor table has " + std::to_string(table.size()) +
                           " entries, network expects " + std::to_string(views.size()));
    }
    std::size_t at = 20 + header_len;
    for (std::size_t i = 0; i < views.size(); ++i) {
        const std::string name = table[i].at("name").get<std::string>();
        const std::size_t count = table[i].at("count").get<std::size_t>();
        if (name != views[i].name || count != views[i].value.size()) {
            throw VersionError("checkpoint: tensor '" + name + "' does not match network tensor '" +
                               views[i].name + "'");
        }
        if (at + count * 8 > bytes.size() - 8) {
            throw ChecksumError("checkpoint: payload truncated");
        }
        for (std::size_t k = 0; k < count; ++k) {
            views[i].value[k] = std::bit_cast<double>(get_u64(bytes, at));
            at += 8;
        }
    }
    if (at != bytes.size() - 8) {
        throw ChecksumError("checkpoint: trailing bytes after payload");
    }
    return net;
}

void save_checkpoint(const FusionNetwork& net, const std::filesystem::path& path)
{
    const std::vector<std::uint8_t> bytes = serialize(net);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw IoError("cannot write checkpoint " + path.string());
    }
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) {
        throw IoError("failed writing checkpoint " + path.string());
    }
}

FusionNetwork load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open checkpoint " + path.string());
    }
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace crossfuse
