#include "naenc/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "naenc/errors.hpp"

namespace naenc {

namespace {

constexpr char kMagic[8] = {'N', 'A', 'E', 'N', 'C', 'C', 'K', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("checkpoint: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw FormatError("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    const std::uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

} // namespace

void save_checkpoint(const std::string& path,
                     const ModelParams& params,
                     const EncoderStackConfig& config,
                     const std::string& vocab_hash_hex) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FormatError("checkpoint: cannot open '" + path + "' for writing");
    }
    out.write(kMagic, sizeof(kMagic));

    nlohmann::json header;
    header["config"] = nlohmann::json::parse(config.to_json());
    header["vocab_hash"] = vocab_hash_hex;
    const std::string header_text = header.dump();
    put_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));

    put_u64(out, params.registry.size());
    for (const NamedParam& p : params.registry) {
        put_u32(out, static_cast<std::uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        const Tensor& t = p.var->value;
        put_u32(out, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t extent : t.shape()) put_u64(out, extent);
        for (real v : t.values()) put_f64(out, static_cast<double>(v));
    }
    if (!out) {
        throw FormatError("checkpoint: write to '" + path + "' failed");
    }
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("checkpoint: cannot open '" + path + "'");
    }
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw FormatError("checkpoint: '" + path + "' is not a checkpoint file");
    }

    const std::uint32_t header_len = get_u32(in);
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), header_len);
    if (!in) throw FormatError("checkpoint: truncated header");

    LoadedCheckpoint loaded;
    nlohmann::json header = nlohmann::json::parse(header_text);
    loaded.config = EncoderStackConfig::from_json(header.at("config").dump());
    loaded.vocab_hash_hex = header.at("vocab_hash").get<std::string>();

    const std::uint64_t count = get_u64(in);
    for (std::uint64_t t = 0; t < count; ++t) {
        const std::uint32_t name_len = get_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw FormatError("checkpoint: truncated tensor name");
        const std::uint32_t rank = get_u32(in);
        std::vector<std::size_t> shape(rank);
        std::size_t total = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            shape[r] = static_cast<std::size_t>(get_u64(in));
            total *= shape[r];
        }
        std::vector<real> values(total);
        for (std::size_t i = 0; i < total; ++i) {
            values[i] = static_cast<real>(get_f64(in));
        }
        loaded.tensors.emplace(std::move(name), Tensor(std::move(shape), std::move(values)));
    }
    return loaded;
}

ModelParams restore_model(const LoadedCheckpoint& checkpoint) {
    ModelParams params = build_model(checkpoint.config, 0);
    for (NamedParam& p : params.registry) {
        auto it = checkpoint.tensors.find(p.name);
        if (it == checkpoint.tensors.end()) {
            throw FormatError("checkpoint: tensor '" + p.name + "' missing");
        }
        if (it->second.shape() != p.var->value.shape()) {
            throw FormatError("checkpoint: tensor '" + p.name + "' has shape " +
                              it->second.shape_string() + ", expected " + p.var->value.shape_string());
        }
        p.var->value.values() = it->second.values();
        p.var->value.drop_grad();
    }
    return params;
}

} // namespace naenc
