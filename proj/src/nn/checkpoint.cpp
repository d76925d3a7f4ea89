#include "noddet/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "noddet/errors.hpp"

namespace noddet::nn {

namespace {

constexpr char kMagic[] = "NODDETCKPT1\n";

const char* kind_name(ParamKind k) {
    switch (k) {
        case ParamKind::kernel: return "kernel";
        case ParamKind::bias: return "bias";
        case ParamKind::bn_scale: return "bn_scale";
        case ParamKind::bn_shift: return "bn_shift";
        case ParamKind::bn_state: return "bn_state";
    }
    return "?";
}

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void write_doubles(std::ostream& os, const Tensor& t) {
    // little-endian host assumed; asserted below for exotic platforms
    static_assert(sizeof(double) == 8);
    os.write(reinterpret_cast<const char*>(t.data()), t.numel() * 8);
}

void read_doubles(std::istream& is, Tensor& t) {
    is.read(reinterpret_cast<char*>(t.data()), t.numel() * 8);
}

nlohmann::json open_and_parse_header(std::ifstream& in, const std::string& path) {
    if (!in) throw IoError("checkpoint: cannot open " + path);
    char magic[sizeof(kMagic) - 1];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw VersionError("checkpoint: bad magic in " + path);
    const std::uint64_t len = read_u64(in);
    std::string js(len, '\0');
    in.read(js.data(), static_cast<std::streamsize>(len));
    if (!in) throw IoError("checkpoint: truncated manifest in " + path);
    nlohmann::json header = nlohmann::json::parse(js, nullptr, false);
    if (header.is_discarded()) throw VersionError("checkpoint: unparsable manifest in " + path);
    return header;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store,
                     const nlohmann::json& manifest, bool with_optimizer_state) {
    nlohmann::json dir = nlohmann::json::array();
    for (const Parameter* p : store.items()) {
        dir.push_back({{"name", p->name},
                       {"kind", kind_name(p->kind)},
                       {"shape", p->value.shape},
                       {"adam", with_optimizer_state && trainable(p->kind) &&
                                    p->adam_m.same_shape(p->value)}});
    }
    nlohmann::json header = {{"manifest", manifest}, {"parameters", dir}};
    const std::string js = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("checkpoint: cannot write " + path);
    out.write(kMagic, sizeof(kMagic) - 1);
    write_u64(out, js.size());
    out.write(js.data(), static_cast<std::streamsize>(js.size()));
    for (const Parameter* p : store.items()) {
        write_doubles(out, p->value);
        if (with_optimizer_state && trainable(p->kind) && p->adam_m.same_shape(p->value)) {
            write_doubles(out, p->adam_m);
            write_doubles(out, p->adam_v);
        }
    }
    if (!out) throw IoError("checkpoint: write failed for " + path);
}

nlohmann::json load_checkpoint(const std::string& path, ParamStore& store) {
    std::ifstream in(path, std::ios::binary);
    const nlohmann::json header = open_and_parse_header(in, path);

    const auto& dir = header.at("parameters");
    if (dir.size() != store.size())
        throw VersionError("checkpoint: parameter count mismatch in " + path);
    for (const auto& entry : dir) {
        const std::string name = entry.at("name").get<std::string>();
        Parameter* p = store.find(name);
        if (!p) throw VersionError("checkpoint: unknown parameter " + name);
        const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        if (shape != p->value.shape) throw VersionError("checkpoint: shape mismatch for " + name);
        read_doubles(in, p->value);
        if (entry.at("adam").get<bool>()) {
            p->adam_m = Tensor::zeros(p->value.shape);
            p->adam_v = Tensor::zeros(p->value.shape);
            read_doubles(in, p->adam_m);
            read_doubles(in, p->adam_v);
        }
        if (!in) throw IoError("checkpoint: truncated payload in " + path);
    }
    return header.at("manifest");
}

nlohmann::json read_checkpoint_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return open_and_parse_header(in, path).at("manifest");
}

}  // namespace noddet::nn
