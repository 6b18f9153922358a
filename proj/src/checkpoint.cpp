#include "hoi/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "hoi/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts need byte swaps");

namespace hoi {

namespace {
constexpr char kMagic[8] = {'H', 'O', 'I', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store, CheckpointDtype dtype) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("save_checkpoint: cannot open " + path);
    auto u32 = [&](uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };

    f.write(kMagic, 8);
    u32(kVersion);
    u32(static_cast<uint32_t>(dtype));
    u32(static_cast<uint32_t>(store.tensors.size()));
    for (const auto& [name, t] : store.tensors) {
        u32(static_cast<uint32_t>(name.size()));
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
        u32(static_cast<uint32_t>(t.rows));
        u32(static_cast<uint32_t>(t.cols));
        if (dtype == CheckpointDtype::f32) {
            std::vector<float> buf(t.v.begin(), t.v.end());
            f.write(reinterpret_cast<const char*>(buf.data()),
                    static_cast<std::streamsize>(buf.size() * 4));
        } else {
            f.write(reinterpret_cast<const char*>(t.v.data()),
                    static_cast<std::streamsize>(t.v.size() * 8));
        }
    }
    if (!f) throw IoError("save_checkpoint: short write to " + path);
}

ParamStore load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_checkpoint: cannot open " + path);
    auto u32 = [&]() {
        uint32_t v;
        f.read(reinterpret_cast<char*>(&v), 4);
        if (!f) throw FormatError("checkpoint truncated");
        return v;
    };

    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0) throw FormatError("checkpoint: bad magic");
    const uint32_t version = u32();
    if (version != kVersion)
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    const auto dtype = static_cast<CheckpointDtype>(u32());
    if (dtype != CheckpointDtype::f32 && dtype != CheckpointDtype::f64)
        throw FormatError("checkpoint: unknown dtype");
    const uint32_t count = u32();

    ParamStore store;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = u32();
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        const int rows = static_cast<int>(u32());
        const int cols = static_cast<int>(u32());
        Tensor t(rows, cols);
        if (dtype == CheckpointDtype::f32) {
            std::vector<float> buf(t.size());
            f.read(reinterpret_cast<char*>(buf.data()),
                   static_cast<std::streamsize>(buf.size() * 4));
            for (size_t k = 0; k < buf.size(); ++k) t.v[k] = buf[k];
        } else {
            f.read(reinterpret_cast<char*>(t.v.data()),
                   static_cast<std::streamsize>(t.v.size() * 8));
        }
        if (!f) throw FormatError("checkpoint truncated");
        store.tensors[name] = std::move(t);
    }
    return store;
}

}  // namespace hoi
