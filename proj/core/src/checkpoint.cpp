#include "ngt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ngt {

namespace {

constexpr char kMagic[4] = {'N', 'G', 'T', '1'};
constexpr std::uint16_t kVersion = 1;

void write_u16(std::ostream& out, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                                static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
}

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint16_t read_u16(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_u16(out, static_cast<std::uint16_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    const std::uint16_t len = read_u16(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error("checkpoint " + path.string() + ": " + what);
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t bytes, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t hash = seed;
    for (std::size_t i = 0; i < bytes; ++i) {
        hash ^= p[i];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

void save_checkpoint(Model<float>& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");

    const auto params = collect_params(model);
    out.write(kMagic, 4);
    write_u16(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        write_string(out, p.id);
        write_string(out, p.role);
        out.put(static_cast<char>(p.shape.size()));
        for (int dim : p.shape) write_u32(out, static_cast<std::uint32_t>(dim));
    }
    std::uint64_t checksum = 0xcbf29ce484222325ULL;
    for (const auto& p : params) {
        // float payloads are little-endian on every target we build for;
        // write raw and fold the same bytes into the checksum
        static_assert(std::endian::native == std::endian::little);
        const auto bytes = p.values->size() * sizeof(float);
        out.write(reinterpret_cast<const char*>(p.values->data()),
                  static_cast<std::streamsize>(bytes));
        checksum = fnv1a64(p.values->data(), bytes, checksum);
    }
    write_u64(out, checksum);
    if (!out) fail(path, "write failed");
}

void load_checkpoint(Model<float>& model, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open for reading");

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) fail(path, "bad magic (not an NGT1 checkpoint)");
    const std::uint16_t version = read_u16(in);
    if (version != kVersion)
        fail(path, "unsupported format version " + std::to_string(version));

    const auto params = collect_params(model);
    const std::uint32_t count = read_u32(in);
    if (count != params.size())
        fail(path, "manifest lists " + std::to_string(count) + " entries, model has " +
                       std::to_string(params.size()));
    for (const auto& p : params) {
        const std::string id = read_string(in);
        const std::string role = read_string(in);
        if (id != p.id || role != p.role)
            fail(path, "manifest entry '" + id + "/" + role + "' does not match model entry '" +
                           p.id + "/" + p.role + "'");
        const int ndim = in.get();
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(read_u32(in));
        if (shape != p.shape) fail(path, "shape mismatch for " + p.id + "/" + p.role);
    }
    std::uint64_t checksum = 0xcbf29ce484222325ULL;
    for (const auto& p : params) {
        const auto bytes = p.values->size() * sizeof(float);
        in.read(reinterpret_cast<char*>(p.values->data()), static_cast<std::streamsize>(bytes));
        if (!in) fail(path, "truncated payload at " + p.id);
        checksum = fnv1a64(p.values->data(), bytes, checksum);
    }
    const std::uint64_t expected = read_u64(in);
    if (!in) fail(path, "missing checksum");
    if (checksum != expected)
        fail(path, "payload checksum mismatch (file corrupt or wrong content)");
}

std::uint64_t param_digest(Model<float>& model) {
    std::uint64_t digest = 0xcbf29ce484222325ULL;
    for (const auto& p : collect_params(model))
        digest = fnv1a64(p.values->data(), p.values->size() * sizeof(float), digest);
    return digest;
}

}  // namespace ngt
