#include "gevit/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace gevit {

namespace {

constexpr char kMagic[4] = {'G', 'E', 'V', 'T'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<char*>(b), 4);
}

uint32_t read_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error(std::string("checkpoint truncated reading ") + what);
    return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) | (uint32_t(b[3]) << 24);
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<TensorRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u32(out, static_cast<uint32_t>(records.size()));
    for (const auto& r : records) {
        write_u32(out, static_cast<uint32_t>(r.name.size()));
        out.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
        write_u32(out, static_cast<uint32_t>(r.shape.size()));
        size_t n = 1;
        for (int d : r.shape) {
            write_u32(out, static_cast<uint32_t>(d));
            n *= static_cast<size_t>(d);
        }
        if (n != r.data.size()) throw std::logic_error("record '" + r.name + "' shape/data mismatch");
        static_assert(sizeof(float) == 4);
        for (float v : r.data) {
            uint32_t bits;
            std::memcpy(&bits, &v, 4);
            write_u32(out, bits);
        }
    }
    if (!out) throw std::runtime_error("write failed for checkpoint " + path);
}

std::vector<TensorRecord> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error(path + " is not a GEVT checkpoint");
    uint32_t version = read_u32(in, "version");
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    uint32_t count = read_u32(in, "record count");
    std::vector<TensorRecord> out;
    out.reserve(count);
    for (uint32_t k = 0; k < count; ++k) {
        TensorRecord r;
        uint32_t name_len = read_u32(in, "name length");
        r.name.resize(name_len);
        in.read(r.name.data(), name_len);
        if (!in) throw std::runtime_error("checkpoint truncated reading a tensor name");
        uint32_t rank = read_u32(in, "rank");
        size_t n = 1;
        for (uint32_t i = 0; i < rank; ++i) {
            uint32_t d = read_u32(in, "dim");
            r.shape.push_back(static_cast<int>(d));
            n *= d;
        }
        r.data.resize(n);
        for (size_t i = 0; i < n; ++i) {
            uint32_t bits = read_u32(in, "payload");
            std::memcpy(&r.data[i], &bits, 4);
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace gevit
