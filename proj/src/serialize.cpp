#include "tdc/serialize.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tdc {

namespace {

constexpr char kMagic[4] = {'T', 'D', 'C', 'P'};

void write_u32(std::ofstream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("tensor file truncated");
    return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
           (uint32_t(b[3]) << 24);
}

}  // namespace

void save_named_tensors(const std::string& path,
                        const std::vector<std::pair<std::string, const Matrix*>>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write tensor file: " + path);
    out.write(kMagic, 4);
    write_u32(out, static_cast<uint32_t>(tensors.size()));
    for (const auto& [name, m] : tensors) {
        write_u32(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(out, static_cast<uint32_t>(m->rows()));
        write_u32(out, static_cast<uint32_t>(m->cols()));
        out.write(reinterpret_cast<const char*>(m->data()),
                  static_cast<std::streamsize>(m->size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::map<std::string, Matrix> load_named_tensors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open tensor file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != std::string(kMagic, 4))
        throw std::runtime_error("not a tensor file: " + path);
    const uint32_t count = read_u32(in);
    std::map<std::string, Matrix> tensors;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const uint32_t rows = read_u32(in);
        const uint32_t cols = read_u32(in);
        Matrix m(static_cast<int>(rows), static_cast<int>(cols));
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
        if (!in) throw std::runtime_error("tensor file truncated: " + path);
        tensors.emplace(std::move(name), std::move(m));
    }
    return tensors;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace tdc
