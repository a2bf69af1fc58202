#include "fedia/serialize.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "fedia/errors.hpp"

namespace fedia {

namespace {

constexpr std::uint16_t kVersion = 1;

void put_u16(std::ostream& out, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    out.write(b, 2);
}

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

std::uint16_t get_u16(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    if (!in) throw FormatError("truncated header");
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("truncated header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw FormatError("truncated header");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

struct VolumeHeader {
    std::uint32_t depth, height, width, channels;
};

void write_volume_header(std::ostream& out, int depth, int height, int width) {
    out.write("FIAV", 4);
    put_u16(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(depth));
    put_u32(out, static_cast<std::uint32_t>(height));
    put_u32(out, static_cast<std::uint32_t>(width));
    put_u32(out, 1);  // channels
}

VolumeHeader read_volume_header(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "FIAV", 4) != 0) throw FormatError("bad FIAV magic");
    const std::uint16_t version = get_u16(in);
    if (version != kVersion)
        throw FormatError("unsupported FIAV version " + std::to_string(version));
    VolumeHeader h;
    h.depth = get_u32(in);
    h.height = get_u32(in);
    h.width = get_u32(in);
    h.channels = get_u32(in);
    if (h.depth == 0 || h.height == 0 || h.width == 0 || h.channels != 1)
        throw FormatError("invalid FIAV dimensions");
    return h;
}

template <typename Fn>
void with_ofstream(const std::string& path, Fn&& fn) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    fn(out);
    if (!out) throw FormatError("write failed: " + path);
}

template <typename Fn>
auto with_ifstream(const std::string& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open for reading: " + path);
    return fn(in);
}

}  // namespace

void write_image_fiav(std::ostream& out, const Image3& image) {
    write_volume_header(out, image.depth, image.height, image.width);
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(image.data.data()),
              static_cast<std::streamsize>(image.size() * sizeof(float)));
    if (!out) throw FormatError("FIAV image write failed");
}

Image3 read_image_fiav(std::istream& in) {
    const VolumeHeader h = read_volume_header(in);
    Image3 image(static_cast<int>(h.depth), static_cast<int>(h.height),
                 static_cast<int>(h.width));
    in.read(reinterpret_cast<char*>(image.data.data()),
            static_cast<std::streamsize>(image.size() * sizeof(float)));
    if (!in) throw FormatError("truncated FIAV image payload");
    return image;
}

void write_mask_fiav(std::ostream& out, const Mask3& mask) {
    write_volume_header(out, mask.depth, mask.height, mask.width);
    out.write(reinterpret_cast<const char*>(mask.data.data()),
              static_cast<std::streamsize>(mask.size()));
    if (!out) throw FormatError("FIAV mask write failed");
}

Mask3 read_mask_fiav(std::istream& in) {
    const VolumeHeader h = read_volume_header(in);
    Mask3 mask(static_cast<int>(h.depth), static_cast<int>(h.height), static_cast<int>(h.width));
    in.read(reinterpret_cast<char*>(mask.data.data()),
            static_cast<std::streamsize>(mask.size()));
    if (!in) throw FormatError("truncated FIAV mask payload");
    for (auto v : mask.data)
        if (v > 1) throw FormatError("FIAV mask bytes must be 0 or 1");
    return mask;
}

void write_params_fiap(std::ostream& out, const ModelParams& params) {
    out.write("FIAP", 4);
    put_u16(out, kVersion);
    put_u64(out, params.values.size());
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(params.values.data()),
              static_cast<std::streamsize>(params.values.size() * sizeof(double)));
    if (!out) throw FormatError("FIAP write failed");
}

ModelParams read_params_fiap(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "FIAP", 4) != 0) throw FormatError("bad FIAP magic");
    const std::uint16_t version = get_u16(in);
    if (version != kVersion)
        throw FormatError("unsupported FIAP version " + std::to_string(version));
    const std::uint64_t n = get_u64(in);
    ModelParams p;
    p.values.resize(n);
    in.read(reinterpret_cast<char*>(p.values.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw FormatError("truncated FIAP payload");
    return p;
}

void write_image_fiav(const std::string& path, const Image3& image) {
    with_ofstream(path, [&](std::ostream& out) { write_image_fiav(out, image); });
}

Image3 read_image_fiav(const std::string& path) {
    return with_ifstream(path, [](std::istream& in) { return read_image_fiav(in); });
}

void write_mask_fiav(const std::string& path, const Mask3& mask) {
    with_ofstream(path, [&](std::ostream& out) { write_mask_fiav(out, mask); });
}

Mask3 read_mask_fiav(const std::string& path) {
    return with_ifstream(path, [](std::istream& in) { return read_mask_fiav(in); });
}

void write_params_fiap(const std::string& path, const ModelParams& params) {
    with_ofstream(path, [&](std::ostream& out) { write_params_fiap(out, params); });
}

ModelParams read_params_fiap(const std::string& path) {
    return with_ifstream(path, [](std::istream& in) { return read_params_fiap(in); });
}

std::string mask_to_text(const Mask3& mask) {
    std::ostringstream out;
    for (int d = 0; d < mask.depth; ++d) {
        if (d > 0) out << '\n';
        for (int h = 0; h < mask.height; ++h) {
            for (int w = 0; w < mask.width; ++w) out << (mask.at(d, h, w) ? '1' : '0');
            out << '\n';
        }
    }
    return out.str();
}

}  // namespace fedia
