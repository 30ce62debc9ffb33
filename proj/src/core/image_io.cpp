#include "core/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace semples {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Decodes any PNG to 8-bit RGBA rows via libpng transforms.
void read_png_rgba(const std::string& path, std::vector<std::uint8_t>& rgba, int& h, int& w) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw DataError("cannot open PNG: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("libpng init failed reading " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("corrupt PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_gray_to_rgb(png);
    png_set_add_alpha(png, 0xFF, PNG_FILLER_AFTER);
    png_read_update_info(png, info);
    w = static_cast<int>(png_get_image_width(png, info));
    h = static_cast<int>(png_get_image_height(png, info));
    rgba.resize(static_cast<std::size_t>(h) * w * 4);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) rows[y] = rgba.data() + static_cast<std::size_t>(y) * w * 4;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
}

void write_png_8(const std::string& path, const std::uint8_t* data, int h, int w, int color_type) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw DataError("cannot write PNG: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw DataError("libpng init failed writing " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("PNG write failed: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    int stride = (color_type == PNG_COLOR_TYPE_RGB) ? 3 : 1;
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y)
        rows[y] = const_cast<png_bytep>(data + static_cast<std::size_t>(y) * w * stride);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

Tensor read_image_png(const std::string& path) {
    std::vector<std::uint8_t> rgba;
    int h = 0, w = 0;
    read_png_rgba(path, rgba, h, w);
    Tensor img({3, h, w});
    std::size_t hw = static_cast<std::size_t>(h) * w;
    for (std::size_t i = 0; i < hw; ++i)
        for (int c = 0; c < 3; ++c) img.v[c * hw + i] = rgba[i * 4 + c] / 255.0;
    return img;
}

void write_image_png(const std::string& path, const Tensor& img) {
    if (img.shape.size() != 3 || img.dim(0) != 3)
        throw std::invalid_argument("write_image_png: expects {3,H,W}");
    int h = img.dim(1), w = img.dim(2);
    std::size_t hw = static_cast<std::size_t>(h) * w;
    std::vector<std::uint8_t> rgb(hw * 3);
    for (std::size_t i = 0; i < hw; ++i)
        for (int c = 0; c < 3; ++c) {
            double x = img.v[c * hw + i];
            x = x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
            rgb[i * 3 + c] = static_cast<std::uint8_t>(x * 255.0 + 0.5);
        }
    write_png_8(path, rgb.data(), h, w, PNG_COLOR_TYPE_RGB);
}

std::vector<std::uint8_t> read_gray_png(const std::string& path, int& h, int& w) {
    std::vector<std::uint8_t> rgba;
    read_png_rgba(path, rgba, h, w);
    std::size_t hw = static_cast<std::size_t>(h) * w;
    std::vector<std::uint8_t> gray(hw);
    for (std::size_t i = 0; i < hw; ++i) gray[i] = rgba[i * 4];
    return gray;
}

void write_gray_png(const std::string& path, const std::uint8_t* data, int h, int w) {
    write_png_8(path, data, h, w, PNG_COLOR_TYPE_GRAY);
}

void ByteWriter::u32(std::uint32_t x) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}
void ByteWriter::u64(std::uint64_t x) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}
void ByteWriter::f32(float x) {
    std::uint32_t u;
    std::memcpy(&u, &x, 4);
    u32(u);
}
void ByteWriter::f64(double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, 8);
    u64(u);
}
void ByteWriter::str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf.insert(buf.end(), s.begin(), s.end());
}
void ByteWriter::tensor(const Tensor& t) {
    u32(static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) u32(static_cast<std::uint32_t>(d));
    for (double x : t.v) f64(x);
}
void ByteWriter::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("short write: " + path);
}

ByteReader::ByteReader(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    buf.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}
void ByteReader::need(std::size_t n) const {
    if (pos + n > buf.size()) throw DataError("truncated file (need " + std::to_string(n) + " bytes)");
}
std::uint8_t ByteReader::u8() {
    need(1);
    return buf[pos++];
}
std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(buf[pos++]) << (8 * i);
    return x;
}
std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(buf[pos++]) << (8 * i);
    return x;
}
float ByteReader::f32() {
    std::uint32_t u = u32();
    float x;
    std::memcpy(&x, &u, 4);
    return x;
}
double ByteReader::f64() {
    std::uint64_t u = u64();
    double x;
    std::memcpy(&x, &u, 8);
    return x;
}
std::string ByteReader::str() {
    std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
    pos += n;
    return s;
}
Tensor ByteReader::tensor() {
    std::uint32_t rank = u32();
    if (rank > 8) throw DataError("tensor rank too large");
    std::vector<int> shape(rank);
    for (auto& d : shape) d = static_cast<int>(u32());
    Tensor t(shape);
    for (double& x : t.v) x = f64();
    return t;
}

}  // namespace semples
