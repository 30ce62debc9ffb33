#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace semples {

/// Reads an RGB(A) PNG into a channel-planar {3,H,W} tensor with values in [0,1].
Tensor read_image_png(const std::string& path);

/// Writes a {3,H,W} tensor in [0,1] as an 8-bit RGB PNG. Values are clamped.
void write_image_png(const std::string& path, const Tensor& img);

/// 8-bit single-channel PNG used for class maps (value = class index, 0 = background).
std::vector<std::uint8_t> read_gray_png(const std::string& path, int& h, int& w);
void write_gray_png(const std::string& path, const std::uint8_t* data, int h, int w);

// Little-endian binary file helpers for checkpoint / container formats.
struct ByteWriter {
    std::vector<std::uint8_t> buf;
    void u8(std::uint8_t x) { buf.push_back(x); }
    void u32(std::uint32_t x);
    void u64(std::uint64_t x);
    void f32(float x);
    void f64(double x);
    void str(const std::string& s);  // u32 length + bytes
    void tensor(const Tensor& t);    // u32 rank + dims + f64 data
    void save(const std::string& path) const;
};

struct ByteReader {
    std::vector<std::uint8_t> buf;
    std::size_t pos = 0;
    explicit ByteReader(const std::string& path);
    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    double f64();
    std::string str();
    Tensor tensor();
    void need(std::size_t n) const;
};

}  // namespace semples
