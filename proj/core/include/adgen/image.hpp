#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace adgen {

/// Axis-aligned pixel rectangle, half-open: [left, left+width) x [top, top+height).
struct PixelRect {
    int left = 0;
    int top = 0;
    int width = 0;
    int height = 0;

    int right() const { return left + width; }
    int bottom() const { return top + height; }
    bool empty() const { return width <= 0 || height <= 0; }
    bool operator==(const PixelRect&) const = default;
};

PixelRect intersect(const PixelRect& a, const PixelRect& b);

/// Interleaved 8-bit raster with a compile-time channel count.
template <int Channels>
class Raster {
public:
    static constexpr int kChannels = Channels;

    Raster() = default;
    Raster(int width, int height, std::uint8_t fill = 0)
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * Channels, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_); }

    std::uint8_t* at(int x, int y) { return data_.data() + offset(x, y); }
    const std::uint8_t* at(int x, int y) const { return data_.data() + offset(x, y); }

    std::vector<std::uint8_t>& bytes() { return data_; }
    const std::vector<std::uint8_t>& bytes() const { return data_; }

    bool operator==(const Raster&) const = default;

private:
    std::size_t offset(int x, int y) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
               Channels;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

using RgbImage = Raster<3>;
using RgbaImage = Raster<4>;
using GrayImage = Raster<1>;

/// Per-pixel boolean grid.
class Mask {
public:
    Mask() = default;
    Mask(int width, int height, bool fill = false)
        : width_(width), height_(height),
          bits_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill ? 1 : 0) {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool get(int x, int y) const { return bits_[index(x, y)] != 0; }
    void set(int x, int y, bool v) { bits_[index(x, y)] = v ? 1 : 0; }
    std::size_t count() const;
    const std::vector<std::uint8_t>& bits() const { return bits_; }

    bool operator==(const Mask&) const = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

// PNG encoding is deterministic for a given raster, so hashes of encoded
// artifacts are stable content addresses.
std::vector<std::uint8_t> encode_png(const RgbImage& image);
std::vector<std::uint8_t> encode_png(const RgbaImage& image);
std::vector<std::uint8_t> encode_png(const GrayImage& image);
std::vector<std::uint8_t> encode_png(const Mask& mask);  // 0 / 255 grayscale

/// Decodes PNG or binary PPM (P6). Alpha, if present, is composited over white.
RgbImage decode_rgb(std::span<const std::uint8_t> bytes);
/// Decodes a PNG as single-channel gray (color inputs are averaged).
GrayImage decode_gray(std::span<const std::uint8_t> bytes);

RgbImage load_rgb(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const RgbImage& image);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Nearest-neighbour resampling; pixel (x, y) of the output samples source
/// pixel (floor((x + 0.5) * sw / w), floor((y + 0.5) * sh / h)).
template <int C>
Raster<C> resize_nearest(const Raster<C>& src, int width, int height);

template <int C>
Raster<C> crop(const Raster<C>& src, const PixelRect& rect);

}  // namespace adgen
