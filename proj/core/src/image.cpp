#include "adgen/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>

#include "adgen/errors.hpp"

namespace adgen {

PixelRect intersect(const PixelRect& a, const PixelRect& b) {
    const int l = std::max(a.left, b.left);
    const int t = std::max(a.top, b.top);
    const int r = std::min(a.right(), b.right());
    const int btm = std::min(a.bottom(), b.bottom());
    if (r <= l || btm <= t) return PixelRect{l, t, 0, 0};
    return PixelRect{l, t, r - l, btm - t};
}

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

namespace {

std::vector<std::uint8_t> encode_with_format(const std::uint8_t* data, int width, int height,
                                             png_uint_32 format, int channels) {
    if (width <= 0 || height <= 0) throw InvalidArgument("cannot encode an empty raster");
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;
    const png_int_32 stride = width * channels;

    image.flags = PNG_IMAGE_FLAG_FAST;
    png_alloc_size_t size = PNG_IMAGE_PNG_SIZE_MAX(image);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, data, stride, nullptr)) {
        throw IoError(std::string("png encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

bool is_png(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

template <int C>
Raster<C> decode_png_as(std::span<const std::uint8_t> bytes, png_uint_32 format) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw ImageDecodeError(std::string("png header: ") + image.message);
    }
    image.format = format;
    Raster<C> out(static_cast<int>(image.width), static_cast<int>(image.height));
    png_color background{255, 255, 255};
    if (!png_image_finish_read(&image, &background, out.bytes().data(), 0, nullptr)) {
        png_image_free(&image);
        throw ImageDecodeError(std::string("png body: ") + image.message);
    }
    return out;
}

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 2;
    auto next_int = [&]() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        int v = 0;
        bool any = false;
        while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
            v = v * 10 + (bytes[pos] - '0');
            ++pos;
            any = true;
        }
        if (!any) throw ImageDecodeError("malformed PPM header");
        return v;
    };
    const int w = next_int();
    const int h = next_int();
    const int maxval = next_int();
    if (maxval != 255 || w <= 0 || h <= 0) throw ImageDecodeError("unsupported PPM variant");
    ++pos;  // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
    if (bytes.size() < pos + need) throw ImageDecodeError("truncated PPM body");
    RgbImage out(w, h);
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), need, out.bytes().begin());
    return out;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
    return encode_with_format(image.bytes().data(), image.width(), image.height(), PNG_FORMAT_RGB, 3);
}

std::vector<std::uint8_t> encode_png(const RgbaImage& image) {
    return encode_with_format(image.bytes().data(), image.width(), image.height(), PNG_FORMAT_RGBA, 4);
}

std::vector<std::uint8_t> encode_png(const GrayImage& image) {
    return encode_with_format(image.bytes().data(), image.width(), image.height(), PNG_FORMAT_GRAY, 1);
}

std::vector<std::uint8_t> encode_png(const Mask& mask) {
    GrayImage gray(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.bits().size(); ++i) gray.bytes()[i] = mask.bits()[i] ? 255 : 0;
    return encode_png(gray);
}

RgbImage decode_rgb(std::span<const std::uint8_t> bytes) {
    if (is_png(bytes)) return decode_png_as<3>(bytes, PNG_FORMAT_RGB);
    if (bytes.size() > 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
    throw ImageDecodeError("unsupported image encoding (expected PNG or binary PPM)");
}

GrayImage decode_gray(std::span<const std::uint8_t> bytes) {
    if (!is_png(bytes)) throw ImageDecodeError("expected PNG for a grayscale raster");
    return decode_png_as<1>(bytes, PNG_FORMAT_GRAY);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

RgbImage load_rgb(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return decode_rgb(bytes);
}

void save_png(const std::filesystem::path& path, const RgbImage& image) {
    write_file_bytes(path, encode_png(image));
}

template <int C>
Raster<C> resize_nearest(const Raster<C>& src, int width, int height) {
    if (width <= 0 || height <= 0) throw InvalidArgument("resize target must be non-empty");
    if (src.empty()) throw InvalidArgument("resize source is empty");
    Raster<C> out(width, height);
    std::vector<int> sx(static_cast<std::size_t>(width));
    for (int x = 0; x < width; ++x) {
        const long long v = (2LL * x + 1) * src.width() / (2LL * width);
        sx[static_cast<std::size_t>(x)] = static_cast<int>(std::min<long long>(v, src.width() - 1));
    }
    for (int y = 0; y < height; ++y) {
        const int syy = static_cast<int>(
            std::min<long long>((2LL * y + 1) * src.height() / (2LL * height), src.height() - 1));
        for (int x = 0; x < width; ++x) {
            std::memcpy(out.at(x, y), src.at(sx[static_cast<std::size_t>(x)], syy), C);
        }
    }
    return out;
}

template <int C>
Raster<C> crop(const Raster<C>& src, const PixelRect& rect) {
    const PixelRect r = intersect(rect, PixelRect{0, 0, src.width(), src.height()});
    if (r.empty()) throw InvalidArgument("crop rectangle lies outside the raster");
    Raster<C> out(r.width, r.height);
    for (int y = 0; y < r.height; ++y) {
        std::memcpy(out.at(0, y), src.at(r.left, r.top + y), static_cast<std::size_t>(r.width) * C);
    }
    return out;
}

template RgbImage resize_nearest<3>(const RgbImage&, int, int);
template RgbaImage resize_nearest<4>(const RgbaImage&, int, int);
template GrayImage resize_nearest<1>(const GrayImage&, int, int);
template RgbImage crop<3>(const RgbImage&, const PixelRect&);
template RgbaImage crop<4>(const RgbaImage&, const PixelRect&);
template GrayImage crop<1>(const GrayImage&, const PixelRect&);

}  // namespace adgen
