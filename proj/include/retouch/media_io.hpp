// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace retouch
{

using Bytes = std::vector<std::uint8_t>;

/// Row-major 8-bit image with 1 (gray) or 3 (RGB) interleaved channels.
class ImageBuffer
{
  public:
    ImageBuffer(std::size_t width, std::size_t height, std::size_t channels, std::vector<std::uint8_t> data);

    /// Zero-filled image.
    static ImageBuffer blank(std::size_t width, std::size_t height, std::size_t channels);

    [[nodiscard]] std::size_t width() const noexcept { return _width; }
    [[nodiscard]] std::size_t height() const noexcept { return _height; }
    [[nodiscard]] std::size_t channels() const noexcept { return _channels; }
    [[nodiscard]] std::span<const std::uint8_t> data() const noexcept { return _data; }
    [[nodiscard]] std::span<std::uint8_t> data() noexcept { return _data; }

    [[nodiscard]] std::uint8_t at(std::size_t x, std::size_t y, std::size_t c = 0) const
    {
        return _data[(y * _width + x) * _channels + c];
    }
    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c = 0)
    {
        return _data[(y * _width + x) * _channels + c];
    }

    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

  private:
    std::size_t _width;
    std::size_t _height;
    std::size_t _channels;
    std::vector<std::uint8_t> _data;
};

/// Row-major grid of finite 32-bit reals.
class FloatGrid
{
  public:
    FloatGrid(std::size_t width, std::size_t height, std::vector<float> data);

    static FloatGrid zeros(std::size_t width, std::size_t height);

    [[nodiscard]] std::size_t width() const noexcept { return _width; }
    [[nodiscard]] std::size_t height() const noexcept { return _height; }
    [[nodiscard]] std::size_t size() const noexcept { return _data.size(); }
    [[nodiscard]] std::span<const float> data() const noexcept { return _data; }

    [[nodiscard]] float at(std::size_t x, std::size_t y) const { return _data[y * _width + x]; }

    friend bool operator==(const FloatGrid&, const FloatGrid&) = default;

  private:
    std::size_t _width;
    std::size_t _height;
    std::vector<float> _data;
};

/// Row-major binary grid; every cell is 0 or 1.
struct BinaryMask
{
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> cells;

    BinaryMask() = default;
    BinaryMask(std::size_t w, std::size_t h): width(w), height(h), cells(w * h, 0) {}

    [[nodiscard]] bool test(std::size_t x, std::size_t y) const { return cells[y * width + x] != 0; }
    void set(std::size_t x, std::size_t y, bool value = true) { cells[y * width + x] = value ? 1 : 0; }
    [[nodiscard]] std::size_t count() const noexcept;

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

// Binary PNM (P5 graymap / P6 pixmap). Headers may contain comments and any
// whitespace; samples are rescaled to 0..255 when maxval < 255.
[[nodiscard]] ImageBuffer read_pnm(std::span<const std::uint8_t> bytes);
[[nodiscard]] Bytes write_pnm(const ImageBuffer& image);

// FSAL1: ASCII "FSAL1 <w> <h>\n" followed by w*h little-endian IEEE-754 floats.
[[nodiscard]] FloatGrid read_float_grid(std::span<const std::uint8_t> bytes);
[[nodiscard]] Bytes write_float_grid(const FloatGrid& grid);

/// 0/1 mask as a P5 image with values 0 and 255.
[[nodiscard]] ImageBuffer mask_to_image(const BinaryMask& mask);
/// Any nonzero sample of channel 0 becomes a set cell.
[[nodiscard]] BinaryMask image_to_mask(const ImageBuffer& image);

[[nodiscard]] std::string encode_base64(std::span<const std::uint8_t> bytes);
[[nodiscard]] Bytes decode_base64(std::string_view text);

[[nodiscard]] Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

} // namespace retouch
