// SPDX-License-Identifier: Apache-2.0
#include <retouch/error.hpp>
#include <retouch/media_io.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

namespace retouch
{

namespace
{

// Dimensions beyond this are rejected as malformed; keeps w*h*c far from overflow.
constexpr std::size_t MaxDimension = 1U << 20;

class HeaderReader
{
  public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes): _bytes(bytes) {}

    [[nodiscard]] std::size_t position() const noexcept { return _pos; }

    void skipWhitespaceAndComments()
    {
        while (_pos < _bytes.size())
        {
            auto const c = _bytes[_pos];
            if (c == '#')
            {
                while (_pos < _bytes.size() && _bytes[_pos] != '\n' && _bytes[_pos] != '\r')
                    ++_pos;
            }
            else if (isSpace(c))
                ++_pos;
            else
                return;
        }
    }

    struct Number
    {
        std::size_t value = 0;
        bool present = false;
        bool overflow = false;
    };

    /// Reads a decimal token; values above \p limit are flagged, not wrapped.
    Number readUnsigned(std::size_t limit)
    {
        skipWhitespaceAndComments();
        auto number = Number {};
        while (_pos < _bytes.size() && _bytes[_pos] >= '0' && _bytes[_pos] <= '9')
        {
            if (!number.overflow)
            {
                number.value = number.value * 10 + static_cast<std::size_t>(_bytes[_pos] - '0');
                number.overflow = number.value > limit;
            }
            number.present = true;
            ++_pos;
        }
        return number;
    }

    bool consumeSingleWhitespace()
    {
        if (_pos >= _bytes.size() || !isSpace(_bytes[_pos]))
            return false;
        ++_pos;
        return true;
    }

    static bool isSpace(std::uint8_t c) noexcept
    {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    }

  private:
    std::span<const std::uint8_t> _bytes;
    std::size_t _pos = 0;
};

void appendAscii(Bytes& out, std::string_view text)
{
    out.insert(out.end(), text.begin(), text.end());
}

} // namespace

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height, std::size_t channels, std::vector<std::uint8_t> data):
    _width(width), _height(height), _channels(channels), _data(std::move(data))
{
    if (width == 0 || height == 0)
        throw Error(ErrorKind::InvalidArgument, "image dimensions must be positive");
    if (channels != 1 && channels != 3)
        throw Error(ErrorKind::InvalidArgument, fmt::format("unsupported channel count {}", channels));
    if (_data.size() != width * height * channels)
        throw Error(ErrorKind::SizeMismatch,
                    fmt::format("image data has {} samples, expected {}", _data.size(), width * height * channels));
}

ImageBuffer ImageBuffer::blank(std::size_t width, std::size_t height, std::size_t channels)
{
    return ImageBuffer(width, height, channels, std::vector<std::uint8_t>(width * height * channels, 0));
}

FloatGrid::FloatGrid(std::size_t width, std::size_t height, std::vector<float> data):
    _width(width), _height(height), _data(std::move(data))
{
    if (width == 0 || height == 0)
        throw Error(ErrorKind::InvalidArgument, "grid dimensions must be positive");
    if (_data.size() != width * height)
        throw Error(ErrorKind::SizeMismatch,
                    fmt::format("grid data has {} values, expected {}", _data.size(), width * height));
    if (!std::ranges::all_of(_data, [](float v) { return std::isfinite(v); }))
        throw Error(ErrorKind::NonFiniteValue, "grid contains NaN or Inf");
}

FloatGrid FloatGrid::zeros(std::size_t width, std::size_t height)
{
    return FloatGrid(width, height, std::vector<float>(width * height, 0.0F));
}

std::size_t BinaryMask::count() const noexcept
{
    return static_cast<std::size_t>(std::ranges::count_if(cells, [](std::uint8_t c) { return c != 0; }));
}

ImageBuffer read_pnm(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw Error(ErrorKind::MalformedHeader, "not a binary PNM file (expected P5 or P6)");
    auto const channels = bytes[1] == '5' ? std::size_t { 1 } : std::size_t { 3 };

    auto reader = HeaderReader(bytes.subspan(2));
    if (bytes.size() > 2 && !HeaderReader::isSpace(bytes[2]) && bytes[2] != '#')
        throw Error(ErrorKind::MalformedHeader, "missing whitespace after PNM magic");

    auto const width = reader.readUnsigned(MaxDimension);
    auto const height = reader.readUnsigned(MaxDimension);
    if (!width.present || !height.present || width.overflow || height.overflow || width.value == 0
        || height.value == 0)
        throw Error(ErrorKind::MalformedHeader, "invalid PNM dimensions");

    auto const maxval = reader.readUnsigned(65535);
    if (!maxval.present)
        throw Error(ErrorKind::MalformedHeader, "missing PNM maxval");
    if (maxval.overflow || maxval.value == 0 || maxval.value > 255)
        throw Error(ErrorKind::UnsupportedMaxval, fmt::format("unsupported PNM maxval {}", maxval.value));
    if (!reader.consumeSingleWhitespace())
        throw Error(ErrorKind::MalformedHeader, "missing whitespace after PNM maxval");

    auto const offset = 2 + reader.position();
    auto const expected = width.value * height.value * channels;
    if (bytes.size() - offset < expected)
        throw Error(ErrorKind::TruncatedPayload,
                    fmt::format("PNM payload has {} bytes, expected {}", bytes.size() - offset, expected));

    auto samples = std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                                             bytes.begin() + static_cast<std::ptrdiff_t>(offset + expected));
    if (auto const m = maxval.value; m != 255)
    {
        for (auto& s: samples)
        {
            if (s > m)
                throw Error(ErrorKind::InvalidSample, fmt::format("PNM sample {} exceeds maxval {}", s, m));
            s = static_cast<std::uint8_t>((s * 255U + m / 2) / m);
        }
    }
    return ImageBuffer(width.value, height.value, channels, std::move(samples));
}

Bytes write_pnm(const ImageBuffer& image)
{
    auto out = Bytes {};
    auto const header = fmt::format(
        "{}\n{} {}\n255\n", image.channels() == 1 ? "P5" : "P6", image.width(), image.height());
    out.reserve(header.size() + image.data().size());
    appendAscii(out, header);
    out.insert(out.end(), image.data().begin(), image.data().end());
    return out;
}

FloatGrid read_float_grid(std::span<const std::uint8_t> bytes)
{
    constexpr auto magic = std::string_view("FSAL1 ");
    if (bytes.size() < magic.size() || !std::equal(magic.begin(), magic.end(), bytes.begin()))
        throw Error(ErrorKind::BadMagic, "missing FSAL1 magic");

    auto pos = magic.size();
    auto readNumber = [&](char terminator) -> std::size_t {
        auto value = std::size_t { 0 };
        auto digits = 0;
        while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9')
        {
            value = value * 10 + static_cast<std::size_t>(bytes[pos] - '0');
            if (value > MaxDimension)
                throw Error(ErrorKind::MalformedHeader, "FSAL1 dimension too large");
            ++pos;
            ++digits;
        }
        if (digits == 0 || pos >= bytes.size() || bytes[pos] != static_cast<std::uint8_t>(terminator))
            throw Error(ErrorKind::MalformedHeader, "malformed FSAL1 header");
        ++pos;
        return value;
    };
    auto const width = readNumber(' ');
    auto const height = readNumber('\n');
    if (width == 0 || height == 0)
        throw Error(ErrorKind::MalformedHeader, "FSAL1 dimensions must be positive");

    auto const count = width * height;
    if (bytes.size() - pos != count * 4)
        throw Error(ErrorKind::SizeMismatch,
                    fmt::format("FSAL1 payload has {} bytes, expected {}", bytes.size() - pos, count * 4));

    auto values = std::vector<float>(count);
    for (auto i = std::size_t { 0 }; i < count; ++i)
    {
        auto const* p = bytes.data() + pos + i * 4;
        auto const bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8)
                          | (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
        values[i] = std::bit_cast<float>(bits);
    }
    return FloatGrid(width, height, std::move(values));
}

Bytes write_float_grid(const FloatGrid& grid)
{
    auto out = Bytes {};
    auto const header = fmt::format("FSAL1 {} {}\n", grid.width(), grid.height());
    out.reserve(header.size() + grid.size() * 4);
    appendAscii(out, header);
    for (auto const v: grid.data())
    {
        if (!std::isfinite(v))
            throw Error(ErrorKind::NonFiniteValue, "cannot encode NaN or Inf");
        auto const bits = std::bit_cast<std::uint32_t>(v);
        out.push_back(static_cast<std::uint8_t>(bits & 0xFFU));
        out.push_back(static_cast<std::uint8_t>((bits >> 8) & 0xFFU));
        out.push_back(static_cast<std::uint8_t>((bits >> 16) & 0xFFU));
        out.push_back(static_cast<std::uint8_t>((bits >> 24) & 0xFFU));
    }
    return out;
}

ImageBuffer mask_to_image(const BinaryMask& mask)
{
    auto samples = std::vector<std::uint8_t>(mask.cells.size());
    std::ranges::transform(mask.cells, samples.begin(), [](std::uint8_t c) -> std::uint8_t { return c ? 255 : 0; });
    return ImageBuffer(mask.width, mask.height, 1, std::move(samples));
}

BinaryMask image_to_mask(const ImageBuffer& image)
{
    auto mask = BinaryMask(image.width(), image.height());
    for (auto y = std::size_t { 0 }; y < image.height(); ++y)
        for (auto x = std::size_t { 0 }; x < image.width(); ++x)
            mask.set(x, y, image.at(x, y, 0) != 0);
    return mask;
}

namespace
{
constexpr auto Base64Alphabet = std::string_view("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/");

constexpr std::array<std::int8_t, 256> makeBase64Table()
{
    auto table = std::array<std::int8_t, 256> {};
    table.fill(-1);
    for (auto i = 0; i < 64; ++i)
        table[static_cast<std::uint8_t>(Base64Alphabet[static_cast<std::size_t>(i)])] = static_cast<std::int8_t>(i);
    return table;
}
constexpr auto Base64Table = makeBase64Table();
} // namespace

std::string encode_base64(std::span<const std::uint8_t> bytes)
{
    auto out = std::string {};
    out.reserve((bytes.size() + 2) / 3 * 4);
    auto i = std::size_t { 0 };
    for (; i + 2 < bytes.size(); i += 3)
    {
        auto const n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += Base64Alphabet[(n >> 18) & 63];
        out += Base64Alphabet[(n >> 12) & 63];
        out += Base64Alphabet[(n >> 6) & 63];
        out += Base64Alphabet[n & 63];
    }
    if (auto const rest = bytes.size() - i; rest > 0)
    {
        auto n = bytes[i] << 16;
        if (rest == 2)
            n |= bytes[i + 1] << 8;
        out += Base64Alphabet[(n >> 18) & 63];
        out += Base64Alphabet[(n >> 12) & 63];
        out += rest == 2 ? Base64Alphabet[(n >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

Bytes decode_base64(std::string_view text)
{
    if (text.size() % 4 != 0)
        throw Error(ErrorKind::SchemaViolation, "base64 length is not a multiple of 4");
    auto out = Bytes {};
    out.reserve(text.size() / 4 * 3);
    for (auto i = std::size_t { 0 }; i < text.size(); i += 4)
    {
        auto n = 0U;
        auto padding = 0;
        for (auto k = 0; k < 4; ++k)
        {
            auto const c = static_cast<std::uint8_t>(text[i + static_cast<std::size_t>(k)]);
            if (c == '=' && i + 4 == text.size() && k >= 2)
            {
                ++padding;
                n <<= 6;
                continue;
            }
            if (padding > 0 || Base64Table[c] < 0)
                throw Error(ErrorKind::SchemaViolation, "invalid base64 character");
            n = (n << 6) | static_cast<std::uint32_t>(Base64Table[c]);
        }
        out.push_back(static_cast<std::uint8_t>((n >> 16) & 0xFFU));
        if (padding < 2)
            out.push_back(static_cast<std::uint8_t>((n >> 8) & 0xFFU));
        if (padding < 1)
            out.push_back(static_cast<std::uint8_t>(n & 0xFFU));
    }
    return out;
}

Bytes read_file(const std::string& path)
{
    auto in = std::ifstream(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::InvalidArgument, fmt::format("cannot open {}", path));
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes)
{
    auto out = std::ofstream(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::InvalidArgument, fmt::format("cannot write {}", path));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

} // namespace retouch
