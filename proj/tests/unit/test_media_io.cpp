// SPDX-License-Identifier: Apache-2.0
#include <retouch/error.hpp>
#include <retouch/media_io.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <string_view>

using namespace retouch;

namespace
{

Bytes bytesOf(std::string_view text)
{
    return Bytes(text.begin(), text.end());
}

Bytes withPayload(std::string_view header, std::initializer_list<std::uint8_t> payload)
{
    auto out = bytesOf(header);
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

ErrorKind pnmError(const Bytes& bytes)
{
    try
    {
        (void)read_pnm(bytes);
    }
    catch (const Error& e)
    {
        return e.kind();
    }
    FAIL("expected read_pnm to throw");
    return ErrorKind::InvalidArgument;
}

ErrorKind gridError(const Bytes& bytes)
{
    try
    {
        (void)read_float_grid(bytes);
    }
    catch (const Error& e)
    {
        return e.kind();
    }
    FAIL("expected read_float_grid to throw");
    return ErrorKind::InvalidArgument;
}

} // namespace

TEST_CASE("minimal graymap decodes")
{
    auto const image = read_pnm(withPayload("P5\n1 1\n255\n", { 0x00 }));
    CHECK(image.width() == 1);
    CHECK(image.height() == 1);
    CHECK(image.channels() == 1);
    CHECK(image.at(0, 0) == 0);
}

TEST_CASE("pixmap decodes three channels")
{
    auto const image = read_pnm(withPayload("P6\n2 1\n255\n", { 1, 2, 3, 4, 5, 6 }));
    CHECK(image.channels() == 3);
    CHECK(image.at(1, 0, 2) == 6);
}

TEST_CASE("header comments and mixed whitespace are accepted")
{
    auto const image = read_pnm(withPayload("P5 # note\n\t2\r\n# more\n 1 255\n", { 9, 10 }));
    CHECK(image.width() == 2);
    CHECK(image.at(1, 0) == 10);
}

TEST_CASE("write_pnm emits the canonical header")
{
    auto const image = ImageBuffer(1, 1, 1, { 0xFF });
    CHECK(write_pnm(image) == withPayload("P5\n1 1\n255\n", { 0xFF }));

    auto const rgb = ImageBuffer::blank(2, 2, 3);
    auto const encoded = write_pnm(rgb);
    CHECK(encoded.size() == std::string_view("P6\n2 2\n255\n").size() + 12);
}

TEST_CASE("small maxval is rescaled to 0..255")
{
    auto const image = read_pnm(withPayload("P5\n3 1\n2\n", { 0, 1, 2 }));
    CHECK(image.at(0, 0) == 0);
    CHECK(image.at(1, 0) == 128);
    CHECK(image.at(2, 0) == 255);
}

TEST_CASE("PNM failures are classified")
{
    CHECK(pnmError(bytesOf("")) == ErrorKind::MalformedHeader);
    CHECK(pnmError(bytesOf("P3\n1 1\n255\n0")) == ErrorKind::MalformedHeader);
    CHECK(pnmError(bytesOf("P5\n0 1\n255\n")) == ErrorKind::MalformedHeader);
    CHECK(pnmError(bytesOf("P5\n1\n")) == ErrorKind::MalformedHeader);
    CHECK(pnmError(bytesOf("P5\n1 1\n65535\n\x01\x02")) == ErrorKind::UnsupportedMaxval);
    CHECK(pnmError(bytesOf("P5\n1 1\n0\n\x01")) == ErrorKind::UnsupportedMaxval);
    CHECK(pnmError(bytesOf("P5\n2 2\n255\n\x01")) == ErrorKind::TruncatedPayload);
    CHECK(pnmError(withPayload("P5\n1 1\n3\n", { 7 })) == ErrorKind::InvalidSample);
    CHECK(pnmError(bytesOf("P5\n99999999999999999999 1\n255\n")) == ErrorKind::MalformedHeader);
}

TEST_CASE("image invariants are enforced")
{
    CHECK_THROWS_AS(ImageBuffer(0, 1, 1, {}), Error);
    CHECK_THROWS_AS(ImageBuffer(1, 1, 2, { 0, 0 }), Error);
    CHECK_THROWS_AS(ImageBuffer(2, 1, 1, { 0 }), Error);
}

TEST_CASE("float grid encodes little-endian IEEE values")
{
    auto const grid = FloatGrid(1, 1, { 0.5F });
    CHECK(write_float_grid(grid) == withPayload("FSAL1 1 1\n", { 0x00, 0x00, 0x00, 0x3F }));
    CHECK(read_float_grid(write_float_grid(grid)) == grid);
}

TEST_CASE("float grid failures are classified")
{
    CHECK(gridError(bytesOf("FSAL2 1 1\n\0\0\0\0")) == ErrorKind::BadMagic);
    CHECK(gridError(bytesOf("FSAL1 1 1\n\0\0\0")) == ErrorKind::SizeMismatch);
    CHECK(gridError(withPayload("FSAL1 1 1\n", { 0, 0, 0, 0, 0 })) == ErrorKind::SizeMismatch);
    CHECK(gridError(bytesOf("FSAL1 x 1\n")) == ErrorKind::MalformedHeader);
    CHECK(gridError(withPayload("FSAL1 1 1\n", { 0x00, 0x00, 0xC0, 0x7F })) == ErrorKind::NonFiniteValue);
}

TEST_CASE("non-finite values are rejected")
{
    CHECK_THROWS_AS(FloatGrid(1, 1, { std::numeric_limits<float>::quiet_NaN() }), Error);
    CHECK_THROWS_AS(FloatGrid(1, 1, { std::numeric_limits<float>::infinity() }), Error);
}

TEST_CASE("masks convert to 0/255 images and back")
{
    auto mask = BinaryMask(3, 2);
    mask.set(1, 0);
    mask.set(2, 1);
    auto const image = mask_to_image(mask);
    CHECK(image.at(1, 0) == 255);
    CHECK(image.at(0, 0) == 0);
    CHECK(image_to_mask(image) == mask);
    CHECK(mask.count() == 2);
}

TEST_CASE("base64 round-trips and rejects garbage")
{
    for (auto const text: { "", "f", "fo", "foo", "foob", "fooba", "foobar" })
    {
        auto const raw = bytesOf(text);
        CHECK(decode_base64(encode_base64(raw)) == raw);
    }
    CHECK(encode_base64(bytesOf("foobar")) == "Zm9vYmFy");
    CHECK(encode_base64(bytesOf("fo")) == "Zm8=");
    CHECK_THROWS_AS(decode_base64("Zm9v!mFy"), Error);
    CHECK_THROWS_AS(decode_base64("Zm9"), Error);
}
