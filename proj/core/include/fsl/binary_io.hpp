#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fsl {

using Bytes = std::vector<std::uint8_t>;
using Tag = std::array<char, 4>;

/// Four-character section tag; "PCA\0" style literals keep the embedded NUL.
template <std::size_t N>
constexpr Tag make_tag(const char (&s)[N]) {
    static_assert(N >= 5, "tags have four characters");
    return {s[0], s[1], s[2], s[3]};
}

/// Appends little-endian primitives to a byte buffer.
class ByteWriter {
public:
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f32(float v);
    void f64(double v);
    void tag(const Tag& t);
    /// u32 byte length followed by the UTF-8 bytes.
    void str(std::string_view s);
    void raw(std::span<const std::uint8_t> data);

    [[nodiscard]] const Bytes& bytes() const { return buf_; }
    Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
};

/// Bounds-checked little-endian reader; throws DataError on truncation.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data, std::string context = "input")
        : data_(data), context_(std::move(context)) {}

    std::uint32_t u32();
    std::uint64_t u64();
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    float f32();
    double f64();
    Tag tag();
    std::string str();
    std::span<const std::uint8_t> raw(std::size_t n);

    [[nodiscard]] std::size_t remaining() const { return data_.size() - pos_; }
    [[nodiscard]] std::size_t position() const { return pos_; }
    [[nodiscard]] bool at_end() const { return pos_ == data_.size(); }
    /// Peeks at the next four bytes without consuming them.
    [[nodiscard]] bool next_is(const Tag& t) const;

private:
    void need(std::size_t n) const;

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
    std::string context_;
};

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace fsl
