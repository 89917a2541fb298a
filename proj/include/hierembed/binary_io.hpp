#ifndef HIEREMBED_BINARY_IO_HPP
#define HIEREMBED_BINARY_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hierembed {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Little-endian byte sink, independent of host byte order.
class ByteWriter {
 public:
  void magic(std::string_view tag);
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v);
  void f32(float v);
  void f64(double v);

  [[nodiscard]] const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  void save(const std::filesystem::path& path) const;

 private:
  void put(std::uint64_t v, int n);
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}
  static ByteReader open(const std::filesystem::path& path);

  /// Throws FormatError unless the next bytes equal `tag`.
  void expect_magic(std::string_view tag);
  [[nodiscard]] bool peek_magic(std::string_view tag) const;
  std::uint8_t u8();
  std::uint32_t u32();
  float f32();
  double f64();
  [[nodiscard]] bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::uint64_t take(int n);
  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace hierembed

#endif  // HIEREMBED_BINARY_IO_HPP
