#include "hierembed/binary_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>

namespace hierembed {

void ByteWriter::magic(std::string_view tag) {
  for (const char c : tag) bytes_.push_back(static_cast<std::uint8_t>(c));
}

void ByteWriter::put(std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffU));
}

void ByteWriter::u32(std::uint32_t v) { put(v, 4); }
void ByteWriter::f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
void ByteWriter::f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }

void ByteWriter::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes_.data()), static_cast<std::streamsize>(bytes_.size()));
}

ByteReader ByteReader::open(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ByteReader(std::move(bytes));
}

bool ByteReader::peek_magic(std::string_view tag) const {
  if (bytes_.size() - pos_ < tag.size()) return false;
  for (std::size_t i = 0; i < tag.size(); ++i) {
    if (bytes_[pos_ + i] != static_cast<std::uint8_t>(tag[i])) return false;
  }
  return true;
}

void ByteReader::expect_magic(std::string_view tag) {
  if (!peek_magic(tag)) throw FormatError("bad magic, expected '" + std::string(tag) + "'");
  pos_ += tag.size();
}

std::uint64_t ByteReader::take(int n) {
  if (bytes_.size() - pos_ < static_cast<std::size_t>(n)) throw FormatError("unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
  pos_ += static_cast<std::size_t>(n);
  return v;
}

std::uint8_t ByteReader::u8() { return static_cast<std::uint8_t>(take(1)); }
std::uint32_t ByteReader::u32() { return static_cast<std::uint32_t>(take(4)); }
float ByteReader::f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(take(4))); }
double ByteReader::f64() { return std::bit_cast<double>(take(8)); }

}  // namespace hierembed
