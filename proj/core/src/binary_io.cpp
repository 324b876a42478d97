#include "codql/binary_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "codql/errors.hpp"
#include "codql/rng.hpp"

namespace codql {

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::raw(std::span<const std::uint8_t> data) {
  bytes_.insert(bytes_.end(), data.begin(), data.end());
}

void ByteWriter::tag(std::string_view magic) {
  for (char c : magic) bytes_.push_back(static_cast<std::uint8_t>(c));
}

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  tag(s);
}

void ByteWriter::blob(std::span<const std::uint8_t> data) {
  u64(data.size());
  raw(data);
}

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) throw FormatError("truncated data");
}

std::uint8_t ByteReader::u8() {
  need(1);
  return data_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

void ByteReader::expect_tag(std::string_view magic, std::string_view what) {
  need(magic.size());
  for (char c : magic) {
    if (data_[pos_++] != static_cast<std::uint8_t>(c)) {
      throw FormatError(std::string(what) + ": bad magic");
    }
  }
}

std::string ByteReader::str() {
  const std::size_t n = u32();
  need(n);
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::vector<std::uint8_t> ByteReader::blob() {
  const std::uint64_t n = u64();
  if (n > remaining()) throw FormatError("truncated data");
  std::vector<std::uint8_t> out(data_.begin() + pos_, data_.begin() + pos_ + n);
  pos_ += n;
  return out;
}

std::size_t ByteReader::count(std::size_t min_element_bytes) {
  const std::size_t n = u32();
  if (min_element_bytes > 0 && n > remaining() / min_element_bytes) {
    throw FormatError("element count exceeds payload");
  }
  return n;
}

void seal_with_checksum(ByteWriter& w) {
  const auto& b = w.bytes();
  w.u64(fnv1a(b.data(), b.size()));
}

std::span<const std::uint8_t> verify_checksum(std::span<const std::uint8_t> data,
                                              std::string_view what) {
  if (data.size() < 8) throw FormatError(std::string(what) + ": truncated");
  const auto payload = data.first(data.size() - 8);
  ByteReader tail(data.last(8));
  if (tail.u64() != fnv1a(payload.data(), payload.size())) {
    throw FormatError(std::string(what) + ": checksum mismatch");
  }
  return payload;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace codql
