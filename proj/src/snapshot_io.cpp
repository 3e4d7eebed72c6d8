#include "pflow/snapshot_io.hpp"

#include "pflow/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace pflow {

namespace {

constexpr char kMagic[4] = {'P', 'F', 'L', 'W'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::vector<unsigned char>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xffu));
}

class Reader {
public:
  explicit Reader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

  [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t count) const {
    if (remaining() < count) throw FormatError("snapshot truncated");
  }

private:
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> encode_snapshot(const FieldMap& field) {
  std::vector<unsigned char> out;
  out.reserve(32 + field.values.size() * 8);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  const int n = field.grid.dim();
  put_u32(out, kSnapshotVersion);
  put_u32(out, static_cast<std::uint32_t>(n));
  put_u32(out, static_cast<std::uint32_t>(field.d));
  for (int a = 0; a < n; ++a) put_u32(out, static_cast<std::uint32_t>(field.grid.size(a)));
  for (int a = 0; a < n; ++a) put_f64(out, field.grid.length(a));
  put_f64(out, field.time);
  for (double v : field.values) put_f64(out, v);
  return out;
}

FieldMap decode_snapshot(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic");
  std::vector<unsigned char> body(bytes.begin() + 4, bytes.end());
  Reader r(body);
  const std::uint32_t version = r.u32();
  if (version != kSnapshotVersion) throw FormatError("unsupported version " + std::to_string(version));
  const auto n = static_cast<int>(r.u32());
  const auto d = static_cast<int>(r.u32());
  if (n < 1 || n > kMaxDim || d < 1) throw FormatError("bad header dimensions");
  std::vector<int> sizes(n);
  std::vector<double> lengths(n);
  for (int a = 0; a < n; ++a) sizes[a] = static_cast<int>(r.u32());
  for (int a = 0; a < n; ++a) lengths[a] = r.f64();
  const double time = r.f64();
  GridSpec grid;
  try {
    grid = GridSpec::make(n, sizes, lengths);
  } catch (const ValidationError& e) {
    throw FormatError(std::string("bad grid in header: ") + e.what());
  }
  FieldMap f(grid, d, time);
  if (r.remaining() != f.values.size() * 8) {
    throw FormatError(r.remaining() < f.values.size() * 8 ? "snapshot truncated" : "trailing bytes after values");
  }
  for (double& v : f.values) v = r.f64();
  return f;
}

void save_snapshot(const FieldMap& field, const std::string& path) {
  const auto bytes = encode_snapshot(field);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed for " + path);
}

FieldMap load_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

}  // namespace pflow
