#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "urqe/stats.h"

// Layout (all integers little-endian, doubles as IEEE-754 bit patterns):
//   magic "URQESTAT", u32 version
//   u8 mode, u8 missing, f64 raw_scale, u64 num_cases, u64 num_items
//   num_items x (u32 length, bytes)            item vocabulary
//   num_items x f64 item_sum, num_items x u64 item_valid
//   (num_items + 1) x u64 offsets
//   offsets[num_items] x (u32 item, u32 valid, f64 joint, f64 self, f64 other)

namespace urqe {

namespace {

constexpr std::array<char, 8> kMagic = {'U', 'R', 'Q', 'E', 'S', 'T', 'A', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.put(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes() {
    const std::uint32_t n = u32();
    std::string s(n, '\0');
    in_.read(s.data(), n);
    check();
    return s;
  }

 private:
  std::uint64_t le(int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      const int c = in_.get();
      if (c == std::char_traits<char>::eof()) check(true);
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
  }
  void check(bool eof = false) {
    if (eof || !in_) throw DataError("truncated statistics snapshot");
  }
  std::istream& in_;
};

}  // namespace

void write_snapshot(std::ostream& out, const CooccurrenceStats& stats) {
  Writer w(out);
  out.write(kMagic.data(), kMagic.size());
  w.u32(kVersion);
  w.u8(stats.mode_ == ValueMode::kBinary ? 0 : 1);
  w.u8(stats.missing_ == MissingPolicy::kZero ? 0 : 1);
  w.f64(stats.raw_scale_);
  w.u64(stats.num_cases_);
  w.u64(stats.item_sum_.size());
  for (const auto& id : stats.items_.ids()) w.bytes(id);
  for (double s : stats.item_sum_) w.f64(s);
  for (auto v : stats.item_valid_) w.u64(v);
  for (auto o : stats.offsets_) w.u64(o);
  for (const Neighbor& n : stats.neighbors_) {
    w.u32(n.item);
    w.u32(n.valid);
    w.f64(n.joint);
    w.f64(n.self_sum);
    w.f64(n.other_sum);
  }
  if (!out) throw DataError("failed to write statistics snapshot");
}

CooccurrenceStats read_snapshot(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError("not a statistics snapshot");
  Reader r(in);
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw DataError("unsupported snapshot version " + std::to_string(version));
  }
  CooccurrenceStats stats;
  stats.mode_ = r.u8() == 0 ? ValueMode::kBinary : ValueMode::kGraded;
  stats.missing_ = r.u8() == 0 ? MissingPolicy::kZero : MissingPolicy::kUnknown;
  stats.raw_scale_ = r.f64();
  stats.num_cases_ = r.u64();
  const std::uint64_t a = r.u64();
  for (std::uint64_t i = 0; i < a; ++i) {
    if (stats.items_.intern(r.bytes()) != i) throw DataError("duplicate item id in snapshot");
  }
  stats.item_sum_.resize(a);
  stats.item_valid_.resize(a);
  stats.offsets_.resize(a + 1);
  for (auto& s : stats.item_sum_) s = r.f64();
  for (auto& v : stats.item_valid_) v = r.u64();
  for (auto& o : stats.offsets_) o = r.u64();
  for (std::size_t i = 0; i < a; ++i) {
    if (stats.offsets_[i + 1] < stats.offsets_[i]) throw DataError("corrupt snapshot offsets");
  }
  stats.neighbors_.resize(stats.offsets_[a]);
  for (Neighbor& n : stats.neighbors_) {
    n.item = r.u32();
    n.valid = r.u32();
    n.joint = r.f64();
    n.self_sum = r.f64();
    n.other_sum = r.f64();
    if (n.item >= a) throw DataError("corrupt snapshot neighbor index");
  }
  return stats;
}

void write_snapshot_file(const std::string& path, const CooccurrenceStats& stats) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  write_snapshot(out, stats);
}

CooccurrenceStats read_snapshot_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return read_snapshot(in);
}

}  // namespace urqe
