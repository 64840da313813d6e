#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "swarmnet/attestation.hpp"
#include "swarmnet/crypto.hpp"
#include "swarmnet/error.hpp"

namespace swarmnet {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    if (s.size() > 0xFFFF) throw ValidationError("name too long for params file");
    u16(static_cast<std::uint16_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  void matrix(const Tensor2& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) f64(t.data()[i]);
  }

  std::vector<std::uint8_t> out;

 private:
  void le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes(b) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string str() {
    const std::size_t len = u16();
    need(len);
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), len);
    pos += len;
    return s;
  }
  Tensor2 matrix(std::size_t rows, std::size_t cols) {
    need(rows * cols * 8);
    Tensor2 t(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = f64();
    return t;
  }
  void need(std::size_t k) const {
    if (bytes.size() - pos < k) throw FormatError("params file truncated");
  }
  std::size_t remaining() const { return bytes.size() - pos; }

 private:
  std::uint64_t le(int k) {
    need(static_cast<std::size_t>(k));
    std::uint64_t v = 0;
    for (int i = 0; i < k; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    pos += static_cast<std::size_t>(k);
    return v;
  }
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

constexpr char kMagic[4] = {'S', 'W', 'N', 'P'};

}  // namespace

std::vector<std::uint8_t> serialize_params(const AttestationParams& p) {
  const std::size_t n = p.n();
  if (p.adjacency.size() != n * n) throw ShapeError("adjacency does not match node count");
  if (p.t_def.rows() != static_cast<Eigen::Index>(n) || p.t_def.cols() != static_cast<Eigen::Index>(p.pad_length))
    throw ShapeError("default traces do not match n x L");
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kParamsVersion);
  w.str(p.swarm_id);
  w.u8(static_cast<std::uint8_t>(p.model.arch()));
  w.u32(static_cast<std::uint32_t>(n));
  w.u32(static_cast<std::uint32_t>(p.pad_length));
  w.f64(p.sf);
  w.out.insert(w.out.end(), p.adjacency.begin(), p.adjacency.end());
  for (double v : p.dt) w.f64(v);
  w.matrix(p.t_def);
  w.u32(static_cast<std::uint32_t>(p.model.params().size()));
  for (std::size_t k = 0; k < p.model.params().size(); ++k) {
    const auto& t = p.model.params()[k];
    w.str(p.model.names()[k]);
    w.u32(static_cast<std::uint32_t>(t.rows()));
    w.u32(static_cast<std::uint32_t>(t.cols()));
    w.matrix(t);
  }
  const Digest32 digest = sha256(w.out);
  w.out.insert(w.out.end(), digest.begin(), digest.end());
  return std::move(w.out);
}

AttestationParams parse_params(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) + 2 + 32) throw FormatError("params file truncated");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) throw FormatError("not a params file (bad magic)");
  const auto body = bytes.first(bytes.size() - 32);
  const Digest32 digest = sha256(body);
  Reader r(body);
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.u8();
  const std::uint16_t version = r.u16();
  if (version != kParamsVersion)
    throw FormatError("params version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kParamsVersion) + ")");
  if (!constant_time_equal(digest, bytes.last(32))) throw FormatError("params checksum mismatch");

  AttestationParams p;
  p.swarm_id = r.str();
  const std::uint8_t arch = r.u8();
  if (arch > static_cast<std::uint8_t>(Arch::GT)) throw FormatError("unknown architecture tag");
  const std::size_t n = r.u32();
  p.pad_length = r.u32();
  p.sf = r.f64();
  r.need(n * n);
  for (std::size_t i = 0; i < n * n; ++i) p.adjacency.push_back(r.u8());
  for (std::size_t j = 0; j < n; ++j) p.dt.push_back(r.f64());
  p.t_def = r.matrix(n, p.pad_length);
  const std::size_t count = r.u32();
  std::vector<std::string> names;
  std::vector<Tensor2> tensors;
  for (std::size_t k = 0; k < count; ++k) {
    names.push_back(r.str());
    const std::size_t rows = r.u32();
    const std::size_t cols = r.u32();
    tensors.push_back(r.matrix(rows, cols));
  }
  if (r.remaining() != 0) throw FormatError("params file has trailing bytes");
  try {
    p.model = GraphModel::from_tensors(static_cast<Arch>(arch), std::move(names), std::move(tensors));
  } catch (const ShapeError& e) {
    throw FormatError(std::string("params model: ") + e.what());
  }
  if (p.model.dims().input != p.pad_length) throw FormatError("model input width differs from pad length");
  return p;
}

void save_params(const AttestationParams& params, const std::filesystem::path& path) {
  const auto bytes = serialize_params(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write params file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing params file " + path.string());
}

AttestationParams load_params(const std::filesystem::path& path, const std::string& expected_swarm) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open params file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  AttestationParams p = parse_params(bytes);
  if (!expected_swarm.empty() && p.swarm_id != expected_swarm)
    throw ValidationError("params file is for swarm '" + p.swarm_id + "', not '" + expected_swarm + "'");
  return p;
}

}  // namespace swarmnet
