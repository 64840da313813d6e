#include "swarmnet/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "swarmnet/error.hpp"
#include "swarmnet/hex.hpp"

namespace swarmnet {

namespace {

constexpr std::string_view kMagic = "SWARMNET-CORPUS";
constexpr std::string_view kVersion = "v1";

}  // namespace

TraceCorpus::TraceCorpus(std::string swarm, ScenarioSpec scenario, std::size_t n, std::size_t m, std::uint64_t seed,
                         std::vector<DataSectionTrace> traces)
    : swarm_(std::move(swarm)), scenario_(std::move(scenario)), n_(n), m_(m), seed_(seed), traces_(std::move(traces)) {
  if (traces_.size() != n_ * m_)
    throw ValidationError("corpus grid has " + std::to_string(traces_.size()) + " traces, expected " +
                          std::to_string(n_ * m_));
}

std::vector<DataSectionTrace> TraceCorpus::tick(std::size_t t) const {
  return {traces_.begin() + static_cast<std::ptrdiff_t>(t * n_),
          traces_.begin() + static_cast<std::ptrdiff_t>((t + 1) * n_)};
}

std::size_t TraceCorpus::max_length() const {
  std::size_t d = 0;
  for (const auto& t : traces_) d = std::max(d, t.bytes.size());
  return d;
}

TraceCorpus generate_corpus(const SwarmGraph& swarm, const ScenarioSpec& scenario, std::size_t m, std::uint64_t seed) {
  const std::size_t n = swarm.size();
  if (m == 0) throw ValidationError("corpus needs at least one sample");
  if (scenario.variants.size() != n)
    throw ValidationError("scenario " + scenario.id + " has " + std::to_string(scenario.variants.size()) +
                          " node variants for a swarm of " + std::to_string(n));

  const std::string stream_key = swarm.name() + "/" + scenario.id;
  std::vector<Rng> rngs;
  std::vector<FirmwareState> states(n);
  std::vector<DeviceProfile> profiles(n);
  for (NodeId j = 0; j < n; ++j) {
    rngs.push_back(Rng::derive(seed, stream_key, j));
    if (scenario.physical_twin) {
      Rng device = Rng::derive(seed, stream_key + "/device", j);
      profiles[j].jitter = scenario.jitter;
      for (std::size_t k = 0; k < swarm.node(j).firmware(scenario.variants[j]).vars.size(); ++k)
        profiles[j].float_shift.push_back(device.uniform(-1.0, 1.0));
    }
  }

  std::vector<DataSectionTrace> traces(n * m);
  for (std::size_t t = 0; t < m; ++t) {
    std::vector<Outbox> sent(n);
    for (const NodeId j : swarm.step_order()) {
      const auto& fw = swarm.node(j).firmware(scenario.variants[j]);
      Inbox inbox;
      for (const auto& r : fw.rx) {
        const auto& out = sent[r.from];
        const auto it = out.find(j);
        inbox[r.from] = it == out.end() ? std::nullopt : std::optional(it->second);
      }
      auto step = step_firmware(fw, states[j], inbox, rngs[j], static_cast<std::int64_t>(t), profiles[j]);
      sent[j] = std::move(step.outbox);
      traces[t * n + j] = std::move(step.trace);
    }
  }
  return TraceCorpus(swarm.name(), scenario, n, m, seed, std::move(traces));
}

std::string serialize_corpus(const TraceCorpus& corpus) {
  std::string out;
  out.reserve(corpus.n() * corpus.m() * 1000);
  out += std::string(kMagic) + " " + std::string(kVersion) + " " + corpus.swarm() + " " + corpus.scenario().id + " " +
         std::to_string(corpus.n()) + " " + std::to_string(corpus.m()) + " " + std::to_string(corpus.seed()) + "\n";
  for (const auto& t : corpus.traces()) {
    out += std::to_string(t.tick);
    out += ' ';
    out += std::to_string(t.node);
    out += ' ';
    out += hex_encode(t.bytes);
    out += '\n';
  }
  return out;
}

void save_corpus(const TraceCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus " + path.string());
  out << serialize_corpus(corpus);
  if (!out) throw Error("write failed for corpus " + path.string());
}

namespace {

template <class T>
T parse_number(std::string_view field, const std::string& what) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) throw FormatError("corpus: bad " + what + " '" + std::string(field) + "'");
  return value;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) parts.push_back(line.substr(start, i - start));
  }
  return parts;
}

}  // namespace

TraceCorpus parse_corpus(std::string_view text, const SwarmGraph* catalog_swarm) {
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    line = text.substr(pos, end - pos);
    pos = end + 1;
    return true;
  };

  std::string_view line;
  if (!next_line(line)) throw FormatError("corpus: empty file");
  const auto header = split_ws(line);
  if (header.size() != 7 || header[0] != kMagic)
    throw FormatError("corpus: malformed header '" + std::string(line) + "'");
  if (header[1] != kVersion) throw FormatError("corpus: unsupported version " + std::string(header[1]));
  const std::string swarm(header[2]);
  const std::string scenario_id(header[3]);
  const auto n = parse_number<std::size_t>(header[4], "node count");
  const auto m = parse_number<std::size_t>(header[5], "sample count");
  const auto seed = parse_number<std::uint64_t>(header[6], "seed");
  if (n == 0 || m == 0) throw FormatError("corpus: n and m must be positive");

  std::vector<DataSectionTrace> traces(n * m);
  std::vector<bool> filled(n * m, false);
  std::size_t count = 0;
  std::size_t line_no = 1;
  while (next_line(line)) {
    ++line_no;
    const auto parts = split_ws(line);
    if (parts.empty()) continue;
    if (parts.size() != 3) throw FormatError("corpus line " + std::to_string(line_no) + ": expected 3 fields");
    const auto tick = parse_number<std::size_t>(parts[0], "tick");
    const auto node = parse_number<std::size_t>(parts[1], "node id");
    if (tick >= m || node >= n)
      throw FormatError("corpus line " + std::to_string(line_no) + ": (tick " + std::to_string(tick) + ", node " +
                        std::to_string(node) + ") outside the declared " + std::to_string(m) + " x " +
                        std::to_string(n) + " grid");
    if (parts[2].size() / 2 > kSramBytes)
      throw FormatError("corpus line " + std::to_string(line_no) + ": trace of " + std::to_string(parts[2].size() / 2) +
                        " bytes exceeds the " + std::to_string(kSramBytes) + "-byte SRAM");
    auto bytes = hex_decode(parts[2]);
    if (bytes.empty()) throw FormatError("corpus line " + std::to_string(line_no) + ": empty trace");
    const std::size_t slot = tick * n + node;
    if (filled[slot])
      throw FormatError("corpus line " + std::to_string(line_no) + ": duplicate trace for tick " +
                        std::to_string(tick) + " node " + std::to_string(node));
    filled[slot] = true;
    traces[slot] = {static_cast<NodeId>(node), static_cast<std::int64_t>(tick), std::move(bytes)};
    ++count;
  }
  if (count != n * m)
    throw FormatError("corpus: found " + std::to_string(count) + " traces, header declares " + std::to_string(n) +
                      " x " + std::to_string(m));

  ScenarioSpec scenario;
  bool found = false;
  if (catalog_swarm != nullptr && catalog_swarm->name() == swarm && catalog_swarm->size() == n) {
    for (auto& s : scenario_catalog(*catalog_swarm))
      if (s.id == scenario_id) {
        scenario = s;
        found = true;
      }
  }
  if (!found) {
    scenario.id = scenario_id;
    scenario.variants.assign(n, Variant::Normal);
  }
  return TraceCorpus(swarm, std::move(scenario), n, m, seed, std::move(traces));
}

TraceCorpus load_corpus(const std::filesystem::path& path, const SwarmGraph* catalog_swarm) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_corpus(ss.str(), catalog_swarm);
}

TraceCorpus shuffle_corpus(const TraceCorpus& corpus, std::uint64_t seed) {
  const std::size_t n = corpus.n();
  const std::size_t m = corpus.m();
  if (m < 2) throw ValidationError("temporal shuffle needs at least two samples");
  std::vector<DataSectionTrace> traces(n * m);
  for (NodeId j = 0; j < n; ++j) {
    std::vector<std::size_t> perm(m);
    for (std::size_t t = 0; t < m; ++t) perm[t] = t;
    Rng rng = Rng::derive(seed, "shuffle", j);
    rng.shuffle(perm);
    for (std::size_t t = 0; t < m; ++t) {
      traces[t * n + j] = corpus.at(perm[t], j);
      traces[t * n + j].tick = static_cast<std::int64_t>(t);
    }
  }
  auto scenario = corpus.scenario();
  scenario.id += "_S3";
  return TraceCorpus(corpus.swarm(), std::move(scenario), n, m, corpus.seed(), std::move(traces));
}

}  // namespace swarmnet
