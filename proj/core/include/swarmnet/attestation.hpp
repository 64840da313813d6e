#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "swarmnet/model.hpp"
#include "swarmnet/transport.hpp"

namespace swarmnet {

inline constexpr double kDefaultScalingFactor = 0.999;

/// Everything the verifier stores per swarm after training.
struct AttestationParams {
  std::string swarm_id;
  GraphModel model;
  std::vector<double> dt;  ///< per-node detection thresholds
  Tensor2 t_def;           ///< n x L default traces
  std::size_t pad_length = 0;
  double sf = kDefaultScalingFactor;
  std::vector<std::uint8_t> adjacency;  ///< n x n, row-major

  std::size_t n() const { return dt.size(); }
  GraphTopology topology() const;
  friend bool operator==(const AttestationParams& a, const AttestationParams& b);
};

struct DecisionFlags {
  std::vector<int> flags;      ///< 0 authorised, 1 anomalous
  std::vector<double> scores;  ///< cosine similarity per node
};

/// byte / 255, zero-padded to L. Throws PadOverflow for traces longer than L.
std::vector<double> scale_trace(const std::vector<std::uint8_t>& bytes, std::size_t pad_length);

/// n x L input: present traces scaled and padded, Missing slots replaced by
/// the matching T_def row.
Tensor2 preprocess(const SwarmResponse& sr, const Tensor2& t_def, std::size_t pad_length);

/// Same, for a full tick of traces (no Missing slots).
Tensor2 preprocess_traces(const std::vector<DataSectionTrace>& traces, std::size_t pad_length);

/// u.w / (|u||w|); -1 when either vector is all zeros.
double cosine_similarity(const double* u, const double* w, std::size_t len);
double cosine_similarity(const std::vector<double>& u, const std::vector<double>& w);

/// Per-row cosine similarity between x and model_forward(x).
std::vector<double> reconstruction_scores(const GraphModel& model, const Tensor2& x, const GraphTopology& graph);

/// DT_j = sf * min over samples of CS(X_j, G(X)_j) on clean inputs.
std::vector<double> compute_thresholds(const std::vector<Tensor2>& samples, const GraphModel& model,
                                       const GraphTopology& graph, double sf);

/// Elementwise per-node mean of the samples.
Tensor2 compute_default_traces(const std::vector<Tensor2>& samples);

/// Smallest multiple of 4 that is >= max_d.
std::size_t choose_pad_length(std::size_t max_d);

/// flag_j = score_j > DT_j ? 0 : 1.
DecisionFlags decide(const std::vector<double>& scores, const std::vector<double>& dt);

DecisionFlags attest(const SwarmResponse& sr, const AttestationParams& params);
DecisionFlags attest_input(const Tensor2& x, const AttestationParams& params);

/// Binary params container (little-endian):
///   "SWNP" | version u16 | swarm id (u16 length + bytes) | arch u8 | n u32 | L u32 | sf f64
///   | adjacency n*n bytes | DT n*f64 | T_def n*L*f64
///   | tensor count u32 | per tensor: name (u16 length + bytes), rows u32, cols u32, rows*cols f64
///   | SHA-256 of all preceding bytes
inline constexpr std::uint16_t kParamsVersion = 1;

std::vector<std::uint8_t> serialize_params(const AttestationParams& params);
/// Throws FormatError on bad magic, version, truncation or checksum.
AttestationParams parse_params(std::span<const std::uint8_t> bytes);

void save_params(const AttestationParams& params, const std::filesystem::path& path);
/// When expected_swarm is non-empty, a file for another swarm is an error.
AttestationParams load_params(const std::filesystem::path& path, const std::string& expected_swarm = {});

}  // namespace swarmnet
