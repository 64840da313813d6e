#include "swarmnet/attestation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "swarmnet/error.hpp"

namespace swarmnet {

using Index = Eigen::Index;

namespace {

bool same(const Tensor2& a, const Tensor2& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

}  // namespace

bool operator==(const AttestationParams& a, const AttestationParams& b) {
  return a.swarm_id == b.swarm_id && a.model == b.model && a.dt == b.dt && same(a.t_def, b.t_def) &&
         a.pad_length == b.pad_length && a.sf == b.sf && a.adjacency == b.adjacency;
}

GraphTopology AttestationParams::topology() const { return GraphTopology::from_bytes(n(), adjacency); }

std::vector<double> scale_trace(const std::vector<std::uint8_t>& bytes, std::size_t pad_length) {
  if (bytes.size() > pad_length)
    throw PadOverflow("trace of " + std::to_string(bytes.size()) + " bytes exceeds pad length " +
                      std::to_string(pad_length));
  std::vector<double> out(pad_length, 0.0);
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = bytes[i] / 255.0;
  return out;
}

Tensor2 preprocess(const SwarmResponse& sr, const Tensor2& t_def, std::size_t pad_length) {
  const auto n = static_cast<Index>(sr.slots.size());
  if (t_def.rows() != n || t_def.cols() != static_cast<Index>(pad_length))
    throw ShapeError("default traces do not match the response shape");
  Tensor2 x(n, static_cast<Index>(pad_length));
  for (Index j = 0; j < n; ++j) {
    const auto& slot = sr.slots[static_cast<std::size_t>(j)];
    if (!slot) {
      x.row(j) = t_def.row(j);
      continue;
    }
    const auto row = scale_trace(slot->bytes, pad_length);
    for (Index c = 0; c < x.cols(); ++c) x(j, c) = row[static_cast<std::size_t>(c)];
  }
  return x;
}

Tensor2 preprocess_traces(const std::vector<DataSectionTrace>& traces, std::size_t pad_length) {
  Tensor2 x(static_cast<Index>(traces.size()), static_cast<Index>(pad_length));
  for (std::size_t j = 0; j < traces.size(); ++j) {
    const auto row = scale_trace(traces[j].bytes, pad_length);
    for (std::size_t c = 0; c < pad_length; ++c) x(static_cast<Index>(j), static_cast<Index>(c)) = row[c];
  }
  return x;
}

double cosine_similarity(const double* u, const double* w, std::size_t len) {
  double dot = 0.0;
  double nu = 0.0;
  double nw = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    dot += u[i] * w[i];
    nu += u[i] * u[i];
    nw += w[i] * w[i];
  }
  if (nu == 0.0 || nw == 0.0) return -1.0;
  return dot / (std::sqrt(nu) * std::sqrt(nw));
}

double cosine_similarity(const std::vector<double>& u, const std::vector<double>& w) {
  if (u.size() != w.size()) throw ShapeError("cosine similarity of vectors with different lengths");
  return cosine_similarity(u.data(), w.data(), u.size());
}

std::vector<double> reconstruction_scores(const GraphModel& model, const Tensor2& x, const GraphTopology& graph) {
  const Tensor2 x_hat = model_forward(model, x, graph);
  std::vector<double> scores(static_cast<std::size_t>(x.rows()));
  for (Index r = 0; r < x.rows(); ++r)
    scores[static_cast<std::size_t>(r)] =
        cosine_similarity(x.row(r).data(), x_hat.row(r).data(), static_cast<std::size_t>(x.cols()));
  return scores;
}

std::vector<double> compute_thresholds(const std::vector<Tensor2>& samples, const GraphModel& model,
                                       const GraphTopology& graph, double sf) {
  if (samples.empty()) throw ValidationError("thresholds need at least one sample");
  const std::size_t n = graph.size();
  std::vector<double> lowest(n, std::numeric_limits<double>::infinity());
  for (const auto& x : samples) {
    const auto s = reconstruction_scores(model, x, graph);
    for (std::size_t j = 0; j < n; ++j) lowest[j] = std::min(lowest[j], s[j]);
  }
  for (auto& v : lowest) v *= sf;
  return lowest;
}

Tensor2 compute_default_traces(const std::vector<Tensor2>& samples) {
  if (samples.empty()) throw ValidationError("default traces need at least one sample");
  Tensor2 sum = Tensor2::Zero(samples.front().rows(), samples.front().cols());
  for (const auto& x : samples) {
    if (x.rows() != sum.rows() || x.cols() != sum.cols()) throw ShapeError("samples differ in shape");
    sum += x;
  }
  return sum / static_cast<double>(samples.size());
}

std::size_t choose_pad_length(std::size_t max_d) {
  if (max_d == 0) throw ValidationError("pad length of an empty corpus");
  return (max_d + 3) / 4 * 4;
}

DecisionFlags decide(const std::vector<double>& scores, const std::vector<double>& dt) {
  if (scores.size() != dt.size()) throw ShapeError("score and threshold counts differ");
  DecisionFlags out;
  out.scores = scores;
  out.flags.resize(scores.size());
  for (std::size_t j = 0; j < scores.size(); ++j) out.flags[j] = scores[j] > dt[j] ? 0 : 1;
  return out;
}

DecisionFlags attest_input(const Tensor2& x, const AttestationParams& params) {
  return decide(reconstruction_scores(params.model, x, params.topology()), params.dt);
}

DecisionFlags attest(const SwarmResponse& sr, const AttestationParams& params) {
  if (sr.slots.size() != params.n())
    throw ShapeError("response has " + std::to_string(sr.slots.size()) + " slots, params expect " +
                     std::to_string(params.n()));
  return attest_input(preprocess(sr, params.t_def, params.pad_length), params);
}

}  // namespace swarmnet
