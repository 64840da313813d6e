#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace swarmnet {

/// Dense row-major matrix of doubles. Graph batches stack B samples of n
/// nodes as B*n consecutive rows.
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Adjacency plus the derived neighbourhoods every layer needs.
///
/// `adjacency(i, j) == 1` means an edge i -> j, so node j aggregates from i.
class GraphTopology {
 public:
  GraphTopology() = default;
  explicit GraphTopology(const Tensor2& adjacency);
  static GraphTopology from_bytes(std::size_t n, const std::vector<std::uint8_t>& adjacency);

  std::size_t size() const { return n_; }
  const Tensor2& adjacency() const { return adjacency_; }
  /// Senders into node i, ascending, self excluded.
  const std::vector<std::size_t>& in_neighbors(std::size_t i) const { return in_[i]; }
  /// D^-1/2 (A^T + I) D^-1/2 with D the row sums of A^T + I.
  const Tensor2& gcn_propagation() const { return gcn_; }

 private:
  std::size_t n_ = 0;
  Tensor2 adjacency_;
  std::vector<std::vector<std::size_t>> in_;
  Tensor2 gcn_;
};

}  // namespace swarmnet
