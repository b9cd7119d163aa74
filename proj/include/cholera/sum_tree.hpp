#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cholera {

/// Complete binary tree of partial sums over nonnegative weights. Parents are
/// recomputed from their children on every update, so the root carries no
/// accumulated cancellation error however many updates are applied.
class SumTree {
public:
  explicit SumTree(std::size_t leaves = 0) { resize(leaves); }

  void resize(std::size_t leaves)
  {
    leaves_ = leaves;
    capacity_ = 1;
    while (capacity_ < leaves) {
      capacity_ <<= 1;
    }
    nodes_.assign(2 * capacity_, 0.0);
  }

  std::size_t size() const { return leaves_; }
  double total() const { return nodes_[1]; }
  double weight(std::size_t leaf) const { return nodes_[capacity_ + leaf]; }

  void set(std::size_t leaf, double w)
  {
    std::size_t node = capacity_ + leaf;
    nodes_[node] = w;
    for (node >>= 1; node >= 1; node >>= 1) {
      nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
    }
  }

  /// Rebuilds every parent after bulk writes through `set_leaf_only`.
  void set_leaf_only(std::size_t leaf, double w) { nodes_[capacity_ + leaf] = w; }
  void rebuild()
  {
    for (std::size_t node = capacity_ - 1; node >= 1; --node) {
      nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
    }
  }

  /// Leaf whose cumulative interval contains u, for u in [0, total()).
  /// Never returns a zero-weight leaf while total() > 0.
  std::size_t find(double u) const
  {
    std::size_t node = 1;
    while (node < capacity_) {
      const std::size_t left = 2 * node;
      if (u < nodes_[left] || nodes_[left + 1] <= 0.0) {
        node = left;
      } else {
        u -= nodes_[left];
        node = left + 1;
      }
    }
    std::size_t leaf = node - capacity_;
    // u can land past the last positive leaf through rounding; step back.
    while (leaf > 0 && nodes_[capacity_ + leaf] <= 0.0) {
      --leaf;
    }
    return leaf;
  }

private:
  std::size_t leaves_ = 0;
  std::size_t capacity_ = 1;
  std::vector<double> nodes_;
};

}  // namespace cholera
