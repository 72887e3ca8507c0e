#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "la3p/random.hpp"

namespace la3p {

/**
 * Array-backed binary sum-tree for proportional sampling.
 *
 * Layout: nodes_[0] is the root, node i has children 2i+1 and 2i+2, and the
 * padded_capacity() leaves occupy the last slots of the array. The requested
 * capacity is padded to a power of two; padding leaves stay at zero and are
 * never returned by find_prefix().
 *
 * Ancestors are recomputed from their children on every write, never updated
 * by deltas, so the parent-sum invariant holds to rounding after any number
 * of writes.
 */
class SumTree {
 public:
  explicit SumTree(std::size_t capacity);

  /// Write one leaf and refresh its ancestors. O(log capacity).
  void set(std::size_t index, double priority);

  /// Overwrite leaves [0, values.size()) and rebuild every internal node in
  /// one bottom-up pass. O(capacity).
  void assign(std::span<const double> values);

  double get(std::size_t index) const;
  double total() const { return nodes_[0]; }

  /// Smallest leaf index whose inclusive prefix sum exceeds `value`.
  std::size_t find_prefix(double value) const;

  /// Split [0, total) into n equal strata and draw one index from each.
  std::vector<std::size_t> stratified_sample(std::size_t n, Rng& rng) const;

  /// Maximum over leaves that have been written at least once.
  double max_leaf() const;

  std::size_t capacity() const { return capacity_; }
  std::size_t padded_capacity() const { return padded_; }
  /// Number of distinct leaves written so far.
  std::size_t size() const { return size_; }

  std::span<const double> nodes() const { return nodes_; }
  /// Nodes written by the most recent set() call (leaf included).
  std::size_t last_set_touched() const { return last_touched_; }

 private:
  std::size_t leaf_node(std::size_t index) const { return padded_ - 1 + index; }
  void mark_written(std::size_t index);

  std::size_t capacity_;
  std::size_t padded_;
  std::vector<double> nodes_;
  std::vector<bool> written_;
  std::size_t size_ = 0;
  std::size_t last_touched_ = 0;
};

}  // namespace la3p
