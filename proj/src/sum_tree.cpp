#include "la3p/sum_tree.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace la3p {

namespace {

void check_priority(double priority) {
  if (!std::isfinite(priority) || priority < 0.0) {
    throw std::invalid_argument("SumTree: priority must be finite and non-negative, got " +
                                std::to_string(priority));
  }
}

}  // namespace

SumTree::SumTree(std::size_t capacity)
    : capacity_(capacity), padded_(capacity == 0 ? 0 : std::bit_ceil(capacity)) {
  if (capacity == 0) {
    throw std::invalid_argument("SumTree: capacity must be at least 1");
  }
  nodes_.assign(2 * padded_ - 1, 0.0);
  written_.assign(capacity_, false);
}

void SumTree::mark_written(std::size_t index) {
  if (!written_[index]) {
    written_[index] = true;
    ++size_;
  }
}

void SumTree::set(std::size_t index, double priority) {
  if (index >= capacity_) {
    throw std::out_of_range("SumTree::set: index " + std::to_string(index) +
                            " out of range for capacity " + std::to_string(capacity_));
  }
  check_priority(priority);
  mark_written(index);

  std::size_t node = leaf_node(index);
  nodes_[node] = priority;
  std::size_t touched = 1;
  while (node != 0) {
    node = (node - 1) / 2;
    nodes_[node] = nodes_[2 * node + 1] + nodes_[2 * node + 2];
    ++touched;
  }
  last_touched_ = touched;
}

void SumTree::assign(std::span<const double> values) {
  if (values.size() > capacity_) {
    throw std::out_of_range("SumTree::assign: more values than leaves");
  }
  for (double v : values) check_priority(v);

  double* leaves = nodes_.data() + (padded_ - 1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    leaves[i] = values[i];
    mark_written(i);
  }
  for (std::size_t node = padded_ - 1; node-- > 0;) {
    nodes_[node] = nodes_[2 * node + 1] + nodes_[2 * node + 2];
  }
}

double SumTree::get(std::size_t index) const {
  if (index >= capacity_) {
    throw std::out_of_range("SumTree::get: index out of range");
  }
  return nodes_[leaf_node(index)];
}

std::size_t SumTree::find_prefix(double value) const {
  const double sum = total();
  if (!(sum > 0.0)) {
    throw std::logic_error("SumTree::find_prefix: tree is empty (total = 0)");
  }
  if (!(value >= 0.0) || !(value < sum)) {
    throw std::out_of_range("SumTree::find_prefix: value " + std::to_string(value) +
                            " outside [0, total)");
  }

  std::size_t node = 0;
  while (node < padded_ - 1) {
    const std::size_t left = 2 * node + 1;
    if (nodes_[left] > value) {
      node = left;
    } else {
      value -= nodes_[left];
      node = left + 1;
    }
  }
  std::size_t index = node - (padded_ - 1);

  // Rounding in the subtractions can walk past the last positive leaf when
  // value sits within an ulp of total(); fall back to the nearest positive
  // leaf on the left.
  if (index >= capacity_ || nodes_[node] <= 0.0) {
    std::size_t i = std::min(index, capacity_ - 1);
    while (i > 0 && nodes_[leaf_node(i)] <= 0.0) --i;
    if (nodes_[leaf_node(i)] <= 0.0) {
      i = 0;
      while (i + 1 < capacity_ && nodes_[leaf_node(i)] <= 0.0) ++i;
    }
    index = i;
  }
  return index;
}

std::vector<std::size_t> SumTree::stratified_sample(std::size_t n, Rng& rng) const {
  const double sum = total();
  if (!(sum > 0.0)) {
    throw std::logic_error("SumTree::stratified_sample: tree is empty (total = 0)");
  }
  if (n == 0) {
    throw std::invalid_argument("SumTree::stratified_sample: n must be at least 1");
  }

  const double segment = sum / static_cast<double>(n);
  const double top = std::nextafter(sum, 0.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    double v = segment * (static_cast<double>(k) + unit(rng));
    out.push_back(find_prefix(std::min(v, top)));
  }
  return out;
}

double SumTree::max_leaf() const {
  if (size_ == 0) {
    throw std::logic_error("SumTree::max_leaf: no leaf has been written");
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < capacity_; ++i) {
    if (written_[i]) best = std::max(best, nodes_[leaf_node(i)]);
  }
  return best;
}

}  // namespace la3p
