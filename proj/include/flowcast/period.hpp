#pragma once

#include <algorithm>
#include <iterator>
#include <set>
#include <span>
#include <vector>

#include "flowcast/common.hpp"

namespace flowcast {

// Keeps the `capacity` smallest distinct integers pushed into it. Backed by an
// ordered set, so the largest element is evictable in O(log k). An incoming
// value equal to the current maximum loses the tie.
class BoundedHeap {
 public:
  explicit BoundedHeap(std::size_t capacity = 5) : capacity_(capacity) {}

  void push(int value) {
    if (values_.contains(value)) return;
    if (values_.size() < capacity_) {
      values_.insert(value);
      return;
    }
    auto largest = std::prev(values_.end());
    if (value < *largest) {
      values_.erase(largest);
      values_.insert(value);
    }
  }

  std::size_t size() const { return values_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::vector<int> ascending() const { return {values_.begin(), values_.end()}; }

 private:
  std::size_t capacity_;
  std::set<int> values_;
};

struct PeriodSet {
  std::vector<int> periods;      // ascending, distinct, at most 5
  std::vector<int> run_lengths;  // every completed positive run, in scan order
  bool empty() const { return periods.empty(); }
};

inline constexpr std::size_t kPeriodCandidates = 5;

// Min-max scales into [0, 1] and centers on the mean, so sign changes mark
// crossings of the series mean. A constant series maps to all zeros.
inline std::vector<double> regularize(std::span<const double> y) {
  if (y.size() < 2) throw DataError("regularize: need at least 2 samples");
  const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return std::vector<double>(y.size(), 0.0);
  std::vector<double> out(y.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = (y[i] - lo) / (hi - lo);
    mean += out[i];
  }
  mean /= static_cast<double>(y.size());
  for (double& v : out) v -= mean;
  return out;
}

// Walks the regularized series counting consecutive positive samples; each
// completed run length is a candidate period. Returns the 5 smallest distinct
// lengths, ascending. A run still open at the end of the series is not
// counted, and empty runs between consecutive non-positive samples are
// skipped.
inline PeriodSet cycle(std::span<const double> y) {
  const std::vector<double> reg = regularize(y);
  BoundedHeap heap(kPeriodCandidates);
  PeriodSet out;
  int count = 0;
  for (double v : reg) {
    if (v > 0.0) {
      ++count;
    } else if (count > 0) {
      out.run_lengths.push_back(count);
      heap.push(count);
      count = 0;
    }
  }
  out.periods = heap.ascending();
  return out;
}

}  // namespace flowcast
