#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace cascade::detail {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  void add(const CompensatedSum& other) {
    add(other.sum_);
    add(other.comp_);
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Sample mean and standard error from compensated first and second sums.
struct MeanAccumulator {
  CompensatedSum sum;
  CompensatedSum sum_sq;
  long count = 0;

  void add(double x) {
    sum.add(x);
    sum_sq.add(x * x);
    ++count;
  }
  void merge(const MeanAccumulator& o) {
    sum.add(o.sum);
    sum_sq.add(o.sum_sq);
    count += o.count;
  }
  double mean() const { return count > 0 ? sum.value() / static_cast<double>(count) : 0.0; }
  double standard_error() const {
    if (count < 2) return 0.0;
    const double n = static_cast<double>(count);
    const double m = mean();
    const double var = std::max(0.0, (sum_sq.value() - n * m * m) / (n - 1.0));
    return std::sqrt(var / n);
  }
};

inline int default_jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs task(i) for i in [0, count) on `jobs` threads. Tasks write their
/// results into caller-owned slots, so output order never depends on
/// completion order.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(std::max<std::size_t>(count, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
  pool.reserve(static_cast<std::size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = static_cast<std::size_t>(w); i < count; i += static_cast<std::size_t>(jobs)) task(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace cascade::detail
