#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mmangle {

// Deterministic RNG used by every generator and sampler. Same seed, same
// stream, on every platform: distributions are derived from raw 64-bit draws
// by hand so nothing depends on libstdc++'s distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // uniform in [0, 1)
  double next_double();
  // uniform in [lo, hi)
  double uniform(double lo, double hi);
  // uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n);
  // standard normal (Box-Muller, cached pair)
  double normal();

 private:
  std::uint64_t s_[4];
  bool have_cached_ = false;
  double cached_ = 0.0;
};

// Number of worker threads: min(hardware, MMANGLE_THREADS if set). At least 1.
int thread_budget();

// Runs fn(i) for i in [0, n). Results must not depend on execution order;
// callers write to disjoint slots. Serial when the budget is 1.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Shortest round-trip decimal form (std::to_chars); used everywhere a double
// reaches a file so that identical runs give identical bytes.
std::string format_double(double v);

// RFC 4180 field quoting: wraps in quotes when the field contains
// comma, quote, CR or LF, doubling embedded quotes.
std::string csv_field(const std::string& s);

double median_of(std::vector<double> v);

}  // namespace mmangle
