#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace gmcf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Error categories. The CLI maps each category onto a distinct exit code.
enum class ErrorCode {
  kConfig = 2,
  kParameter = 3,
  kGeometry = 4,
  kSolver = 5,
  kIo = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// splitmix64 finalizer; used to derive independent per-sample streams from
/// (seed, index) so that sampled validations do not depend on thread count.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Thread count used by parallel loops. Set once by the CLI (flag or
/// GMCF_THREADS); defaults to 1.
int thread_count();
void set_thread_count(int threads);

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks; callers
/// write results into index-addressed slots so the outcome is independent of
/// the number of threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Draws candidates make(i) for i = 0, 1, ... in parallel batches and hands
/// the present ones to accept in index order until accept returns true or
/// max_attempts indices are used. Returns the number of indices consumed.
template <class T, class Make, class Accept>
std::uint64_t sample_stream(std::uint64_t max_attempts, Make make, Accept accept) {
  const std::uint64_t batch = 2048;
  std::uint64_t done = 0;
  std::vector<std::optional<T>> slots(batch);
  while (done < max_attempts) {
    const std::uint64_t count = std::min(batch, max_attempts - done);
    parallel_for(count, [&](std::size_t i) { slots[i] = make(done + i); });
    for (std::uint64_t i = 0; i < count; ++i) {
      if (slots[i] && accept(*slots[i])) return done + i + 1;
    }
    done += count;
  }
  return done;
}

}  // namespace gmcf
