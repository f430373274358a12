#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace octimls {

// Process-wide cap on worker threads. Results of every routine in this
// library are independent of this value: work is split into chunks whose
// boundaries depend only on the problem size, and partial results are
// combined in a fixed order.
void set_num_threads(int n);
int num_threads();

/// Runs fn(i) for i in [0, n) across the worker pool.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Fixed chunking of [0, n): at most max_chunks chunks of at least min_chunk
/// items. Depends only on its arguments.
struct ChunkPlan {
  std::size_t n = 0;
  std::size_t chunk = 1;
  std::size_t count = 0;

  std::size_t begin(std::size_t c) const { return c * chunk; }
  std::size_t end(std::size_t c) const { return std::min(n, (c + 1) * chunk); }
};
ChunkPlan plan_chunks(std::size_t n, std::size_t min_chunk = 2048, std::size_t max_chunks = 16);

/// Pairwise (tree) sum; the association order depends only on the length.
double pairwise_sum(std::span<const double> values);

/// Element-wise pairwise-tree reduction of equally sized buffers into the
/// first one.
void pairwise_reduce(std::vector<std::vector<double>>& buffers);

}  // namespace octimls
