#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace nodef {

/// Logistic function, branch-stable for |z| up to the double range.
inline double sigmoid(double z) noexcept {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double ez = std::exp(z);
  return ez / (1.0 + ez);
}

/// log(sigmoid(z)) without forming sigmoid(z).
inline double log_sigmoid(double z) noexcept {
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

/// Rows per reduction chunk. Fixed so the summation tree never depends on
/// the worker count.
inline constexpr std::size_t kReduceChunk = 128;

/// Splits [0, n) into fixed-size chunks, folds each into its own Partial with
/// `fold(begin, end, partial)` and combines partials in chunk order with
/// `combine(acc, partial)`. The result is bitwise independent of `threads`.
template <class Partial, class Fold, class Combine>
Partial chunked_reduce(std::size_t n, unsigned threads, const Partial& init, Fold fold,
                       Combine combine) {
  const std::size_t chunks = (n + kReduceChunk - 1) / kReduceChunk;
  std::vector<Partial> partials(chunks, init);
  auto run = [&](std::size_t first_chunk, std::size_t stride) {
    for (std::size_t c = first_chunk; c < chunks; c += stride) {
      const std::size_t begin = c * kReduceChunk;
      fold(begin, std::min(n, begin + kReduceChunk), partials[c]);
    }
  };
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), chunks);
  if (workers <= 1) {
    run(0, 1);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        try {
          run(t, workers);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  Partial acc = init;
  for (auto& p : partials) combine(acc, p);
  return acc;
}

}  // namespace nodef
