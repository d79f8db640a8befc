#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <thread>
#include <vector>

namespace dflab {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a, stable across platforms (std::hash is not).
constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for substream `index` of task `task` under master seed `seed`.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::string_view task,
                                       std::uint64_t index) {
  return mix64(mix64(seed ^ fnv1a(task)) + mix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed, std::string_view task, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(substream_seed(seed, task, index)),
                    static_cast<std::uint32_t>(substream_seed(seed, task, index) >> 32)};
  return Rng(seq);
}

/// Uniform draw in the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  while (x <= 0.0) x = u(rng);
  return x;
}

/// Running mean/variance (Welford) with an order-fixed merge.
class Moments {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const Moments& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
  }

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
  /// Standard error of the mean.
  double stderr_mean() const {
    return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Monte-Carlo execution settings. Results depend on (seed, chunk_size) only,
/// never on the worker count: every chunk owns a substream and partial
/// results are merged in chunk order.
struct MonteCarlo {
  std::uint64_t seed = 20240601;
  unsigned workers = 1;
  std::size_t chunk_size = 4096;
};

/// Runs `fn(rng, out)` for `n` samples, each filling `n_stats` values, and
/// returns per-statistic moments.
template <class Fn>
std::vector<Moments> mc_accumulate(const MonteCarlo& mc, std::string_view task, std::size_t n,
                                   std::size_t n_stats, Fn&& fn) {
  const std::size_t chunk = std::max<std::size_t>(1, mc.chunk_size);
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<std::vector<Moments>> partial(n_chunks, std::vector<Moments>(n_stats));

  auto run_chunk = [&](std::size_t c) {
    Rng rng = make_rng(mc.seed, task, c);
    std::vector<double> out(n_stats);
    const std::size_t end = std::min(n, (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) {
      fn(rng, std::span<double>(out));
      for (std::size_t k = 0; k < n_stats; ++k) partial[c][k].add(out[k]);
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(mc.workers, n_chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t c = w; c < n_chunks; c += workers) run_chunk(c);
      });
    }
    for (auto& t : pool) t.join();
  }

  std::vector<Moments> total(n_stats);
  for (const auto& p : partial)
    for (std::size_t k = 0; k < n_stats; ++k) total[k].merge(p[k]);
  return total;
}

/// Parallel loop over items with one substream per item; output order is
/// the item order.
template <class T, class Fn>
std::vector<T> mc_map(const MonteCarlo& mc, std::string_view task, std::size_t n, Fn&& fn) {
  std::vector<T> out(n);
  const unsigned workers = std::max(1u, std::min<unsigned>(mc.workers, std::max<std::size_t>(n, 1)));
  auto body = [&](std::size_t i) {
    Rng rng = make_rng(mc.seed, task, i);
    out[i] = fn(rng, i);
  };
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) body(i);
      });
    for (auto& t : pool) t.join();
  }
  return out;
}

/// Two-sample Kolmogorov-Smirnov statistic. Sorts its arguments.
double ks_two_sample(std::vector<double>& a, std::vector<double>& b);

/// Asymptotic two-sample KS critical value at level alpha.
double ks_critical(std::size_t n, std::size_t m, double alpha);

}  // namespace dflab
