#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <string_view>
#include <vector>

#include "oral/error.hpp"

namespace oral {

std::vector<std::string> split_ws(std::string_view s);
std::vector<std::string> split_on(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::ifstream open_in(const std::filesystem::path& path);
std::ofstream open_out(const std::filesystem::path& path);

// 64-bit FNV-1a, stable across platforms; used wherever a seed is derived from text.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis = 0xcbf29ce484222325ULL);

// SplitMix64 finaliser; maps any integer to a well-mixed 64-bit value.
std::uint64_t mix64(std::uint64_t x);

// Process-wide cap on worker threads (the CLI's --threads). 0 = hardware concurrency.
void set_max_threads(unsigned n);
unsigned max_threads();

// Runs fn(i) for i in [0, n) on up to max_threads() workers. Each index is
// handled exactly once; results must not depend on the interleaving.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(max_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex mu;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace oral
