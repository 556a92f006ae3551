// Copyright 2026 The xmrs Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef XMRS_COMMON_HPP_
#define XMRS_COMMON_HPP_

#include <charconv>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace xmrs {

using Matrix = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

// Error categories. All carry a human-readable message naming the offending
// file, sample, or dimension.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Raised by the training loop when the total loss becomes non-finite.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Worker-thread cap from XMRS_THREADS. 0 (or unset) selects the
// single-threaded deterministic mode.
inline int worker_threads() {
  const char* env = std::getenv("XMRS_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  int n = std::atoi(env);
  if (n < 0) n = 0;
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw > 0 && n > hw) n = hw;
  return n;
}

// Runs fn(i) for i in [0, n). Parallel only when the thread cap allows it;
// each index must write to its own output slot so scheduling cannot change
// the result. The first worker exception is rethrown after the join.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  int threads = worker_threads();
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t workers = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace xmrs

#endif  // XMRS_COMMON_HPP_
