#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "helika/linalg.hpp"
#include "oracles.hpp"

namespace test {

inline oracle::V v(const helika::Vec3& a) { return {a[0], a[1], a[2]}; }
inline helika::Vec3 e(const oracle::V& a) { return helika::Vec3(a[0], a[1], a[2]); }
inline double diff(const helika::Vec3& a, const oracle::V& b) { return (a - e(b)).norm(); }

// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto p = std::filesystem::temp_directory_path() /
           ("helika_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace test
