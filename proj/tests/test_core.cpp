// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "cda/fastmath.hpp"
#include "cda/rng.hpp"
#include "cda/tensor_io.hpp"
#include "doctest.h"

using namespace cda;

TEST_CASE("splitmix64 streams are reproducible and well spread") {
  SplitMix64 a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  SplitMix64 rng(7);
  double mean = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    mean += u;
  }
  CHECK(std::abs(mean / n - 0.5) < 0.01);
}

TEST_CASE("gaussian draws have unit variance and zero mean") {
  SplitMix64 rng(11);
  double mean = 0.0, var = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.next_gaussian();
    mean += g;
    var += g * g;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("mix_seed decorrelates scene indices") {
  CHECK(mix_seed(1, 0) != mix_seed(1, 1));
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));
}

TEST_CASE("portable_sin matches libm") {
  for (double x = -50.0; x <= 50.0; x += 0.0137)
    CHECK(std::abs(portable_sin(x) - std::sin(x)) < 2e-9);
}

TEST_CASE("fast_exp matches libm") {
  for (double x = -60.0; x <= 60.0; x += 0.0113) {
    const double rel = std::abs(fast_exp(x) - std::exp(x)) / std::exp(x);
    CHECK(rel < 1e-12);
  }
  CHECK(fast_exp(-1000.0) == 0.0);
}

TEST_CASE("pow_sharpen integer fast path equals pow") {
  for (double r = 0.0; r <= 1.0; r += 0.01) {
    CHECK(std::abs(pow_sharpen(r, 6.0) - std::pow(r, 6.0)) < 1e-15);
    CHECK(std::abs(pow_sharpen(r, 2.5) - std::pow(r, 2.5)) < 1e-15);
  }
}

TEST_CASE("tensor round-trip is bit-exact") {
  const std::string path = std::filesystem::temp_directory_path() / "cda_test_tensor.cda";
  SplitMix64 rng(3);
  std::vector<double> data(3 * 4 * 5);
  for (double& v : data) v = rng.next_gaussian();
  save_tensor(path, {3, 4, 5}, data);
  const LoadedTensor t = load_tensor(path);
  CHECK(t.dtype == Dtype::kF64);
  REQUIRE(t.dims == std::vector<uint32_t>{3, 4, 5});
  REQUIRE(t.f64.size() == data.size());
  for (size_t i = 0; i < data.size(); ++i) CHECK(std::memcmp(&t.f64[i], &data[i], 8) == 0);
  std::filesystem::remove(path);
}

TEST_CASE("tensor header layout: 16 bytes before a rank-2 payload") {
  const std::string path = std::filesystem::temp_directory_path() / "cda_test_mask.cda";
  std::vector<int32_t> mask(64 * 64, 1);
  save_tensor(path, {64, 64}, mask);
  CHECK(std::filesystem::file_size(path) == 16 + 64 * 64 * 4);
  std::filesystem::remove(path);
}

TEST_CASE("truncated tensor file reports the offset") {
  const std::string path = std::filesystem::temp_directory_path() / "cda_test_trunc.cda";
  save_tensor(path, {8}, std::vector<double>(8, 1.0));
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 1);
  CHECK_THROWS_AS(load_tensor(path), Error);
  std::filesystem::remove(path);

  FILE* f = std::fopen(path.c_str(), "wb");
  std::fwrite("BAD!", 1, 4, f);
  std::fclose(f);
  CHECK_THROWS_WITH_AS(load_tensor(path), doctest::Contains("bad magic"), Error);
  std::filesystem::remove(path);
}
