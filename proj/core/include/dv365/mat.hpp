#pragma once
// Dense row-major matrix of doubles. The whole model runs in 64-bit; the only
// 32-bit numbers in the system live in the quantized wire format.

#include <cstddef>
#include <random>
#include <vector>

#include "dv365/common.hpp"

namespace dv365 {

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

  double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }

  size_t size() const { return a.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double v) { std::fill(a.begin(), a.end(), v); }
  void zero() { fill(0.0); }

  static Mat zeros(int r, int c) { return Mat(r, c); }
  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows_init);
};

Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& m);
bool all_finite(const Mat& m);
double dot(const Mat& a, const Mat& b);  // flattened

// Initializers used across the model. Fan-in scaled uniform for dense layers,
// N(0, sigma) for embedding tables.
Mat uniform_fan_in(int rows, int cols, std::mt19937_64& rng);
Mat gaussian(int rows, int cols, double sigma, std::mt19937_64& rng);

}  // namespace dv365
