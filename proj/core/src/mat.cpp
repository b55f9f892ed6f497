#include "dv365/mat.hpp"

#include <cmath>

namespace dv365 {

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows_init) {
  Mat m(static_cast<int>(rows_init.size()),
        rows_init.size() ? static_cast<int>(rows_init.begin()->size()) : 0);
  int r = 0;
  for (const auto& row : rows_init) {
    DV365_CHECK(static_cast<int>(row.size()) == m.cols, "ragged initializer");
    int c = 0;
    for (double v : row) m.at(r, c++) = v;
    ++r;
  }
  return m;
}

Mat matmul(const Mat& a, const Mat& b) {
  DV365_CHECK(a.cols == b.rows, "matmul shape mismatch");
  Mat out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = a.row(i);
    double* oi = out.row(i);
    for (int k = 0; k < a.cols; ++k) {
      const double v = ai[k];
      if (v == 0.0) continue;
      const double* bk = b.row(k);
      for (int j = 0; j < b.cols; ++j) oi[j] += v * bk[j];
    }
  }
  return out;
}

Mat transpose(const Mat& m) {
  Mat out(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out.at(j, i) = m.at(i, j);
  return out;
}

bool all_finite(const Mat& m) {
  for (double v : m.a)
    if (!std::isfinite(v)) return false;
  return true;
}

double dot(const Mat& a, const Mat& b) {
  DV365_CHECK(a.size() == b.size(), "dot size mismatch");
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a.a[i] * b.a[i];
  return s;
}

Mat uniform_fan_in(int rows, int cols, std::mt19937_64& rng) {
  // bound 1/sqrt(fan_in), fan_in = rows (weights are applied as x * W).
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows > 0 ? rows : 1));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Mat m(rows, cols);
  for (double& v : m.a) v = dist(rng);
  return m;
}

Mat gaussian(int rows, int cols, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, sigma);
  Mat m(rows, cols);
  for (double& v : m.a) v = dist(rng);
  return m;
}

}  // namespace dv365
