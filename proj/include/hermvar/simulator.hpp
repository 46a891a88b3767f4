#pragma once

// Exact sampling of the normalised rectangular-increment field of a fractional
// Brownian sheet.
//
// The increment covariance is separable, E[X_ij X_i'j'] = r_a(i-i') r_b(j-j'),
// so X = A G B^T with A A^T and B B^T the two Toeplitz matrices [r(i-i')].
// Each axis factor is the leading block of the symmetric square root of the
// circulant extension of order 2n (applied by FFT), with a dense Cholesky
// factor as fallback when the extension is not positive semidefinite.

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "hermvar/errors.hpp"
#include "hermvar/kernels.hpp"
#include "hermvar/rng.hpp"

namespace hermvar {

/// N x M grid of normalised increments X_ij = N^a M^b (rectangle increment of W),
/// stored row-major with i (alpha axis) as the row index.
struct IncrementField {
  HurstExponent alpha{0.5};
  HurstExponent beta{0.5};
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<double> data;

  IncrementField() = default;
  IncrementField(HurstExponent a, HurstExponent b, std::size_t rows, std::size_t cols)
      : alpha(a), beta(b), n(rows), m(cols), data(rows * cols, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * m + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * m + j]; }
};

/// Sheet values W(i/N, j/M), 0 <= i <= N, 0 <= j <= M, row-major.
struct SheetGrid {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<double> values;

  double& operator()(std::size_t i, std::size_t j) { return values[i * (m + 1) + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * (m + 1) + j]; }
};

/// Values in [-kEmbeddingTolerance, 0) are clamped to zero; anything lower is a failure.
inline constexpr double kEmbeddingTolerance = 1e-9;

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

using FftwPlan = std::shared_ptr<std::remove_pointer_t<fftw_plan>>;

inline FftwPlan make_plan(fftw_plan raw) {
  return FftwPlan(raw, [](fftw_plan p) {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  });
}

/// r2c / c2r plan pair of length `len`, executable concurrently on distinct buffers.
struct RealFftPair {
  std::size_t len = 0;
  FftwPlan forward;
  FftwPlan backward;

  explicit RealFftPair(std::size_t length) : len(length) {
    std::vector<double> re(len);
    std::vector<std::complex<double>> spec(len / 2 + 1);
    auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
    const int n = static_cast<int>(len);
    std::lock_guard lock(fftw_planner_mutex());
    forward = make_plan(fftw_plan_dft_r2c_1d(n, re.data(), cplx, FFTW_ESTIMATE | FFTW_UNALIGNED));
    backward = make_plan(
        fftw_plan_dft_c2r_1d(n, cplx, re.data(), FFTW_ESTIMATE | FFTW_UNALIGNED));
  }

  void r2c(double* in, std::complex<double>* out) const {
    fftw_execute_dft_r2c(forward.get(), in, reinterpret_cast<fftw_complex*>(out));
  }
  // Destroys `in`.
  void c2r(std::complex<double>* in, double* out) const {
    fftw_execute_dft_c2r(backward.get(), reinterpret_cast<fftw_complex*>(in), out);
  }
};

inline std::vector<double> circulant_first_row(HurstExponent gamma, std::size_t n) {
  std::vector<double> row(2 * n);
  for (std::size_t k = 0; k <= n; ++k) row[k] = fgn_autocovariance(gamma, static_cast<std::int64_t>(k));
  for (std::size_t k = n + 1; k < 2 * n; ++k) row[k] = row[2 * n - k];
  return row;
}

}  // namespace detail

/// Eigenvalues of the order-2n circulant extension of the fGn Toeplitz matrix,
/// first row (r(0), ..., r(n), r(n-1), ..., r(1)). Throws EmbeddingError when an
/// eigenvalue falls below -kEmbeddingTolerance.
inline std::vector<double> circulant_factor(HurstExponent gamma, std::size_t n) {
  detail::require(n >= 1, "circulant_factor requires N >= 1");
  std::vector<double> row = detail::circulant_first_row(gamma, n);
  const std::size_t len = row.size();
  detail::RealFftPair fft(len);
  std::vector<std::complex<double>> spec(len / 2 + 1);
  fft.r2c(row.data(), spec.data());
  std::vector<double> eig(len);
  for (std::size_t k = 0; k < len; ++k) {
    const std::size_t idx = k <= len / 2 ? k : len - k;
    double v = spec[idx].real();
    if (v < 0.0) {
      if (v < -kEmbeddingTolerance)
        throw EmbeddingError("circulant embedding failed: eigenvalue " + std::to_string(v) +
                             " at index " + std::to_string(k) + " (gamma=" +
                             std::to_string(gamma.value()) + ", N=" + std::to_string(n) + ")");
      v = 0.0;
    }
    eig[k] = v;
  }
  return eig;
}

/// Linear map from standard normals to one stationary fGn vector of length n.
/// Immutable after construction; apply() may be called from any thread.
class AxisSampler {
 public:
  AxisSampler(HurstExponent gamma, std::size_t n, bool force_dense = false)
      : gamma_(gamma), n_(n) {
    detail::require(n >= 1, "axis sampler requires N >= 1");
    if (!force_dense) {
      try {
        const std::vector<double> eig = circulant_factor(gamma, n);
        const std::size_t len = eig.size();
        scaled_root_.resize(len / 2 + 1);
        for (std::size_t k = 0; k < scaled_root_.size(); ++k)
          scaled_root_[k] = std::sqrt(eig[k]) / static_cast<double>(len);
        fft_ = std::make_shared<detail::RealFftPair>(len);
        return;
      } catch (const EmbeddingError&) {
        // dense fallback below
      }
    }
    Eigen::MatrixXd cov(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        cov(i, j) = fgn_autocovariance(gamma, static_cast<std::int64_t>(i) - static_cast<std::int64_t>(j));
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw EmbeddingError("dense Cholesky of the fGn covariance failed (N=" + std::to_string(n) + ")");
    cholesky_ = llt.matrixL();
  }

  HurstExponent gamma() const { return gamma_; }
  std::size_t size() const { return n_; }
  bool uses_embedding() const { return static_cast<bool>(fft_); }
  /// Number of standard normals consumed per output vector.
  std::size_t input_size() const { return uses_embedding() ? 2 * n_ : n_; }

  /// out[0..n) = A in[0..input_size()).
  void apply(std::span<const double> in, std::span<double> out) const {
    if (!uses_embedding()) {
      for (std::size_t i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= i; ++j) acc += cholesky_(i, j) * in[j];
        out[i] = acc;
      }
      return;
    }
    thread_local std::vector<double> re;
    thread_local std::vector<std::complex<double>> spec;
    const std::size_t len = 2 * n_;
    re.assign(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(len));
    spec.resize(len / 2 + 1);
    fft_->r2c(re.data(), spec.data());
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= scaled_root_[k];
    fft_->c2r(spec.data(), re.data());
    std::copy_n(re.begin(), n_, out.begin());
  }

  /// Dense n x input_size() matrix of the map (columns = images of unit vectors).
  Eigen::MatrixXd dense_map() const {
    Eigen::MatrixXd a(n_, input_size());
    std::vector<double> e(input_size(), 0.0);
    std::vector<double> col(n_);
    for (std::size_t j = 0; j < input_size(); ++j) {
      e[j] = 1.0;
      apply(e, col);
      e[j] = 0.0;
      for (std::size_t i = 0; i < n_; ++i) a(i, j) = col[i];
    }
    return a;
  }

 private:
  HurstExponent gamma_;
  std::size_t n_;
  std::vector<double> scaled_root_;
  std::shared_ptr<detail::RealFftPair> fft_;
  Eigen::MatrixXd cholesky_;
};

/// Samples fGn vectors of length n with autocovariance r_gamma.
inline std::vector<double> sample_fgn(const AxisSampler& sampler, SeedSpec seed) {
  GaussianStream rng(seed);
  std::vector<double> g(sampler.input_size());
  rng.fill_normal(g.begin(), g.end());
  std::vector<double> out(sampler.size());
  sampler.apply(g, out);
  return out;
}

inline std::vector<double> sample_fgn(HurstExponent gamma, std::size_t n, SeedSpec seed) {
  return sample_fgn(AxisSampler(gamma, n), seed);
}

/// Sampler of normalised increment fields X = A G B^T on an N x M grid.
class FieldSampler {
 public:
  FieldSampler(HurstExponent alpha, HurstExponent beta, std::size_t n, std::size_t m,
               bool force_dense = false)
      : rows_(alpha, n, force_dense), cols_(beta, m, force_dense) {}

  const AxisSampler& alpha_axis() const { return rows_; }
  const AxisSampler& beta_axis() const { return cols_; }
  std::size_t n() const { return rows_.size(); }
  std::size_t m() const { return cols_.size(); }

  /// Normals consumed per field: input_size(alpha) x input_size(beta), row-major.
  std::size_t input_size() const { return rows_.input_size() * cols_.input_size(); }

  IncrementField sample(SeedSpec seed) const {
    std::vector<double> g(input_size());
    GaussianStream rng(seed);
    rng.fill_normal(g.begin(), g.end());
    return transform(g);
  }

  /// The sampling map X = A G B^T applied to a given normal matrix G.
  IncrementField transform(std::span<const double> g) const {
    detail::require(g.size() == input_size(), "transform: wrong number of normals");
    const std::size_t gr = rows_.input_size();
    const std::size_t gc = cols_.input_size();
    const std::size_t n = rows_.size();
    const std::size_t m = cols_.size();

    // alpha axis: columns of G -> first n rows
    std::vector<double> mid(n * gc);
    std::vector<double> col_in(gr);
    std::vector<double> col_out(n);
    for (std::size_t c = 0; c < gc; ++c) {
      for (std::size_t r = 0; r < gr; ++r) col_in[r] = g[r * gc + c];
      rows_.apply(col_in, col_out);
      for (std::size_t r = 0; r < n; ++r) mid[r * gc + c] = col_out[r];
    }
    // beta axis: rows of the intermediate -> first m columns
    IncrementField field(rows_.gamma(), cols_.gamma(), n, m);
    for (std::size_t r = 0; r < n; ++r) {
      std::span<const double> row(mid.data() + r * gc, gc);
      cols_.apply(row, std::span<double>(field.data.data() + r * m, m));
    }
    return field;
  }

 private:
  AxisSampler rows_;
  AxisSampler cols_;
};

inline IncrementField sample_increment_field(HurstExponent alpha, HurstExponent beta,
                                             std::size_t n, std::size_t m, SeedSpec seed) {
  return FieldSampler(alpha, beta, n, m).sample(seed);
}

/// Increment field of the same sheet on the (N/k) x (M/l) grid:
/// X'_IJ = k^{-a} l^{-b} sum of the k x l block.
inline IncrementField coarse_grain(const IncrementField& field, std::size_t k, std::size_t l) {
  detail::require(k >= 1 && l >= 1, "coarse_grain factors must be >= 1");
  detail::require(field.n % k == 0 && field.m % l == 0,
                  "coarse_grain requires k | N and l | M (N=" + std::to_string(field.n) +
                      ", M=" + std::to_string(field.m) + ", k=" + std::to_string(k) +
                      ", l=" + std::to_string(l) + ")");
  if (k == 1 && l == 1) return field;
  IncrementField out(field.alpha, field.beta, field.n / k, field.m / l);
  const double scale = std::pow(static_cast<double>(k), -field.alpha.value()) *
                       std::pow(static_cast<double>(l), -field.beta.value());
  for (std::size_t bi = 0; bi < out.n; ++bi) {
    for (std::size_t bj = 0; bj < out.m; ++bj) {
      double acc = 0.0;
      for (std::size_t i = bi * k; i < (bi + 1) * k; ++i)
        for (std::size_t j = bj * l; j < (bj + 1) * l; ++j) acc += field(i, j);
      out(bi, bj) = scale * acc;
    }
  }
  return out;
}

/// W(i/N, j/M) by double cumulative summation of N^{-a} M^{-b} X.
inline SheetGrid reconstruct_sheet(const IncrementField& field) {
  SheetGrid w{field.n, field.m, std::vector<double>((field.n + 1) * (field.m + 1), 0.0)};
  const double scale = std::pow(static_cast<double>(field.n), -field.alpha.value()) *
                       std::pow(static_cast<double>(field.m), -field.beta.value());
  for (std::size_t i = 0; i < field.n; ++i) {
    double row_acc = 0.0;  // sum_{j' <= j} dW(i, j')
    for (std::size_t j = 0; j < field.m; ++j) {
      row_acc += scale * field(i, j);
      w(i + 1, j + 1) = w(i, j + 1) + row_acc;
    }
  }
  return w;
}

/// Inverse of reconstruct_sheet: normalised rectangle increments of a sheet grid.
inline IncrementField increments_from_sheet(const SheetGrid& w, HurstExponent alpha,
                                            HurstExponent beta) {
  IncrementField out(alpha, beta, w.n, w.m);
  const double scale = std::pow(static_cast<double>(w.n), alpha.value()) *
                       std::pow(static_cast<double>(w.m), beta.value());
  for (std::size_t i = 0; i < w.n; ++i)
    for (std::size_t j = 0; j < w.m; ++j)
      out(i, j) = scale * (w(i + 1, j + 1) - w(i, j + 1) - w(i + 1, j) + w(i, j));
  return out;
}

// Binary field format: 32-byte header then N*M little-endian float64, row-major.
//   bytes 0-7   magic "HVFIELD1"
//   bytes 8-11  N (uint32)      bytes 12-15  M (uint32)
//   bytes 16-23 alpha (float64) bytes 24-31  beta (float64)
inline constexpr std::array<char, 8> kFieldMagic = {'H', 'V', 'F', 'I', 'E', 'L', 'D', '1'};

namespace detail {

template <typename U>
void put_le(std::ostream& os, U v) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t b = 0; b < sizeof(U); ++b) bytes[b] = static_cast<char>((v >> (8 * b)) & 0xFF);
  os.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& is) {
  std::array<unsigned char, sizeof(U)> bytes{};
  is.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!is) throw std::runtime_error("truncated field file");
  U v = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) v |= static_cast<U>(bytes[b]) << (8 * b);
  return v;
}

}  // namespace detail

inline void write_field(std::ostream& os, const IncrementField& field) {
  detail::require(field.n <= 0xFFFFFFFFu && field.m <= 0xFFFFFFFFu, "grid too large for the binary format");
  os.write(kFieldMagic.data(), kFieldMagic.size());
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(field.n));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(field.m));
  detail::put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(field.alpha.value()));
  detail::put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(field.beta.value()));
  for (double x : field.data) detail::put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(x));
}

inline IncrementField read_field(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kFieldMagic) throw std::runtime_error("not a field file (bad magic)");
  const auto n = detail::get_le<std::uint32_t>(is);
  const auto m = detail::get_le<std::uint32_t>(is);
  const double a = std::bit_cast<double>(detail::get_le<std::uint64_t>(is));
  const double b = std::bit_cast<double>(detail::get_le<std::uint64_t>(is));
  IncrementField field(HurstExponent(a), HurstExponent(b), n, m);
  for (double& x : field.data) x = std::bit_cast<double>(detail::get_le<std::uint64_t>(is));
  return field;
}

}  // namespace hermvar
