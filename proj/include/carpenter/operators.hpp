#pragma once

#include "carpenter/frame_vector.hpp"
#include "carpenter/sequences.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace carpenter {

/// Compression <E f_i, f_j> of a symmetric operator to the reference frame.
/// Immutable after construction, so safe for concurrent reads.
class EntryOracle {
public:
  enum class Kind { Diagonal, DenseSymmetric };

  static EntryOracle diagonal(std::vector<double> values);
  /// Row-major square matrix; must be exactly symmetric.
  static EntryOracle dense(std::size_t n, std::vector<double> row_major);

  Kind kind() const noexcept { return kind_; }
  std::size_t window() const noexcept { return n_; }

  /// 1-based entry <E f_i, f_j>.
  double entry(std::size_t i, std::size_t j) const;
  double diagonal_entry(std::size_t i) const { return entry(i, i); }

  const std::vector<double>& data() const noexcept { return data_; }

private:
  EntryOracle(Kind kind, std::size_t n, std::vector<double> data)
    : kind_(kind)
    , n_(n)
    , data_(std::move(data)) {}

  Kind kind_;
  std::size_t n_;
  std::vector<double> data_;
};

/// Bilinear extension sum_i sum_j u_i v_j <E f_i, f_j>.
double compressed_entry(const EntryOracle& oracle, const FrameVector& u, const FrameVector& v);

/// Rayleigh value <E u, u>.
inline double rayleigh(const EntryOracle& oracle, const FrameVector& u) {
  return compressed_entry(oracle, u, u);
}

enum class LaplacianFlavor { Neumann, Dirichlet };

/// Interval [0, pi] Laplacian spectra: Neumann mu_j = (j-1)^2 with eigenfunctions
/// 1/sqrt(pi), sqrt(2/pi) cos((j-1)x); Dirichlet lambda_j = j^2 with sqrt(2/pi) sin(jx).
struct IntervalLaplacianModel {
  LaplacianFlavor flavor = LaplacianFlavor::Neumann;

  double eigenvalue(std::size_t j) const;
  double eigenfunction(std::size_t j, double x) const;
};

struct NeumannDirichletDemo {
  EntryOracle oracle;
  SequenceSpec lambda; // Neumann spectrum
  SequenceSpec d;      // Dirichlet eigenvalues as the target diagonal
};

/// Diagonal oracle of the Neumann Laplacian on a window, with the Dirichlet
/// eigenvalues as the pointwise-dominating target.
NeumannDirichletDemo neumann_model(std::size_t window);

/// Evaluates sum_j c_j phi_j(x) on `grid` uniform points of [0, pi], endpoints included.
std::vector<std::pair<double, double>> sample_function(const FrameVector& vec, LaplacianFlavor flavor,
                                                       std::size_t grid);

/// Integral over [0, pi] of sin(jx) cos(kx).
double sine_in_cosine_coeffs(std::size_t j, std::size_t k);

} // namespace carpenter
