#include "carpenter/operators.hpp"

#include "carpenter/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace carpenter {

EntryOracle EntryOracle::diagonal(std::vector<double> values) {
  if (values.empty()) {
    throw DomainError("diagonal oracle needs at least one value");
  }
  const std::size_t n = values.size();
  return EntryOracle(Kind::Diagonal, n, std::move(values));
}

EntryOracle EntryOracle::dense(std::size_t n, std::vector<double> row_major) {
  if (n == 0 || row_major.size() != n * n) {
    throw DomainError("dense oracle needs an n x n matrix");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (row_major[i * n + j] != row_major[j * n + i]) {
        throw DomainError("dense oracle matrix is not symmetric");
      }
    }
  }
  return EntryOracle(Kind::DenseSymmetric, n, std::move(row_major));
}

double EntryOracle::entry(std::size_t i, std::size_t j) const {
  if (i == 0 || j == 0 || i > n_ || j > n_) {
    std::ostringstream os;
    os << "entry (" << i << ", " << j << ") outside oracle window " << n_;
    throw DomainError(os.str());
  }
  if (kind_ == Kind::Diagonal) {
    return i == j ? data_[i - 1] : 0.0;
  }
  return data_[(i - 1) * n_ + (j - 1)];
}

double compressed_entry(const EntryOracle& oracle, const FrameVector& u, const FrameVector& v) {
  if (u.max_index() > oracle.window() || v.max_index() > oracle.window()) {
    throw DomainError("vector support exceeds the oracle window");
  }
  double sum = 0.0;
  if (oracle.kind() == EntryOracle::Kind::Diagonal) {
    const auto& lambda = oracle.data();
    auto iu = u.coeffs().begin();
    auto iv = v.coeffs().begin();
    while (iu != u.coeffs().end() && iv != v.coeffs().end()) {
      if (iu->first < iv->first) {
        ++iu;
      } else if (iv->first < iu->first) {
        ++iv;
      } else {
        sum += iu->second * iv->second * lambda[iu->first - 1];
        ++iu;
        ++iv;
      }
    }
    return sum;
  }
  for (const auto& [i, ui] : u.coeffs()) {
    double row = 0.0;
    for (const auto& [j, vj] : v.coeffs()) {
      row += oracle.entry(i, j) * vj;
    }
    sum += ui * row;
  }
  return sum;
}

double IntervalLaplacianModel::eigenvalue(std::size_t j) const {
  if (j == 0) {
    throw DomainError("eigenvalue indices start at 1");
  }
  const auto x = static_cast<double>(flavor == LaplacianFlavor::Neumann ? j - 1 : j);
  return x * x;
}

double IntervalLaplacianModel::eigenfunction(std::size_t j, double x) const {
  if (j == 0) {
    throw DomainError("eigenfunction indices start at 1");
  }
  const double amp = std::sqrt(2.0 / std::numbers::pi);
  if (flavor == LaplacianFlavor::Neumann) {
    if (j == 1) {
      return 1.0 / std::sqrt(std::numbers::pi);
    }
    return amp * std::cos(static_cast<double>(j - 1) * x);
  }
  return amp * std::sin(static_cast<double>(j) * x);
}

NeumannDirichletDemo neumann_model(std::size_t window) {
  if (window == 0) {
    throw DomainError("neumann model needs a positive window");
  }
  const IntervalLaplacianModel neumann{LaplacianFlavor::Neumann};
  const IntervalLaplacianModel dirichlet{LaplacianFlavor::Dirichlet};
  std::vector<double> mu;
  std::vector<double> lam;
  for (std::size_t j = 1; j <= window; ++j) {
    mu.push_back(neumann.eigenvalue(j));
    lam.push_back(dirichlet.eigenvalue(j));
    if (mu.back() > lam.back()) {
      throw DomainError("Neumann eigenvalue exceeds Dirichlet eigenvalue");
    }
  }
  auto lambda = SequenceSpec::nondecreasing(mu, "neumann");
  auto d = SequenceSpec::nondecreasing(lam, "dirichlet");
  lambda.exact = d.exact = true;
  lambda.regime = d.regime = TailRegime::PointwiseDominated;
  return {EntryOracle::diagonal(std::move(mu)), std::move(lambda), std::move(d)};
}

std::vector<std::pair<double, double>> sample_function(const FrameVector& vec, LaplacianFlavor flavor,
                                                       std::size_t grid) {
  if (grid < 2) {
    throw DomainError("sampling grid needs at least 2 points");
  }
  const IntervalLaplacianModel model{flavor};
  std::vector<std::pair<double, double>> out;
  out.reserve(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    const double x = std::numbers::pi * static_cast<double>(i) / static_cast<double>(grid - 1);
    double value = 0.0;
    for (const auto& [j, c] : vec.coeffs()) {
      value += c * model.eigenfunction(j, x);
    }
    out.emplace_back(x, value);
  }
  return out;
}

double sine_in_cosine_coeffs(std::size_t j, std::size_t k) {
  if (j == 0) {
    throw DomainError("sine index starts at 1");
  }
  if (j == k) {
    return 0.0;
  }
  const double sign = ((j + k) % 2 == 0) ? 1.0 : -1.0;
  const auto jj = static_cast<double>(j);
  const auto kk = static_cast<double>(k);
  return jj * (1.0 - sign) / (jj * jj - kk * kk);
}

} // namespace carpenter
