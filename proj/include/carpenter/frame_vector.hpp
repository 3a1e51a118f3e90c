#pragma once

#include <cstddef>
#include <map>
#include <string>

namespace carpenter {

/// Finite real combination of the reference orthonormal frame {f_i}, i >= 1.
/// Coefficients live in an ordered map so iteration (and therefore every
/// serialized artifact) is deterministic.
class FrameVector {
public:
  using Coefficients = std::map<std::size_t, double>;

  FrameVector() = default;
  explicit FrameVector(std::string id) : id_(std::move(id)) {}
  FrameVector(std::string id, Coefficients coeffs);

  /// The unit vector f_index.
  static FrameVector unit(std::size_t index, std::string id = {});

  const std::string& id() const noexcept { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  const Coefficients& coeffs() const noexcept { return coeffs_; }
  double operator[](std::size_t index) const;
  void set(std::size_t index, double value);

  bool empty() const noexcept { return coeffs_.empty(); }
  std::size_t support_size() const noexcept { return coeffs_.size(); }
  std::size_t max_index() const noexcept { return coeffs_.empty() ? 0 : coeffs_.rbegin()->first; }

  double norm() const;
  void scale(double factor);

  /// a * x + b * y, dropping exact zeros.
  static FrameVector combine(double a, const FrameVector& x, double b, const FrameVector& y,
                             std::string id = {});

private:
  std::string id_;
  Coefficients coeffs_;
};

double dot(const FrameVector& x, const FrameVector& y);

} // namespace carpenter
