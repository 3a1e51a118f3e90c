#include "carpenter/frame_vector.hpp"

#include "carpenter/errors.hpp"

#include <cmath>

namespace carpenter {

FrameVector::FrameVector(std::string id, Coefficients coeffs)
  : id_(std::move(id))
  , coeffs_(std::move(coeffs)) {
  if (!coeffs_.empty() && coeffs_.begin()->first == 0) {
    throw DomainError("frame indices start at 1");
  }
}

FrameVector FrameVector::unit(std::size_t index, std::string id) {
  if (index == 0) {
    throw DomainError("frame indices start at 1");
  }
  FrameVector v(std::move(id));
  v.coeffs_[index] = 1.0;
  return v;
}

double FrameVector::operator[](std::size_t index) const {
  const auto it = coeffs_.find(index);
  return it == coeffs_.end() ? 0.0 : it->second;
}

void FrameVector::set(std::size_t index, double value) {
  if (index == 0) {
    throw DomainError("frame indices start at 1");
  }
  if (value == 0.0) {
    coeffs_.erase(index);
  } else {
    coeffs_[index] = value;
  }
}

double FrameVector::norm() const {
  return std::sqrt(dot(*this, *this));
}

void FrameVector::scale(double factor) {
  for (auto& entry : coeffs_) {
    entry.second *= factor;
  }
}

FrameVector FrameVector::combine(double a, const FrameVector& x, double b, const FrameVector& y,
                                 std::string id) {
  FrameVector out(std::move(id));
  auto ix = x.coeffs_.begin();
  auto iy = y.coeffs_.begin();
  while (ix != x.coeffs_.end() || iy != y.coeffs_.end()) {
    std::size_t index;
    double value;
    if (iy == y.coeffs_.end() || (ix != x.coeffs_.end() && ix->first < iy->first)) {
      index = ix->first;
      value = a * ix->second;
      ++ix;
    } else if (ix == x.coeffs_.end() || iy->first < ix->first) {
      index = iy->first;
      value = b * iy->second;
      ++iy;
    } else {
      index = ix->first;
      value = a * ix->second + b * iy->second;
      ++ix;
      ++iy;
    }
    if (value != 0.0) {
      out.coeffs_.emplace_hint(out.coeffs_.end(), index, value);
    }
  }
  return out;
}

double dot(const FrameVector& x, const FrameVector& y) {
  double sum = 0.0;
  auto ix = x.coeffs().begin();
  auto iy = y.coeffs().begin();
  while (ix != x.coeffs().end() && iy != y.coeffs().end()) {
    if (ix->first < iy->first) {
      ++ix;
    } else if (iy->first < ix->first) {
      ++iy;
    } else {
      sum += ix->second * iy->second;
      ++ix;
      ++iy;
    }
  }
  return sum;
}

} // namespace carpenter
