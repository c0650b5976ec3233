#include "bidplan/grad/param_vector.hpp"

#include <cmath>
#include <stdexcept>

namespace bidplan {

std::size_t ParamVector::add(const std::string& name, std::size_t size) {
  for (const ParamSlice& s : layout_) {
    if (s.name == name) throw std::logic_error("ParamVector: duplicate group " + name);
  }
  const std::size_t offset = values.size();
  layout_.push_back({name, offset, size});
  values.resize(offset + size, 0.0);
  return offset;
}

const ParamSlice& ParamVector::slice(const std::string& name) const {
  for (const ParamSlice& s : layout_) {
    if (s.name == name) return s;
  }
  throw std::out_of_range("ParamVector: no group named " + name);
}

std::span<double> ParamVector::group(const std::string& name) {
  const ParamSlice& s = slice(name);
  return std::span<double>(values).subspan(s.offset, s.size);
}

std::span<const double> ParamVector::group(const std::string& name) const {
  const ParamSlice& s = slice(name);
  return std::span<const double>(values).subspan(s.offset, s.size);
}

ParamVector ParamVector::zeros_like() const {
  ParamVector out;
  out.layout_ = layout_;
  out.values.assign(values.size(), 0.0);
  return out;
}

bool ParamVector::same_layout(const ParamVector& other) const {
  if (values.size() != other.values.size() || layout_.size() != other.layout_.size()) return false;
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    const ParamSlice& a = layout_[i];
    const ParamSlice& b = other.layout_[i];
    if (a.name != b.name || a.offset != b.offset || a.size != b.size) return false;
  }
  return true;
}

void ParamVector::validate() const {
  std::size_t cursor = 0;
  for (const ParamSlice& s : layout_) {
    if (s.offset != cursor) throw std::logic_error("ParamVector: slice " + s.name + " misplaced");
    cursor += s.size;
  }
  if (cursor != values.size()) throw std::logic_error("ParamVector: slices do not cover values");
}

ParamVector& ParamVector::operator+=(const ParamVector& other) {
  if (other.values.size() != values.size()) throw std::domain_error("ParamVector: size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
  return *this;
}

ParamVector& ParamVector::operator*=(double factor) {
  for (double& v : values) v *= factor;
  return *this;
}

void ParamVector::axpy(double a, const ParamVector& x) {
  if (x.values.size() != values.size()) throw std::domain_error("ParamVector: size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += a * x.values[i];
}

double ParamVector::norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

bool ParamVector::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace bidplan
