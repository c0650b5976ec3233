#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bidplan {

struct ParamSlice {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Flat parameter storage with named, contiguous groups laid out back to back.
class ParamVector {
 public:
  std::vector<double> values;

  // Appends a zero-initialized group and returns its offset.
  std::size_t add(const std::string& name, std::size_t size);

  std::size_t size() const { return values.size(); }
  const std::vector<ParamSlice>& layout() const { return layout_; }
  const ParamSlice& slice(const std::string& name) const;
  std::span<double> group(const std::string& name);
  std::span<const double> group(const std::string& name) const;

  // Same layout, all values zero.
  ParamVector zeros_like() const;
  bool same_layout(const ParamVector& other) const;

  // Throws std::logic_error unless slices are disjoint, ordered and cover the vector.
  void validate() const;

  ParamVector& operator+=(const ParamVector& other);
  ParamVector& operator*=(double factor);
  void axpy(double a, const ParamVector& x);  // this += a * x
  double norm() const;
  bool all_finite() const;

 private:
  std::vector<ParamSlice> layout_;
};

}  // namespace bidplan
