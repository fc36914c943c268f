#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hyba {

struct Shape {
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t channels = 1;

  std::size_t size() const noexcept { return height * width * channels; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// A point of the input domain: a flat vector in [0,1]^D with image shape
/// metadata. Construction validates both the range and the shape product.
class Image {
 public:
  Image() = default;
  Image(std::vector<double> data, Shape shape);
  /// Flat image of shape (1, D, 1).
  explicit Image(std::vector<double> data);

  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Same shape, new values (validated).
  Image with_values(std::vector<double> data) const { return Image(std::move(data), shape_); }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  void validate() const;

  std::vector<double> data_;
  Shape shape_;
};

/// L-infinity distance between two equally sized vectors.
double linf_distance(std::span<const double> a, std::span<const double> b);

struct LabeledExample {
  Image image;
  int label = 0;
};

}  // namespace hyba
