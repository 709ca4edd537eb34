#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fedids {

struct Tensor {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t shape_volume(std::span<const std::uint32_t> shape);

/// Ordered, named, shaped tensors. The order is part of the value: two sets
/// compare equal only if names, shapes and values match position by position.
class ParameterSet {
  public:
    ParameterSet() = default;

    /// Appends a tensor filled with `fill`. Names must be unique.
    Tensor& add(std::string name, std::vector<std::uint32_t> shape, double fill = 0.0);
    /// Appends a tensor with explicit values; values.size() must equal the shape volume.
    Tensor& add(std::string name, std::vector<std::uint32_t> shape, std::vector<double> values);

    std::span<Tensor> tensors() noexcept { return tensors_; }
    std::span<const Tensor> tensors() const noexcept { return tensors_; }
    Tensor& operator[](std::size_t i) { return tensors_[i]; }
    const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
    std::size_t count() const noexcept { return tensors_.size(); }
    bool empty() const noexcept { return tensors_.empty(); }

    const Tensor* find(std::string_view name) const;

    /// Total scalar count across tensors.
    std::size_t total_size() const;

    /// Same names and shapes in the same order.
    bool same_layout(const ParameterSet& other) const;

    /// A zero-valued set with this set's layout.
    ParameterSet zeros_like() const;

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

  private:
    std::vector<Tensor> tensors_;
};

/// d(loss)/d(parameter), laid out exactly like the ParameterSet it belongs to.
class GradientSet : public ParameterSet {
  public:
    GradientSet() = default;
    explicit GradientSet(ParameterSet zeros) : ParameterSet(std::move(zeros)) {}
};

/// Rounds every value to the nearest IEEE-754 single and back.
void quantize_to_single(ParameterSet& params);
ParameterSet quantized_to_single(ParameterSet params);

/// Throws std::invalid_argument naming `context` when layouts differ.
void require_same_layout(const ParameterSet& a, const ParameterSet& b, std::string_view context);

}  // namespace fedids
