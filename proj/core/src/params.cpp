#include "fedids/params.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace fedids {

std::size_t shape_volume(std::span<const std::uint32_t> shape) {
    std::size_t n = 1;
    for (const auto d : shape) {
        if (d != 0 && n > std::numeric_limits<std::size_t>::max() / d) {
            throw std::overflow_error("tensor shape volume overflows");
        }
        n *= d;
    }
    return n;
}

Tensor& ParameterSet::add(std::string name, std::vector<std::uint32_t> shape, double fill) {
    const auto n = shape_volume(shape);
    return add(std::move(name), std::move(shape), std::vector<double>(n, fill));
}

Tensor& ParameterSet::add(std::string name, std::vector<std::uint32_t> shape, std::vector<double> values) {
    if (find(name) != nullptr) {
        throw std::invalid_argument("duplicate tensor name '" + name + "'");
    }
    if (values.size() != shape_volume(shape)) {
        throw std::invalid_argument("tensor '" + name + "': value count does not match shape");
    }
    tensors_.push_back({std::move(name), std::move(shape), std::move(values)});
    return tensors_.back();
}

const Tensor* ParameterSet::find(std::string_view name) const {
    const auto it = std::find_if(tensors_.begin(), tensors_.end(),
                                 [&](const Tensor& t) { return t.name == name; });
    return it == tensors_.end() ? nullptr : &*it;
}

std::size_t ParameterSet::total_size() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
}

bool ParameterSet::same_layout(const ParameterSet& other) const {
    if (tensors_.size() != other.tensors_.size()) return false;
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
        if (tensors_[i].name != other.tensors_[i].name || tensors_[i].shape != other.tensors_[i].shape) {
            return false;
        }
    }
    return true;
}

ParameterSet ParameterSet::zeros_like() const {
    ParameterSet out;
    out.tensors_.reserve(tensors_.size());
    for (const auto& t : tensors_) {
        out.tensors_.push_back({t.name, t.shape, std::vector<double>(t.size(), 0.0)});
    }
    return out;
}

void quantize_to_single(ParameterSet& params) {
    for (auto& t : params.tensors()) {
        for (auto& v : t.values) {
            v = static_cast<double>(static_cast<float>(v));
        }
    }
}

ParameterSet quantized_to_single(ParameterSet params) {
    quantize_to_single(params);
    return params;
}

void require_same_layout(const ParameterSet& a, const ParameterSet& b, std::string_view context) {
    if (!a.same_layout(b)) {
        throw std::invalid_argument(std::string(context) + ": parameter layouts differ");
    }
}

}  // namespace fedids
