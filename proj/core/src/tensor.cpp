#include "uvae/tensor.hpp"

#include <cmath>
#include <sstream>

#include "uvae/errors.hpp"

namespace uvae {

std::size_t shape_volume(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (shape_volume(shape) != data.size()) {
        throw ContractError("tensor shape " + shape_to_string(shape) + " does not match data length " +
                            std::to_string(data.size()));
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    std::vector<double> d(shape_volume(shape), 0.0);
    return Tensor(std::move(shape), std::move(d));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    std::vector<double> d(shape_volume(shape), value);
    return Tensor(std::move(shape), std::move(d));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
    std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= shape.size()) throw ContractError("tensor axis out of range");
    return shape[axis];
}

double Tensor::scalar_value() const {
    if (size() != 1) {
        throw ContractError("expected scalar tensor, got shape " + shape_to_string(shape));
    }
    return data[0];
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

} // namespace uvae
