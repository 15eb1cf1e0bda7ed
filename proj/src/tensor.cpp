#include "covnli/tensor.hpp"

#include <cmath>
#include <sstream>

namespace covnli {

std::string to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_product(const Shape& shape) {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    return n;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size())
        throw DimensionError("tensor shape " + to_string(shape_) + " does not match " +
                             std::to_string(data_.size()) + " elements");
}

Tensor Tensor::vector(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t m = rows.size();
    const std::size_t n = m ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(m * n);
    for (const auto& r : rows) {
        if (r.size() != n) throw DimensionError("ragged matrix literal");
        data.insert(data.end(), r.begin(), r.end());
    }
    return Tensor({m, n}, std::move(data));
}

Tensor Tensor::filled(Shape shape, double value) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = value;
    return t;
}

std::size_t Tensor::rows() const {
    if (shape_.empty()) return 1;
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (shape_.size() < 2) return 1;
    return shape_[1];
}

std::span<const double> Tensor::row(std::size_t i) const {
    const std::size_t n = cols();
    return std::span<const double>(data_).subspan(i * n, n);
}

std::span<double> Tensor::row(std::size_t i) {
    const std::size_t n = cols();
    return std::span<double>(data_).subspan(i * n, n);
}

bool Tensor::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace covnli
