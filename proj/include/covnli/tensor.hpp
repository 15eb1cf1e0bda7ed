#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace covnli {

/// Raised when operand shapes do not conform.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for empty sentences or sequences where at least one element is required.
class EmptyInputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for class or token indices outside their valid range.
class IndexError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);

/// Dense row-major array of doubles. Rank 1 and rank 2 are the only ranks
/// the rest of the library produces, but the container itself is general.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor vector(std::initializer_list<double> values);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor filled(Shape shape, double value);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    /// Row count for matrices; element count for vectors.
    std::size_t rows() const;
    /// Column count for matrices; 1 for vectors.
    std::size_t cols() const;

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    std::span<const double> row(std::size_t i) const;
    std::span<double> row(std::size_t i);

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }

    bool all_finite() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

std::size_t shape_product(const Shape& shape);

}  // namespace covnli
