#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sritz {

/// Invalid or inconsistent run / problem configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (e.g. R <= 0, beta <= 0).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dimension mismatch between a point and a network / problem.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operation requested on a geometry it does not support.
struct UnsupportedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite loss or gradient during optimization.
struct TrainingError : std::runtime_error {
    TrainingError(std::size_t iteration, std::string term)
        : std::runtime_error("non-finite " + term + " at iteration " + std::to_string(iteration)),
          iteration(iteration),
          term(std::move(term)) {}
    std::size_t iteration;
    std::string term;
};

/// Linear solver failed to reach its tolerance.
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A set of points in R^d stored contiguously, point i at [i*d, (i+1)*d).
class PointSet {
public:
    PointSet() = default;
    explicit PointSet(int dim, std::size_t count = 0)
        : dim_(dim), coords_(static_cast<std::size_t>(dim) * count) {}

    int dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / static_cast<std::size_t>(dim_); }
    bool empty() const { return size() == 0; }

    std::span<const double> operator[](std::size_t i) const {
        return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }
    std::span<double> operator[](std::size_t i) {
        return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }

    void push_back(std::span<const double> x) {
        if (static_cast<int>(x.size()) != dim_) throw ShapeError("point dimension mismatch");
        coords_.insert(coords_.end(), x.begin(), x.end());
    }
    void reserve(std::size_t n) { coords_.reserve(n * static_cast<std::size_t>(dim_)); }

    const std::vector<double>& raw() const { return coords_; }
    bool operator==(const PointSet&) const = default;

private:
    int dim_ = 0;
    std::vector<double> coords_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return dot(a, a); }
inline double norm(std::span<const double> a) { return std::sqrt(norm2(a)); }

inline constexpr double pi = 3.141592653589793238462643383279502884;

}  // namespace sritz
