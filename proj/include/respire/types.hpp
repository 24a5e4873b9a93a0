#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace respire {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;
using Index = Eigen::Index;

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an operation would produce (or receives) a dataset with no records.
class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

/// Raised for malformed CSV/model/config input. Carries a 1-based line number (0 if unknown).
class ParseError : public Error {
public:
    ParseError(const std::string &what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Raised when a numeric routine cannot proceed (failed factorization, non-finite input).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Min-max normalization of the auxiliary variable: z_norm = (z - min) / (max - min).
template <typename Scalar>
struct NormParams {
    Scalar min = Scalar(0);
    Scalar max = Scalar(1);

    [[nodiscard]] Scalar range() const {
        const Scalar r = max - min;
        return r > Scalar(0) ? r : Scalar(1);
    }
    [[nodiscard]] Scalar apply(Scalar z) const { return (z - min) / range(); }
    [[nodiscard]] Scalar invert(Scalar u) const { return min + u * range(); }

    friend bool operator==(const NormParams &, const NormParams &) = default;
};

/// Affine standardization of the independent variables: x_fit = (x_raw - offset) / scale.
/// An empty offset vector means identity.
template <typename Scalar>
struct InputScaling {
    Vector<Scalar> offset;
    Vector<Scalar> scale;

    [[nodiscard]] bool is_identity() const { return offset.size() == 0; }

    static InputScaling identity() { return {}; }

    [[nodiscard]] Scalar apply(Index j, Scalar x) const {
        return is_identity() ? x : (x - offset(j)) / scale(j);
    }
};

}  // namespace respire
