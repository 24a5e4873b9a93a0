#pragma once

#include "respire/types.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace respire {

enum class KernelFamily { Gaussian, Matern12, Matern32, Matern52 };

[[nodiscard]] inline std::string_view to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::Gaussian: return "gaussian";
        case KernelFamily::Matern12: return "matern-1/2";
        case KernelFamily::Matern32: return "matern-3/2";
        case KernelFamily::Matern52: return "matern-5/2";
    }
    return "gaussian";
}

[[nodiscard]] inline std::optional<KernelFamily> parse_kernel_family(std::string_view s) {
    for (auto f : {KernelFamily::Gaussian, KernelFamily::Matern12, KernelFamily::Matern32,
                   KernelFamily::Matern52}) {
        if (s == to_string(f)) return f;
    }
    return std::nullopt;
}

template <typename Scalar>
struct KernelSpec {
    KernelFamily family = KernelFamily::Gaussian;
    Scalar length_scale = Scalar(1);

    KernelSpec() = default;
    KernelSpec(KernelFamily f, Scalar ls) : family(f), length_scale(ls) {
        if (!(ls > Scalar(0)) || !std::isfinite(static_cast<double>(ls)))
            throw Error("kernel length scale must be positive and finite");
    }

    friend bool operator==(const KernelSpec &, const KernelSpec &) = default;
};

/// Kernel value as a function of the (non-negative) distance between two inputs.
template <typename Scalar>
[[nodiscard]] Scalar kernel_from_distance(const KernelSpec<Scalar> &spec, Scalar dist) {
    using std::exp;
    using std::sqrt;
    const Scalar r = dist / spec.length_scale;
    switch (spec.family) {
        case KernelFamily::Gaussian: return exp(-Scalar(0.5) * r * r);
        case KernelFamily::Matern12: return exp(-r);
        case KernelFamily::Matern32: {
            const Scalar a = sqrt(Scalar(3)) * r;
            return (Scalar(1) + a) * exp(-a);
        }
        case KernelFamily::Matern52: {
            const Scalar a = sqrt(Scalar(5)) * r;
            return (Scalar(1) + a + a * a / Scalar(3)) * exp(-a);
        }
    }
    return Scalar(0);
}

template <typename Scalar>
[[nodiscard]] Scalar kernel_eval(const KernelSpec<Scalar> &spec, Scalar z, Scalar z2) {
    using std::abs;
    return kernel_from_distance(spec, abs(z - z2));
}

/// Gram matrix G(i, j) = k(z_i, z_j). Unit diagonal, symmetric.
template <typename Scalar, typename Derived>
[[nodiscard]] Matrix<Scalar> gram(const KernelSpec<Scalar> &spec, const Eigen::MatrixBase<Derived> &zs) {
    const Index n = zs.size();
    Matrix<Scalar> g(n, n);
    for (Index j = 0; j < n; ++j) {
        g(j, j) = kernel_from_distance(spec, Scalar(0));
        for (Index i = j + 1; i < n; ++i) {
            const Scalar v = kernel_eval(spec, Scalar(zs(i)), Scalar(zs(j)));
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

/// k(j) = k(z_new, zs_j).
template <typename Scalar, typename Derived>
[[nodiscard]] Vector<Scalar> cross_kernel(const KernelSpec<Scalar> &spec, Scalar z_new,
                                          const Eigen::MatrixBase<Derived> &zs) {
    Vector<Scalar> k(zs.size());
    for (Index j = 0; j < zs.size(); ++j) k(j) = kernel_eval(spec, z_new, Scalar(zs(j)));
    return k;
}

/// Cross-kernel matrix K(i, j) = k(a_i, b_j) between two sets of scalar inputs.
template <typename Scalar, typename DerivedA, typename DerivedB>
[[nodiscard]] Matrix<Scalar> cross_gram(const KernelSpec<Scalar> &spec, const Eigen::MatrixBase<DerivedA> &a,
                                        const Eigen::MatrixBase<DerivedB> &b) {
    Matrix<Scalar> k(a.size(), b.size());
    for (Index j = 0; j < b.size(); ++j)
        for (Index i = 0; i < a.size(); ++i) k(i, j) = kernel_eval(spec, Scalar(a(i)), Scalar(b(j)));
    return k;
}

/// Type-1 (inverse empirical CDF) quantile of an ascending-sorted sample.
template <typename Scalar>
[[nodiscard]] Scalar lower_quantile(std::span<const Scalar> sorted, double q) {
    const auto m = static_cast<double>(sorted.size());
    auto idx = static_cast<std::ptrdiff_t>(std::ceil(q * m)) - 1;
    idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(sorted.size()) - 1);
    return sorted[static_cast<std::size_t>(idx)];
}

/// Length-scale candidates from the pairwise Euclidean distance distribution.
///
/// Rows of `features` are points. For each requested quantile q the q-quantile of
/// {||x_i - x_j|| : i < j} is returned; a zero quantile is replaced by the smallest
/// positive distance. Throws if fewer than two points are given or all points coincide.
template <typename Scalar, typename Derived>
[[nodiscard]] std::vector<Scalar> lengthscale_candidates(const Eigen::MatrixBase<Derived> &features,
                                                         std::span<const double> quantiles) {
    const Index n = features.rows();
    if (n < 2) throw Error("lengthscale_candidates needs at least two feature vectors");
    for (double q : quantiles)
        if (!(q > 0.0 && q < 1.0)) throw Error("length-scale quantiles must lie in (0, 1)");

    std::vector<Scalar> dists;
    dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            dists.push_back(static_cast<Scalar>((features.row(i) - features.row(j)).norm()));
    std::sort(dists.begin(), dists.end());

    const auto first_pos = std::upper_bound(dists.begin(), dists.end(), Scalar(0));
    if (first_pos == dists.end()) throw Error("all feature vectors are identical; no positive distance");

    std::vector<Scalar> out;
    out.reserve(quantiles.size());
    for (double q : quantiles) {
        Scalar v = lower_quantile<Scalar>(dists, q);
        out.push_back(v > Scalar(0) ? v : *first_pos);
    }
    return out;
}

}  // namespace respire
