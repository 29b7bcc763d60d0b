#pragma once

#include <complex>
#include <functional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hypbranch/ball.hpp"
#include "hypbranch/group.hpp"

namespace hypbranch {

using Complex = std::complex<double>;

// Finitely supported x = Σ c_g λ_g. Terms are kept in shortlex order of g
// with exact zeros pruned.
class AlgebraElement {
public:
    static constexpr std::size_t kDefaultProductCap = 200'000'000;

    explicit AlgebraElement(GroupPtr group) : group_(std::move(group)) {}
    static AlgebraElement atom(GroupPtr group, Element g, Complex c = 1.0);
    // Sums repeated elements; drops exact zeros.
    static AlgebraElement from_terms(GroupPtr group, std::vector<std::pair<Element, Complex>> terms);

    const GroupPtr& group_ptr() const { return group_; }
    const Group& group() const { return *group_; }
    const std::vector<std::pair<Element, Complex>>& terms() const { return terms_; }
    std::size_t support_size() const { return terms_.size(); }
    bool is_zero() const { return terms_.empty(); }
    Complex coefficient(const Element& g) const;

    AlgebraElement operator+(const AlgebraElement& y) const;
    AlgebraElement operator-(const AlgebraElement& y) const;
    AlgebraElement scaled(Complex c) const;

    // x*(g) = conj(x(g^-1)).
    AlgebraElement adjoint() const;
    // Coefficient at e.
    Complex trace() const;
    double l2_norm() const;
    double max_abs() const;
    // Coefficient restriction to the elements accepted by keep.
    AlgebraElement project(const std::function<bool(const Element&)>& keep) const;

    // (word, re, im) triples in term order.
    std::vector<std::tuple<std::string, double, double>> to_triples() const;
    static AlgebraElement from_triples(GroupPtr group, const std::vector<std::tuple<std::string, double, double>>& t);

private:
    void canonicalize();

    GroupPtr group_;
    std::vector<std::pair<Element, Complex>> terms_;
};

// (x * y)(g) = Σ_h x(h) y(h^-1 g). Throws CapExceeded when
// |supp x| * |supp y| exceeds cap.
AlgebraElement convolve(const AlgebraElement& x, const AlgebraElement& y,
                        std::size_t cap = AlgebraElement::kDefaultProductCap);

// τ(x y) without forming the product.
Complex trace_of_product(const AlgebraElement& x, const AlgebraElement& y);

// ‖x‖_{2k} = τ((x* x)^k)^{1/(2k)}.
double lp_even_norm(const AlgebraElement& x, int k, std::size_t cap = AlgebraElement::kDefaultProductCap);

// max_g |x(g) - y(g)|.
double max_deviation(const AlgebraElement& x, const AlgebraElement& y);

enum class SpectralMode {
    // ⟨δ_e, f(M) δ_e⟩ for the compression M of left convolution by x*x to
    // the ball, via Lanczos and Gauss quadrature.
    TraceVector,
    // tr f(M) / dim M by dense diagonalization.
    Normalized,
};

struct SpectralEstimate {
    double value = 0;
    double previous_radius_value = 0;
    int radius = 0;
    std::size_t dimension = 0;
    int lanczos_steps = 0;
    SpectralMode mode = SpectralMode::TraceVector;
};

struct SpectralOptions {
    SpectralMode mode = SpectralMode::TraceVector;
    int max_lanczos_steps = 300;
    std::size_t dense_dimension_cap = 4000;
    std::size_t vertex_cap = Ball::kDefaultVertexCap;
};

// Estimates ‖x‖_p = τ(|x|^p)^{1/p} for real p > 1 from the truncation of
// x* x to the ball of the given radius; also reports the value at radius - 1.
// Version string of the linear algebra backend.
std::string linear_algebra_version();

SpectralEstimate spectral_lp_estimate(const AlgebraElement& x, double p, int radius,
                                      const SpectralOptions& options = {});

} // namespace hypbranch
