#include "hypbranch/algebra.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "hypbranch/errors.hpp"
#include "hypbranch/parallel.hpp"

namespace hypbranch {

namespace {

constexpr std::size_t kConvolutionChunk = 64;

bool term_less(const std::pair<Element, Complex>& a, const std::pair<Element, Complex>& b) {
    return shortlex_less(a.first, b.first);
}

const Complex* find_term(const std::vector<std::pair<Element, Complex>>& terms, const Element& g) {
    auto it = std::lower_bound(terms.begin(), terms.end(), std::pair<Element, Complex>{g, 0.0}, term_less);
    if (it == terms.end() || it->first != g) return nullptr;
    return &it->second;
}

void require_same_group(const AlgebraElement& x, const AlgebraElement& y) {
    if (x.group().tag() != y.group().tag()) throw InvalidInput("algebra elements belong to different groups");
}

} // namespace

AlgebraElement AlgebraElement::atom(GroupPtr group, Element g, Complex c) {
    AlgebraElement x(std::move(group));
    if (c != Complex(0.0)) x.terms_.emplace_back(std::move(g), c);
    return x;
}

AlgebraElement AlgebraElement::from_terms(GroupPtr group, std::vector<std::pair<Element, Complex>> terms) {
    AlgebraElement x(std::move(group));
    x.terms_ = std::move(terms);
    x.canonicalize();
    return x;
}

void AlgebraElement::canonicalize() {
    for (const auto& [g, c] : terms_)
        if (g.group_tag != group_->tag()) throw InvalidInput("term " + group_->format(g) + " belongs to another group");
    std::stable_sort(terms_.begin(), terms_.end(), term_less);
    std::vector<std::pair<Element, Complex>> merged;
    for (auto& t : terms_) {
        if (!merged.empty() && merged.back().first == t.first)
            merged.back().second += t.second;
        else
            merged.push_back(std::move(t));
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(), [](const auto& t) { return t.second == Complex(0.0); }),
                 merged.end());
    terms_ = std::move(merged);
}

Complex AlgebraElement::coefficient(const Element& g) const {
    const Complex* c = find_term(terms_, g);
    return c ? *c : Complex(0.0);
}

AlgebraElement AlgebraElement::operator+(const AlgebraElement& y) const {
    require_same_group(*this, y);
    auto terms = terms_;
    terms.insert(terms.end(), y.terms_.begin(), y.terms_.end());
    return from_terms(group_, std::move(terms));
}

AlgebraElement AlgebraElement::operator-(const AlgebraElement& y) const { return *this + y.scaled(-1.0); }

AlgebraElement AlgebraElement::scaled(Complex c) const {
    AlgebraElement out(group_);
    for (const auto& [g, v] : terms_)
        if (v * c != Complex(0.0)) out.terms_.emplace_back(g, v * c);
    return out;
}

AlgebraElement AlgebraElement::adjoint() const {
    std::vector<std::pair<Element, Complex>> terms;
    terms.reserve(terms_.size());
    for (const auto& [g, c] : terms_) terms.emplace_back(group_->invert(g), std::conj(c));
    return from_terms(group_, std::move(terms));
}

Complex AlgebraElement::trace() const { return coefficient(group_->identity()); }

double AlgebraElement::l2_norm() const {
    double s = 0;
    for (const auto& t : terms_) s += std::norm(t.second);
    return std::sqrt(s);
}

double AlgebraElement::max_abs() const {
    double m = 0;
    for (const auto& t : terms_) m = std::max(m, std::abs(t.second));
    return m;
}

AlgebraElement AlgebraElement::project(const std::function<bool(const Element&)>& keep) const {
    AlgebraElement out(group_);
    for (const auto& t : terms_)
        if (keep(t.first)) out.terms_.push_back(t);
    return out;
}

std::vector<std::tuple<std::string, double, double>> AlgebraElement::to_triples() const {
    std::vector<std::tuple<std::string, double, double>> out;
    for (const auto& [g, c] : terms_) out.emplace_back(group_->format(g), c.real(), c.imag());
    return out;
}

AlgebraElement AlgebraElement::from_triples(GroupPtr group,
                                            const std::vector<std::tuple<std::string, double, double>>& t) {
    std::vector<std::pair<Element, Complex>> terms;
    for (const auto& [w, re, im] : t) terms.emplace_back(group->parse(w), Complex(re, im));
    return from_terms(std::move(group), std::move(terms));
}

AlgebraElement convolve(const AlgebraElement& x, const AlgebraElement& y, std::size_t cap) {
    require_same_group(x, y);
    const auto& xt = x.terms();
    const auto& yt = y.terms();
    if (xt.size() * yt.size() > cap)
        throw CapExceeded("convolution support product " + std::to_string(xt.size()) + " x " +
                          std::to_string(yt.size()) + " exceeds cap " + std::to_string(cap));
    const Group& g = x.group();
    // Fixed chunks of the left support keep the summation order independent
    // of the worker count.
    const std::size_t chunks = (xt.size() + kConvolutionChunk - 1) / kConvolutionChunk;
    std::vector<std::vector<std::pair<Element, Complex>>> partial(chunks);
    parallel_for(chunks, [&](std::size_t c) {
        std::unordered_map<std::string, std::size_t> slot;
        auto& out = partial[c];
        const std::size_t end = std::min(xt.size(), (c + 1) * kConvolutionChunk);
        for (std::size_t i = c * kConvolutionChunk; i < end; ++i) {
            for (const auto& [h, b] : yt) {
                Element gh = g.multiply(xt[i].first, h);
                auto [it, fresh] = slot.emplace(gh.word, out.size());
                if (fresh)
                    out.emplace_back(std::move(gh), xt[i].second * b);
                else
                    out[it->second].second += xt[i].second * b;
            }
        }
    });
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<std::pair<Element, Complex>> merged;
    for (auto& part : partial) {
        for (auto& [e, c] : part) {
            auto [it, fresh] = slot.emplace(e.word, merged.size());
            if (fresh)
                merged.emplace_back(std::move(e), c);
            else
                merged[it->second].second += c;
        }
    }
    return AlgebraElement::from_terms(x.group_ptr(), std::move(merged));
}

Complex trace_of_product(const AlgebraElement& x, const AlgebraElement& y) {
    require_same_group(x, y);
    Complex s = 0;
    for (const auto& [h, a] : x.terms())
        if (const Complex* b = find_term(y.terms(), x.group().invert(h))) s += a * *b;
    return s;
}

double lp_even_norm(const AlgebraElement& x, int k, std::size_t cap) {
    if (k < 1) throw InvalidInput("lp_even_norm needs k >= 1, got " + std::to_string(k));
    if (k == 1) return x.l2_norm();
    AlgebraElement y = convolve(x.adjoint(), x, cap);
    double moment;
    {
        AlgebraElement z = y;
        for (int i = 1; i < k / 2; ++i) z = convolve(z, y, cap);
        if (k % 2 == 0) {
            const double n = z.l2_norm();
            moment = n * n;
        } else {
            moment = trace_of_product(convolve(z, y, cap), z).real();
        }
    }
    return std::pow(std::max(moment, 0.0), 1.0 / (2.0 * k));
}

double max_deviation(const AlgebraElement& x, const AlgebraElement& y) { return (x - y).max_abs(); }

namespace {

struct SparseRows {
    std::vector<std::vector<std::pair<std::size_t, Complex>>> rows;
    std::size_t identity = 0;
};

SparseRows compress(const AlgebraElement& y, const Ball& ball) {
    SparseRows m;
    m.rows.resize(ball.size());
    m.identity = ball.index_of(ball.group().identity());
    std::vector<Element> inverses;
    for (const auto& t : y.terms()) {
        auto inv = ball.invert(t.first);
        if (!inv) throw Uncertified("support element " + ball.group().format(t.first) + " outside the truncation ball");
        inverses.push_back(*inv);
    }
    parallel_for(ball.size(), [&](std::size_t gi) {
        const Element& g = ball.vertex(gi);
        for (std::size_t k = 0; k < inverses.size(); ++k) {
            auto h = ball.multiply(inverses[k], g);
            if (!h) continue;
            if (auto hi = ball.find(*h)) m.rows[gi].emplace_back(*hi, y.terms()[k].second);
        }
    });
    return m;
}

double power_weight(double theta, double p) { return std::pow(std::max(theta, 0.0), p / 2.0); }

double lanczos_moment(const SparseRows& m, double p, int max_steps, int& steps_used) {
    using Vec = Eigen::VectorXcd;
    const Eigen::Index n = static_cast<Eigen::Index>(m.rows.size());
    auto apply = [&](const Vec& v) {
        Vec out = Vec::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Complex s = 0;
            for (const auto& [j, c] : m.rows[static_cast<std::size_t>(i)]) s += c * v[static_cast<Eigen::Index>(j)];
            out[i] = s;
        }
        return out;
    };
    std::vector<Vec> basis;
    std::vector<double> alpha, beta;
    Vec v = Vec::Zero(n);
    v[static_cast<Eigen::Index>(m.identity)] = 1.0;
    basis.push_back(v);
    const int steps = static_cast<int>(std::min<Eigen::Index>(max_steps, n));
    for (int j = 0; j < steps; ++j) {
        Vec w = apply(basis.back());
        const double a = basis.back().dot(w).real();
        alpha.push_back(a);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : basis) w -= q * q.dot(w);
        const double b = w.norm();
        if (j + 1 == steps || b < 1e-12) break;
        beta.push_back(b);
        basis.push_back(w / b);
    }
    const Eigen::Index k = static_cast<Eigen::Index>(alpha.size());
    steps_used = static_cast<int>(k);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        t(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
    double s = 0;
    for (Eigen::Index i = 0; i < k; ++i) {
        const double w0 = eig.eigenvectors()(0, i);
        s += w0 * w0 * power_weight(eig.eigenvalues()(i), p);
    }
    return s;
}

double normalized_moment(const SparseRows& m, double p, std::size_t cap) {
    const std::size_t n = m.rows.size();
    if (n > cap)
        throw CapExceeded("dense spectral estimate needs dimension " + std::to_string(n) + " (cap " +
                          std::to_string(cap) + ")");
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& [j, c] : m.rows[i]) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(a, Eigen::EigenvaluesOnly);
    double s = 0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) s += power_weight(eig.eigenvalues()(i), p);
    return s / static_cast<double>(n);
}

double estimate_at(const AlgebraElement& y, double p, int radius, const SpectralOptions& options, std::size_t& dim,
                   int& steps) {
    auto ball = Ball::enumerate(y.group_ptr(), radius, 0, options.vertex_cap);
    auto rows = compress(y, ball);
    dim = ball.size();
    steps = 0;
    const double moment = options.mode == SpectralMode::TraceVector
                              ? lanczos_moment(rows, p, options.max_lanczos_steps, steps)
                              : normalized_moment(rows, p, options.dense_dimension_cap);
    return std::pow(std::max(moment, 0.0), 1.0 / p);
}

} // namespace

SpectralEstimate spectral_lp_estimate(const AlgebraElement& x, double p, int radius, const SpectralOptions& options) {
    if (!(p > 1)) throw InvalidInput("spectral estimate needs p > 1");
    if (radius < 1) throw InvalidInput("truncation radius must be >= 1");
    AlgebraElement y = convolve(x.adjoint(), x);
    SpectralEstimate out;
    out.mode = options.mode;
    out.radius = radius;
    std::size_t dim = 0;
    int steps = 0;
    out.previous_radius_value = estimate_at(y, p, radius - 1, options, dim, steps);
    out.value = estimate_at(y, p, radius, options, dim, steps);
    out.dimension = dim;
    out.lanczos_steps = steps;
    return out;
}

std::string linear_algebra_version() {
    return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
           std::to_string(EIGEN_MINOR_VERSION);
}

} // namespace hypbranch
