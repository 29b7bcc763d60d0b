#include "hypbranch/ball.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <unordered_set>

#include "hypbranch/errors.hpp"

namespace hypbranch {

Ball Ball::enumerate(GroupPtr group, int radius, int margin, std::size_t max_vertices) {
    if (radius < 0) throw InvalidInput("ball radius must be >= 0, got " + std::to_string(radius));
    if (margin < 0) throw InvalidInput("ball margin must be >= 0, got " + std::to_string(margin));
    Ball b;
    b.group_ = std::move(group);
    b.radius_ = radius;
    b.working_radius_ = radius + margin;
    b.alphabet_ = static_cast<std::size_t>(2 * b.group_->generator_count());
    if (b.group_->has_closed_form_length())
        b.enumerate_closed_form(max_vertices);
    else
        b.enumerate_dehn(max_vertices);
    return b;
}

void Ball::add_vertex(Element e, int layer, std::size_t max_vertices) {
    if (vertices_.size() >= max_vertices)
        throw CapExceeded("ball vertex cap exceeded: more than " + std::to_string(max_vertices) +
                          " vertices within radius " + std::to_string(working_radius_));
    index_.emplace(e.word, vertices_.size());
    vertices_.push_back(std::move(e));
    layers_.push_back(layer);
}

void Ball::enumerate_closed_form(std::size_t max_vertices) {
    const Group& g = *group_;
    layer_start_.assign(1, 0);
    add_vertex(g.identity(), 0, max_vertices);
    for (int k = 0; k < working_radius_; ++k) {
        const std::size_t begin = layer_start_[static_cast<std::size_t>(k)];
        const std::size_t end = vertices_.size();
        layer_start_.push_back(end);
        std::vector<Element> next;
        std::unordered_set<std::string> seen;
        for (std::size_t i = begin; i < end; ++i) {
            for (Letter l : g.cayley_letters()) {
                Element n = g.append(vertices_[i], l);
                if (*g.closed_form_length(n) != k + 1 || !seen.insert(n.word).second) continue;
                next.push_back(std::move(n));
            }
        }
        std::sort(next.begin(), next.end(), [](const Element& a, const Element& b) { return shortlex_less(a, b); });
        for (auto& n : next) add_vertex(std::move(n), k + 1, max_vertices);
        if (next.empty()) {
            // Finite group exhausted.
            for (int j = k + 1; j < working_radius_; ++j) layer_start_.push_back(vertices_.size());
            break;
        }
    }
    layer_start_.push_back(vertices_.size());

    adjacency_.assign(vertices_.size() * alphabet_, -1);
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        for (std::size_t c = 0; c < alphabet_; ++c) {
            Element n = g.append(vertices_[i], static_cast<Letter>(c));
            if (auto it = index_.find(n.word); it != index_.end())
                adjacency_[i * alphabet_ + c] = static_cast<int>(it->second);
        }
    }
}

void Ball::enumerate_dehn(std::size_t max_vertices) {
    const Group& g = *group_;
    layer_start_.assign(1, 0);
    add_vertex(g.identity(), 0, max_vertices);
    adjacency_.clear();

    std::map<std::vector<long>, std::vector<std::size_t>> buckets;
    buckets[g.abelian_key({})].push_back(0);

    // Finds the vertex equal to `word` among layers [lo, hi] discovered so far.
    auto locate = [&](const std::string& word, int lo, int hi) -> std::optional<std::size_t> {
        auto it = buckets.find(g.abelian_key(word));
        if (it == buckets.end()) return std::nullopt;
        for (std::size_t v : it->second) {
            if (layers_[v] < lo || layers_[v] > hi) continue;
            if (g.dehn_trivial(g.inverse_word(vertices_[v].word) + word)) return v;
        }
        return std::nullopt;
    };

    std::vector<std::vector<int>> adj;
    for (int k = 0; k <= working_radius_; ++k) {
        const std::size_t begin = layer_start_[static_cast<std::size_t>(k)];
        const std::size_t end = vertices_.size();
        layer_start_.push_back(end);
        for (std::size_t i = begin; i < end; ++i) {
            adj.resize(vertices_.size());
            adj[i].assign(alphabet_, -1);
            for (std::size_t c = 0; c < alphabet_; ++c) {
                const std::string& w = vertices_[i].word;
                const Letter l = static_cast<Letter>(c);
                if (!w.empty() && w.back() == formal_inverse(l)) {
                    // Prefixes of shortlex normal forms are normal forms.
                    adj[i][c] = static_cast<int>(index_.at(w.substr(0, w.size() - 1)));
                    continue;
                }
                std::string cand = w + l;
                if (auto found = locate(cand, std::max(0, k - 1), k + 1)) {
                    adj[i][c] = static_cast<int>(*found);
                    continue;
                }
                if (k == working_radius_) continue;
                Element e{cand, g.tag()};
                const std::size_t idx = vertices_.size();
                add_vertex(std::move(e), k + 1, max_vertices);
                buckets[g.abelian_key(cand)].push_back(idx);
                adj[i][c] = static_cast<int>(idx);
            }
        }
        if (vertices_.size() == end && k < working_radius_) {
            for (int j = k + 1; j <= working_radius_; ++j) layer_start_.push_back(vertices_.size());
            break;
        }
    }
    // layer_start_ currently holds working_radius_ + 1 starts plus the end.
    layer_start_.resize(static_cast<std::size_t>(working_radius_) + 1);
    layer_start_.push_back(vertices_.size());

    adjacency_.assign(vertices_.size() * alphabet_, -1);
    for (std::size_t i = 0; i < adj.size(); ++i)
        for (std::size_t c = 0; c < alphabet_ && c < adj[i].size(); ++c) adjacency_[i * alphabet_ + c] = adj[i][c];
}

std::size_t Ball::count_within(int r) const {
    if (r < 0) return 0;
    if (r >= working_radius_) return vertices_.size();
    return layer_start_[static_cast<std::size_t>(r) + 1];
}

std::vector<std::size_t> Ball::layer_sizes() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k + 1 < layer_start_.size(); ++k) out.push_back(layer_start_[k + 1] - layer_start_[k]);
    return out;
}

std::optional<std::size_t> Ball::find(const Element& g) const {
    if (g.group_tag != group_->tag()) return std::nullopt;
    auto it = index_.find(g.word);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t Ball::index_of(const Element& g) const {
    if (auto i = find(g)) return *i;
    throw InvalidInput("element " + group_->format(g) + " is outside the working ball of radius " +
                       std::to_string(working_radius_));
}

std::optional<std::size_t> Ball::walk(std::size_t from, std::string_view letters) const {
    std::size_t at = from;
    for (Letter l : letters) {
        int n = neighbor(at, l);
        if (n < 0) return std::nullopt;
        at = static_cast<std::size_t>(n);
    }
    return at;
}

std::optional<int> Ball::length(const Element& g) const {
    if (group_->has_closed_form_length()) return group_->closed_form_length(g);
    if (auto i = find(g)) return layers_[*i];
    return std::nullopt;
}

std::optional<Element> Ball::step(const Element& g, Letter l) const {
    if (group_->has_closed_form_length()) return group_->append(g, l);
    auto i = find(g);
    if (!i) return std::nullopt;
    int n = neighbor(*i, l);
    if (n < 0) return std::nullopt;
    return vertices_[static_cast<std::size_t>(n)];
}

std::optional<Element> Ball::multiply(const Element& g, const Element& h) const {
    if (group_->has_closed_form_length()) return group_->multiply(g, h);
    auto i = find(g);
    if (!i) return std::nullopt;
    auto j = walk(*i, h.word);
    if (!j) return std::nullopt;
    return vertices_[*j];
}

std::optional<Element> Ball::invert(const Element& g) const {
    if (group_->has_closed_form_length()) return group_->invert(g);
    auto j = walk(0, group_->inverse_word(g.word));
    if (!j) return std::nullopt;
    return vertices_[*j];
}

std::optional<int> Ball::exact_distance(const Element& y, const Element& x) const {
    if (group_->has_closed_form_length()) return group_->closed_form_length(group_->multiply(group_->invert(y), x));
    auto yi = invert(y);
    if (!yi) return std::nullopt;
    auto z = multiply(*yi, x);
    if (!z) return std::nullopt;
    return length(*z);
}

std::optional<int> Ball::restricted_bfs(std::size_t from, std::size_t to) const {
    std::vector<int> dist(vertices_.size(), -1);
    std::deque<std::size_t> queue{from};
    dist[from] = 0;
    while (!queue.empty()) {
        std::size_t v = queue.front();
        queue.pop_front();
        if (v == to) return dist[v];
        for (std::size_t c = 0; c < alphabet_; ++c) {
            int n = adjacency_[v * alphabet_ + c];
            if (n >= 0 && dist[static_cast<std::size_t>(n)] < 0) {
                dist[static_cast<std::size_t>(n)] = dist[v] + 1;
                queue.push_back(static_cast<std::size_t>(n));
            }
        }
    }
    return std::nullopt;
}

DistanceResult Ball::distance(const Element& y, const Element& x) const {
    const std::size_t yi = index_of(y);
    const std::size_t xi = index_of(x);
    if (auto d = exact_distance(y, x)) return {*d, true};
    auto d = restricted_bfs(yi, xi);
    if (!d) throw Uncertified("no path inside the working ball between " + group_->format(y) + " and " +
                              group_->format(x));
    // Any shorter path has every vertex z with 2|z| <= |y| + |x| + d(y, x).
    const bool exact = layers_[yi] + layers_[xi] + *d <= 2 * working_radius_;
    return {*d, exact};
}

} // namespace hypbranch
