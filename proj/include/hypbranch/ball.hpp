#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypbranch/group.hpp"

namespace hypbranch {

struct DistanceResult {
    int value = 0;
    // False when value is only an upper bound (path found inside the ball
    // but not certified shortest by the containment argument).
    bool exact = true;
};

// All elements of word length at most radius + margin, in BFS layers with
// shortlex order inside each layer. The ball also acts as a right
// multiplication automaton: neighbor(i, l) is vertex(i) * l, or -1 when that
// product leaves the ball.
class Ball {
public:
    static constexpr std::size_t kDefaultVertexCap = 4'000'000;

    static Ball enumerate(GroupPtr group, int radius, int margin, std::size_t max_vertices = kDefaultVertexCap);

    const Group& group() const { return *group_; }
    const GroupPtr& group_ptr() const { return group_; }
    int radius() const { return radius_; }
    int working_radius() const { return working_radius_; }

    std::size_t size() const { return vertices_.size(); }
    // Number of vertices with |g| <= radius(); they form a prefix of the
    // vertex list.
    std::size_t core_size() const { return layer_start_[static_cast<std::size_t>(radius_) + 1]; }
    std::size_t count_within(int r) const;

    const Element& vertex(std::size_t i) const { return vertices_[i]; }
    int layer(std::size_t i) const { return layers_[i]; }
    std::vector<std::size_t> layer_sizes() const;

    std::optional<std::size_t> find(const Element& g) const;
    std::size_t index_of(const Element& g) const;
    int neighbor(std::size_t i, Letter l) const { return adjacency_[i * alphabet_ + static_cast<unsigned char>(l)]; }

    // Metric and products. Closed-form families answer for every element;
    // Dehn presentations answer inside the working ball and return nullopt
    // outside it.
    std::optional<int> length(const Element& g) const;
    std::optional<Element> step(const Element& g, Letter l) const;
    std::optional<Element> multiply(const Element& g, const Element& h) const;
    std::optional<Element> invert(const Element& g) const;
    std::optional<int> exact_distance(const Element& y, const Element& x) const;

    // d(y, x) for y, x inside the working ball.
    DistanceResult distance(const Element& y, const Element& x) const;

private:
    Ball() = default;
    void enumerate_closed_form(std::size_t max_vertices);
    void enumerate_dehn(std::size_t max_vertices);
    void add_vertex(Element e, int layer, std::size_t max_vertices);
    std::optional<std::size_t> walk(std::size_t from, std::string_view letters) const;
    std::optional<int> restricted_bfs(std::size_t from, std::size_t to) const;

    GroupPtr group_;
    int radius_ = 0;
    int working_radius_ = 0;
    std::size_t alphabet_ = 0;
    std::vector<Element> vertices_;
    std::vector<int> layers_;
    std::vector<std::size_t> layer_start_;
    std::vector<int> adjacency_;
    std::unordered_map<std::string, std::size_t> index_;
};

} // namespace hypbranch
