#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hypbranch {

// A letter is encoded as 2*generator + (inverse ? 1 : 0). Words are stored as
// byte strings of letters so short words stay inside the small-string buffer.
using Letter = char;

constexpr Letter make_letter(int generator, bool inverse) {
    return static_cast<Letter>(2 * generator + (inverse ? 1 : 0));
}
constexpr int letter_generator(Letter l) { return static_cast<unsigned char>(l) >> 1; }
constexpr bool letter_is_inverse(Letter l) { return (static_cast<unsigned char>(l) & 1) != 0; }
constexpr Letter formal_inverse(Letter l) { return static_cast<Letter>(l ^ 1); }

enum class Family { Free, FreeProductCyclic, Dehn };

struct GroupSpec {
    Family family = Family::Free;
    std::vector<std::string> generators;
    // FreeProductCyclic: order of each cyclic factor, 0 meaning infinite.
    std::vector<int> orders;
    // Dehn: relator words in the textual word syntax.
    std::vector<std::string> relators;

    static GroupSpec free_group(int rank);
    static GroupSpec free_product_cyclic(std::vector<int> orders,
                                         std::vector<std::string> names = {});
    static GroupSpec dehn(std::vector<std::string> generators, std::vector<std::string> relators);

    std::string canonical_string() const;
};

// A group element in canonical normal form. The tag identifies the group it
// was produced by, so products across groups are rejected.
struct Element {
    std::string word;
    std::uint64_t group_tag = 0;

    std::size_t size() const { return word.size(); }
    bool is_identity() const { return word.empty(); }

    friend bool operator==(const Element& a, const Element& b) {
        return a.group_tag == b.group_tag && a.word == b.word;
    }
    friend bool operator!=(const Element& a, const Element& b) { return !(a == b); }
};

// Shortlex order on normal-form words.
inline bool shortlex_less(const std::string& a, const std::string& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
}
inline bool shortlex_less(const Element& a, const Element& b) { return shortlex_less(a.word, b.word); }

struct ElementHash {
    std::size_t operator()(const Element& e) const noexcept { return std::hash<std::string>{}(e.word); }
};

struct DehnOptions {
    std::size_t reduction_step_budget = 100000;
    std::size_t shortlex_search_budget = 2000000;
    // Elements kept in the table of short normal forms used to finish the
    // shortlex search.
    std::size_t suffix_table_cap = 30000;
};

class Group {
public:
    explicit Group(GroupSpec spec, DehnOptions dehn = {});

    const GroupSpec& spec() const { return spec_; }
    Family family() const { return spec_.family; }
    std::uint64_t tag() const { return tag_; }
    int generator_count() const { return static_cast<int>(spec_.generators.size()); }

    // Symmetric generating set used for the Cayley graph, in shortlex letter
    // order. Involutions contribute a single letter.
    const std::vector<Letter>& cayley_letters() const { return cayley_letters_; }

    // True when word length has a closed form (free groups, free products of
    // cyclic groups). Dehn presentations measure length in an enumerated ball.
    bool has_closed_form_length() const { return spec_.family != Family::Dehn; }

    Element identity() const { return Element{{}, tag_}; }
    Element generator(Letter l) const;

    Element normalize(std::string_view raw_letters) const;
    Element parse(std::string_view text) const;
    std::string format(const Element& g) const;
    std::string format_word(std::string_view letters) const;

    Element multiply(const Element& g, const Element& h) const;
    Element invert(const Element& g) const;
    // g * letter, with a fast path for the closed-form families.
    Element append(const Element& g, Letter l) const;

    std::optional<int> closed_form_length(const Element& g) const;

    // Dehn presentation internals, exposed for inspection and tests.
    const std::vector<std::string>& symmetrized_relators() const { return symmetrized_; }
    bool is_symmetrized() const;
    std::string dehn_reduce(std::string word) const;
    bool dehn_trivial(std::string_view word) const;

    // Canonical abelian invariant used to bucket candidate equalities while
    // enumerating Dehn balls: equal elements always share the key.
    std::vector<long> abelian_key(std::string_view word) const;

    std::string inverse_word(std::string_view word) const;

private:
    void check_same_group(const Element& g) const;
    std::string free_reduce(std::string_view word) const;
    std::string normalize_fpc(std::string_view word) const;
    std::string normalize_dehn(std::string_view word) const;
    std::string shortlex_search(const std::string& reduced) const;
    int grow_suffix_table(int radius) const;
    std::optional<std::size_t> suffix_lookup(const std::string& word, int layer) const;
    bool dehn_irreducible_suffix(const std::string& word) const;
    void validate();

    GroupSpec spec_;
    DehnOptions dehn_;
    std::uint64_t tag_ = 0;
    std::vector<Letter> cayley_letters_;
    std::vector<std::string> symmetrized_;
    std::vector<long> abelian_modulus_;

    // Shortlex-minimal words of all elements up to suffix_radius_, in BFS
    // order, bucketed by abelian key and layer.
    struct SuffixTable {
        std::vector<std::string> words;
        std::vector<int> layer;
        std::vector<std::size_t> layer_start{0};
        std::map<std::pair<std::vector<long>, int>, std::vector<std::size_t>> buckets;
        int radius = -1;
        bool capped = false;
    };
    mutable std::mutex search_mutex_;
    mutable SuffixTable suffix_;

    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<std::string, std::string> dehn_cache_;
};

using GroupPtr = std::shared_ptr<const Group>;

inline GroupPtr make_group(GroupSpec spec, DehnOptions dehn = {}) {
    return std::make_shared<const Group>(std::move(spec), dehn);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 1469598103934665603ULL);

} // namespace hypbranch
