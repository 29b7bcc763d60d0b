#include "hypbranch/group.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>
#include <sstream>

#include "hypbranch/errors.hpp"

namespace hypbranch {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

std::vector<std::string> default_names(std::size_t count) {
    std::vector<std::string> names;
    for (char c = 'a'; names.size() < count && c <= 'z'; ++c) {
        if (c == 'e') continue;
        names.emplace_back(1, c);
    }
    for (std::size_t i = names.size(); i < count; ++i) names.push_back("x" + std::to_string(i));
    return names;
}

bool valid_name(const std::string& name) {
    if (name.empty() || name == "e") return false;
    if (!std::isalpha(static_cast<unsigned char>(name[0])) && name[0] != '_') return false;
    return std::all_of(name.begin(), name.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
}

// Tokenizes the textual word syntax ("a b^-1 t^3", "ab^-1", "e") into raw
// letters against a list of generator names.
std::string tokenize(std::string_view text, const std::vector<std::string>& names) {
    static constexpr std::string_view kSuperInverse = "⁻¹";
    std::string out;
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < text.size() &&
               (std::isspace(static_cast<unsigned char>(text[pos])) || text[pos] == '*' || text[pos] == '.'))
            ++pos;
    };
    skip_space();
    while (pos < text.size()) {
        int best = -1;
        std::size_t best_len = 0;
        for (std::size_t i = 0; i < names.size(); ++i) {
            const auto& n = names[i];
            if (n.size() > best_len && text.substr(pos, n.size()) == n) {
                best = static_cast<int>(i);
                best_len = n.size();
            }
        }
        if (best < 0) {
            if (text[pos] == 'e' || text[pos] == '1') {
                ++pos;
                skip_space();
                continue;
            }
            std::size_t end = pos + 1;
            while (end < text.size() && std::isalnum(static_cast<unsigned char>(text[end]))) ++end;
            throw InvalidInput("unknown generator symbol '" + std::string(text.substr(pos, end - pos)) +
                               "' at position " + std::to_string(pos));
        }
        pos += best_len;
        long exponent = 1;
        if (text.substr(pos, kSuperInverse.size()) == kSuperInverse) {
            exponent = -1;
            pos += kSuperInverse.size();
        } else if (pos < text.size() && text[pos] == '^') {
            ++pos;
            bool braced = pos < text.size() && text[pos] == '{';
            if (braced) ++pos;
            std::size_t start = pos;
            if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) ++pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
            std::string digits(text.substr(start, pos - start));
            if (digits.empty() || digits == "-" || digits == "+")
                throw InvalidInput("malformed exponent at position " + std::to_string(start));
            if (braced) {
                if (pos >= text.size() || text[pos] != '}')
                    throw InvalidInput("unterminated exponent brace at position " + std::to_string(pos));
                ++pos;
            }
            exponent = std::stol(digits);
            if (std::labs(exponent) > 100000) throw InvalidInput("exponent too large: " + digits);
        }
        Letter l = make_letter(best, exponent < 0);
        out.append(static_cast<std::size_t>(std::labs(exponent)), l);
        skip_space();
    }
    return out;
}

std::vector<std::string> rotations(const std::string& w) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < w.size(); ++i) out.push_back(w.substr(i) + w.substr(0, i));
    return out;
}

} // namespace

GroupSpec GroupSpec::free_group(int rank) {
    GroupSpec s;
    s.family = Family::Free;
    s.generators = default_names(static_cast<std::size_t>(std::max(rank, 0)));
    return s;
}

GroupSpec GroupSpec::free_product_cyclic(std::vector<int> orders, std::vector<std::string> names) {
    GroupSpec s;
    s.family = Family::FreeProductCyclic;
    s.generators = names.empty() ? default_names(orders.size()) : std::move(names);
    s.orders = std::move(orders);
    return s;
}

GroupSpec GroupSpec::dehn(std::vector<std::string> generators, std::vector<std::string> relators) {
    GroupSpec s;
    s.family = Family::Dehn;
    s.generators = std::move(generators);
    s.relators = std::move(relators);
    return s;
}

std::string GroupSpec::canonical_string() const {
    std::ostringstream os;
    switch (family) {
    case Family::Free: os << "free:"; break;
    case Family::FreeProductCyclic: os << "fpc:"; break;
    case Family::Dehn: os << "dehn:"; break;
    }
    for (std::size_t i = 0; i < generators.size(); ++i) {
        if (i) os << ',';
        os << generators[i];
        if (family == Family::FreeProductCyclic && i < orders.size()) os << '=' << orders[i];
    }
    if (family == Family::Dehn) {
        os << '|';
        for (std::size_t i = 0; i < relators.size(); ++i) os << (i ? ";" : "") << relators[i];
    }
    return os.str();
}

Group::Group(GroupSpec spec, DehnOptions dehn) : spec_(std::move(spec)), dehn_(dehn) {
    validate();
    tag_ = fnv1a64(spec_.canonical_string());
    if (tag_ == 0) tag_ = 1;

    const int n = generator_count();
    if (spec_.family == Family::Dehn) {
        std::set<std::string> closure;
        std::vector<long> gcds(static_cast<std::size_t>(n), 0);
        for (const auto& text : spec_.relators) {
            std::string r = free_reduce(tokenize(text, spec_.generators));
            // Cyclic reduction.
            while (r.size() >= 2 && r.front() == formal_inverse(r.back())) r = r.substr(1, r.size() - 2);
            if (r.empty()) continue;
            std::vector<long> sums(static_cast<std::size_t>(n), 0);
            for (Letter l : r) sums[static_cast<std::size_t>(letter_generator(l))] += letter_is_inverse(l) ? -1 : 1;
            for (int i = 0; i < n; ++i) gcds[i] = std::gcd(gcds[i], std::labs(sums[i]));
            for (auto& rot : rotations(r)) closure.insert(rot);
            for (auto& rot : rotations(inverse_word(r))) closure.insert(rot);
        }
        symmetrized_.assign(closure.begin(), closure.end());
        std::sort(symmetrized_.begin(), symmetrized_.end(), [](const auto& a, const auto& b) {
            return shortlex_less(a, b);
        });
        abelian_modulus_ = gcds;
    }

    for (int i = 0; i < n; ++i) {
        Letter pos = make_letter(i, false);
        Letter neg = make_letter(i, true);
        switch (spec_.family) {
        case Family::Free:
            cayley_letters_.push_back(pos);
            cayley_letters_.push_back(neg);
            break;
        case Family::FreeProductCyclic:
            cayley_letters_.push_back(pos);
            if (spec_.orders[static_cast<std::size_t>(i)] != 2) cayley_letters_.push_back(neg);
            break;
        case Family::Dehn: {
            Element p = normalize(std::string(1, pos));
            if (p.is_identity()) break;
            cayley_letters_.push_back(pos);
            Element q = normalize(std::string(1, neg));
            if (q != p) cayley_letters_.push_back(neg);
            break;
        }
        }
    }
}

void Group::validate() {
    if (spec_.generators.empty()) throw InvalidInput("group needs at least one generator");
    std::set<std::string> seen;
    for (const auto& g : spec_.generators) {
        if (!valid_name(g)) throw InvalidInput("invalid generator name '" + g + "'");
        if (!seen.insert(g).second) throw InvalidInput("duplicate generator name '" + g + "'");
    }
    if (spec_.generators.size() > 60) throw InvalidInput("at most 60 generators are supported");
    if (spec_.family == Family::FreeProductCyclic) {
        if (spec_.orders.size() != spec_.generators.size())
            throw InvalidInput("free product needs one order per generator");
        for (int m : spec_.orders)
            if (m != 0 && m < 2) throw InvalidInput("cyclic factor order must be >= 2 or 0 (infinite), got " +
                                                    std::to_string(m));
    }
}

void Group::check_same_group(const Element& g) const {
    if (g.group_tag != tag_)
        throw InvalidInput("element does not belong to group " + spec_.canonical_string());
}

Element Group::generator(Letter l) const { return normalize(std::string(1, l)); }

std::string Group::inverse_word(std::string_view word) const {
    std::string out(word.rbegin(), word.rend());
    for (auto& c : out) c = formal_inverse(c);
    return out;
}

std::string Group::free_reduce(std::string_view word) const {
    std::string out;
    out.reserve(word.size());
    for (Letter l : word) {
        if (!out.empty() && out.back() == formal_inverse(l))
            out.pop_back();
        else
            out.push_back(l);
    }
    return out;
}

std::string Group::normalize_fpc(std::string_view word) const {
    struct Syllable {
        int gen;
        long exp;
    };
    std::vector<Syllable> stack;
    for (Letter l : word) {
        const int gen = letter_generator(l);
        const int m = spec_.orders[static_cast<std::size_t>(gen)];
        const long step = letter_is_inverse(l) ? -1 : 1;
        if (!stack.empty() && stack.back().gen == gen) {
            long e = stack.back().exp + step;
            if (m > 0) e = ((e % m) + m) % m;
            if (e == 0)
                stack.pop_back();
            else
                stack.back().exp = e;
        } else {
            stack.push_back({gen, m > 0 ? ((step % m) + m) % m : step});
        }
    }
    std::string out;
    for (const auto& s : stack) out.append(static_cast<std::size_t>(std::labs(s.exp)), make_letter(s.gen, s.exp < 0));
    return out;
}

std::string Group::dehn_reduce(std::string word) const {
    word = free_reduce(word);
    std::size_t steps = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < word.size() && !changed; ++i) {
            for (const auto& r : symmetrized_) {
                std::size_t len = 0;
                while (len < r.size() && i + len < word.size() && word[i + len] == r[len]) ++len;
                if (2 * len <= r.size()) continue;
                std::string replacement = inverse_word(std::string_view(r).substr(len));
                word = free_reduce(word.substr(0, i) + replacement + word.substr(i + len));
                if (++steps > dehn_.reduction_step_budget)
                    throw ReductionBudgetExceeded("Dehn reduction budget exceeded (" +
                                                  std::to_string(dehn_.reduction_step_budget) +
                                                  " steps); the presentation may not be a Dehn presentation");
                changed = true;
                break;
            }
        }
    }
    return word;
}

bool Group::dehn_trivial(std::string_view word) const { return dehn_reduce(std::string(word)).empty(); }

bool Group::dehn_irreducible_suffix(const std::string& word) const {
    for (const auto& r : symmetrized_) {
        for (std::size_t len = r.size() / 2 + 1; len <= r.size() && len <= word.size(); ++len) {
            if (word.compare(word.size() - len, len, r, 0, len) == 0) return false;
        }
    }
    return true;
}

int Group::grow_suffix_table(int radius) const {
    SuffixTable& t = suffix_;
    const int alphabet = 2 * generator_count();
    if (t.radius < 0) {
        t.words.push_back("");
        t.layer.push_back(0);
        t.layer_start.push_back(1);
        t.buckets[{abelian_key({}), 0}].push_back(0);
        t.radius = 0;
    }
    auto locate = [&](const std::string& word, int lo, int hi) -> bool {
        auto key = abelian_key(word);
        for (int k = std::max(lo, 0); k <= hi; ++k) {
            auto it = t.buckets.find({key, k});
            if (it == t.buckets.end()) continue;
            for (std::size_t v : it->second)
                if (dehn_trivial(inverse_word(t.words[v]) + word)) return true;
        }
        return false;
    };
    while (t.radius < radius && !t.capped) {
        const int k = t.radius;
        const std::size_t begin = t.layer_start[static_cast<std::size_t>(k)];
        const std::size_t end = t.layer_start[static_cast<std::size_t>(k) + 1];
        for (std::size_t i = begin; i < end && !t.capped; ++i) {
            for (int c = 0; c < alphabet; ++c) {
                const Letter l = static_cast<Letter>(c);
                if (!t.words[i].empty() && t.words[i].back() == formal_inverse(l)) continue;
                std::string cand = t.words[i] + l;
                if (locate(cand, k - 1, k + 1)) continue;
                if (t.words.size() >= dehn_.suffix_table_cap && k > 0) {
                    t.capped = true;
                    break;
                }
                t.buckets[{abelian_key(cand), k + 1}].push_back(t.words.size());
                t.words.push_back(std::move(cand));
                t.layer.push_back(k + 1);
            }
        }
        if (t.capped) {
            // Drop the partial layer.
            const std::size_t keep = end;
            for (auto it = t.buckets.begin(); it != t.buckets.end();) {
                if (it->first.second == k + 1)
                    it = t.buckets.erase(it);
                else
                    ++it;
            }
            t.words.resize(keep);
            t.layer.resize(keep);
            break;
        }
        if (t.words.size() == end) {
            t.capped = true;
            break;
        }
        t.layer_start.push_back(t.words.size());
        t.radius = k + 1;
    }
    return t.radius;
}

std::optional<std::size_t> Group::suffix_lookup(const std::string& word, int layer) const {
    auto it = suffix_.buckets.find({abelian_key(word), layer});
    if (it == suffix_.buckets.end()) return std::nullopt;
    for (std::size_t v : it->second)
        if (dehn_trivial(inverse_word(suffix_.words[v]) + word)) return v;
    return std::nullopt;
}

std::string Group::shortlex_search(const std::string& reduced) const {
    // Meet in the middle: enumerate prefixes v in lexicographic order and
    // finish each with the table entry equal to v^-1 * target. Prefixes of
    // shortlex-minimal geodesics are freely reduced and Dehn-irreducible.
    std::lock_guard lock(search_mutex_);
    const int alphabet = 2 * generator_count();
    std::size_t tested = 0;
    for (int length = 0; length <= static_cast<int>(reduced.size()); ++length) {
        const int table = grow_suffix_table(length);
        if (length <= table) {
            if (auto v = suffix_lookup(reduced, length)) return suffix_.words[*v];
            continue;
        }
        const int prefix_len = length - table;
        std::string v;
        std::optional<std::string> found;
        std::function<bool()> dfs = [&]() -> bool {
            if (static_cast<int>(v.size()) == prefix_len) {
                if (++tested > dehn_.shortlex_search_budget)
                    throw ReductionBudgetExceeded("shortlex normal-form search budget exceeded (" +
                                                  std::to_string(dehn_.shortlex_search_budget) + " candidates)");
                if (auto s = suffix_lookup(inverse_word(v) + reduced, table)) {
                    found = v + suffix_.words[*s];
                    return true;
                }
                return false;
            }
            for (int c = 0; c < alphabet; ++c) {
                Letter l = static_cast<Letter>(c);
                if (!v.empty() && v.back() == formal_inverse(l)) continue;
                v.push_back(l);
                if (dehn_irreducible_suffix(v) && dfs()) return true;
                v.pop_back();
            }
            return false;
        };
        if (dfs()) return *found;
    }
    return reduced;
}

std::string Group::normalize_dehn(std::string_view word) const {
    std::string reduced = dehn_reduce(std::string(word));
    {
        std::lock_guard lock(cache_mutex_);
        if (auto it = dehn_cache_.find(reduced); it != dehn_cache_.end()) return it->second;
    }
    std::string nf = shortlex_search(reduced);
    std::lock_guard lock(cache_mutex_);
    dehn_cache_.emplace(reduced, nf);
    return nf;
}

Element Group::normalize(std::string_view raw) const {
    const int alphabet = 2 * generator_count();
    for (std::size_t i = 0; i < raw.size(); ++i) {
        int code = static_cast<unsigned char>(raw[i]);
        if (code >= alphabet)
            throw InvalidInput("unknown letter code " + std::to_string(code) + " at position " + std::to_string(i));
    }
    switch (spec_.family) {
    case Family::Free: return Element{free_reduce(raw), tag_};
    case Family::FreeProductCyclic: return Element{normalize_fpc(raw), tag_};
    case Family::Dehn: return Element{normalize_dehn(raw), tag_};
    }
    return identity();
}

Element Group::parse(std::string_view text) const { return normalize(tokenize(text, spec_.generators)); }

std::string Group::format_word(std::string_view letters) const {
    if (letters.empty()) return "e";
    bool compact = std::all_of(spec_.generators.begin(), spec_.generators.end(),
                               [](const std::string& n) { return n.size() == 1; });
    std::string out;
    std::size_t i = 0;
    while (i < letters.size()) {
        std::size_t j = i;
        while (j < letters.size() && letters[j] == letters[i]) ++j;
        const long count = static_cast<long>(j - i);
        const Letter l = letters[i];
        if (!out.empty() && !compact) out += ' ';
        out += spec_.generators[static_cast<std::size_t>(letter_generator(l))];
        long exp = letter_is_inverse(l) ? -count : count;
        if (exp != 1) out += "^" + std::to_string(exp);
        i = j;
    }
    return out;
}

std::string Group::format(const Element& g) const { return format_word(g.word); }

Element Group::multiply(const Element& g, const Element& h) const {
    check_same_group(g);
    check_same_group(h);
    if (spec_.family == Family::Free) {
        std::string out = g.word;
        std::size_t k = 0;
        while (!out.empty() && k < h.word.size() && out.back() == formal_inverse(h.word[k])) {
            out.pop_back();
            ++k;
        }
        out.append(h.word, k, std::string::npos);
        return Element{std::move(out), tag_};
    }
    return normalize(g.word + h.word);
}

Element Group::invert(const Element& g) const {
    check_same_group(g);
    if (spec_.family == Family::Free) return Element{inverse_word(g.word), tag_};
    return normalize(inverse_word(g.word));
}

Element Group::append(const Element& g, Letter l) const {
    switch (spec_.family) {
    case Family::Free: {
        Element out = g;
        if (!out.word.empty() && out.word.back() == formal_inverse(l))
            out.word.pop_back();
        else
            out.word.push_back(l);
        return out;
    }
    case Family::FreeProductCyclic: {
        const int gen = letter_generator(l);
        const int m = spec_.orders[static_cast<std::size_t>(gen)];
        Element out = g;
        std::string& w = out.word;
        if (w.empty() || letter_generator(w.back()) != gen) {
            if (m > 0)
                w.append(letter_is_inverse(l) ? static_cast<std::size_t>(m - 1) : 1u, make_letter(gen, false));
            else
                w.push_back(l);
            return out;
        }
        if (m == 0) {
            if (w.back() == formal_inverse(l))
                w.pop_back();
            else
                w.push_back(l);
            return out;
        }
        std::size_t run = 0;
        while (run < w.size() && w[w.size() - 1 - run] == w.back()) ++run;
        long e = (static_cast<long>(run) + (letter_is_inverse(l) ? -1 : 1) + m) % m;
        w.resize(w.size() - run);
        w.append(static_cast<std::size_t>(e), make_letter(gen, false));
        return out;
    }
    case Family::Dehn: return normalize(g.word + std::string(1, l));
    }
    return g;
}

std::optional<int> Group::closed_form_length(const Element& g) const {
    switch (spec_.family) {
    case Family::Free: return static_cast<int>(g.word.size());
    case Family::FreeProductCyclic: {
        int total = 0;
        std::size_t i = 0;
        const auto& w = g.word;
        while (i < w.size()) {
            std::size_t j = i;
            while (j < w.size() && w[j] == w[i]) ++j;
            const int count = static_cast<int>(j - i);
            const int m = spec_.orders[static_cast<std::size_t>(letter_generator(w[i]))];
            total += m > 0 ? std::min(count, m - count) : count;
            i = j;
        }
        return total;
    }
    case Family::Dehn: return std::nullopt;
    }
    return std::nullopt;
}

bool Group::is_symmetrized() const {
    std::set<std::string> set(symmetrized_.begin(), symmetrized_.end());
    for (const auto& r : symmetrized_) {
        if (!set.count(inverse_word(r))) return false;
        for (const auto& rot : rotations(r))
            if (!set.count(rot)) return false;
    }
    return true;
}

std::vector<long> Group::abelian_key(std::string_view word) const {
    std::vector<long> key(static_cast<std::size_t>(generator_count()), 0);
    for (Letter l : word) key[static_cast<std::size_t>(letter_generator(l))] += letter_is_inverse(l) ? -1 : 1;
    if (spec_.family == Family::Dehn) {
        for (std::size_t i = 0; i < key.size(); ++i) {
            long q = abelian_modulus_[i];
            if (q > 0) key[i] = ((key[i] % q) + q) % q;
        }
    }
    return key;
}

} // namespace hypbranch
