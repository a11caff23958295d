#pragma once

#include <cstdlib>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "nhbraid/errors.hpp"

namespace nhbraid {

/// Ordered Artin generators: +i is σ_i, -i is σ_i⁻¹ (1 ≤ i ≤ strands-1).
struct BraidWord {
    std::vector<int> generators;
    int strands = 2;

    BraidWord() = default;
    BraidWord(std::vector<int> g, int n) : generators(std::move(g)), strands(n) { validate(); }

    void validate() const {
        if (strands < 1) throw config_error("InvalidBraid", "strand count must be positive");
        for (int g : generators)
            if (g == 0 || std::abs(g) > strands - 1)
                throw config_error("InvalidBraid", "generator index out of range: " + std::to_string(g));
    }

    bool empty() const { return generators.empty(); }
    std::size_t size() const { return generators.size(); }

    bool operator==(const BraidWord& o) const { return strands == o.strands && generators == o.generators; }

    /// Text form "s1 s3 s2^-1"; the empty word prints as "".
    std::string str() const {
        std::string out;
        for (std::size_t i = 0; i < generators.size(); ++i) {
            if (i) out += ' ';
            out += 's' + std::to_string(std::abs(generators[i]));
            if (generators[i] < 0) out += "^-1";
        }
        return out;
    }

    static BraidWord parse(const std::string& text, int strands) {
        std::istringstream in(text);
        std::string tok;
        std::vector<int> g;
        while (in >> tok) {
            if (tok.size() < 2 || (tok[0] != 's' && tok[0] != 'S'))
                throw config_error("InvalidBraid", "cannot parse generator '" + tok + "'");
            int sign = 1;
            std::string body = tok.substr(1);
            if (const auto caret = body.find('^'); caret != std::string::npos) {
                const std::string power = body.substr(caret + 1);
                if (power == "-1") sign = -1;
                else if (power != "1" && power != "+1")
                    throw config_error("InvalidBraid", "only ^1 and ^-1 exponents are accepted: '" + tok + "'");
                body = body.substr(0, caret);
            }
            try {
                g.push_back(sign * std::stoi(body));
            } catch (const std::exception&) {
                throw config_error("InvalidBraid", "cannot parse generator '" + tok + "'");
            }
        }
        return BraidWord(std::move(g), strands);
    }

    /// Cancel adjacent σ_i σ_i⁻¹ pairs until none remain.
    BraidWord free_reduced() const {
        std::vector<int> stack;
        for (int g : generators) {
            if (!stack.empty() && stack.back() == -g) stack.pop_back();
            else stack.push_back(g);
        }
        return BraidWord(std::move(stack), strands);
    }

    /// Mirror image: every generator sign flipped.
    BraidWord mirrored() const {
        std::vector<int> g = generators;
        for (auto& x : g) x = -x;
        return BraidWord(std::move(g), strands);
    }

    /// Strand permutation induced by the word: result[start position] = end position.
    std::vector<int> permutation() const {
        std::vector<int> at(strands);  // at[position] = strand currently there
        std::iota(at.begin(), at.end(), 0);
        for (int g : generators) std::swap(at[std::abs(g) - 1], at[std::abs(g)]);
        std::vector<int> end(strands);
        for (int p = 0; p < strands; ++p) end[at[p]] = p;
        return end;
    }

    /// Number of link components of the closure (cycles of the permutation).
    int components() const {
        const auto perm = permutation();
        std::vector<bool> seen(strands, false);
        int c = 0;
        for (int s = 0; s < strands; ++s) {
            if (seen[s]) continue;
            ++c;
            for (int x = s; !seen[x]; x = perm[x]) seen[x] = true;
        }
        return c;
    }
};

inline int writhe(const BraidWord& w) {
    int s = 0;
    for (int g : w.generators) s += g > 0 ? 1 : -1;
    return s;
}

}  // namespace nhbraid
