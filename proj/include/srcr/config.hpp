#pragma once

#include <optional>
#include <string>
#include <tuple>

#include "srcr/rational.hpp"

namespace srcr {

// Semi-structured sparsity: n_pruned weights removed out of every m_group
// consecutive weights along a row. 2:8 therefore means 25% sparsity. This is
// the prune-N convention, the reverse of the hardware keep-N reading.
struct NMPattern {
    int n_pruned = 0;
    int m_group = 1;

    Rational sparsity() const { return Rational(n_pruned, m_group); }

    void validate() const {
        if (m_group < 1) throw validation_error("n:m pattern with empty group");
        if (n_pruned < 0 || n_pruned > m_group)
            throw validation_error("n:m pattern requires 0 <= n <= m, got " + to_string());
    }

    std::string to_string() const {
        return std::to_string(n_pruned) + ":" + std::to_string(m_group);
    }

    static NMPattern parse(const std::string& s) {
        auto colon = s.find(':');
        if (colon == std::string::npos)
            throw validation_error("expected N:M pattern, got '" + s + "'");
        try {
            NMPattern p{std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
            p.validate();
            return p;
        } catch (const std::invalid_argument&) {
            throw validation_error("expected N:M pattern, got '" + s + "'");
        } catch (const std::out_of_range&) {
            throw validation_error("N:M pattern out of range: '" + s + "'");
        }
    }

    friend bool operator==(const NMPattern& a, const NMPattern& b) {
        return a.n_pruned == b.n_pruned && a.m_group == b.m_group;
    }
};

enum class PatternKind { none, unstructured, nm };

// One compression setup: sparsity fraction, quantization bit-width, and the
// sparsity pattern. Sparsity is exact-rational so 33.333% input behaves as
// exactly one-third.
struct CompressionConfig {
    Rational sparsity = Rational(0);
    Rational bits = Rational(16);
    PatternKind pattern = PatternKind::none;
    std::optional<NMPattern> nm;

    static CompressionConfig baseline() { return CompressionConfig{}; }

    static CompressionConfig pruning_only(Rational sparsity) {
        CompressionConfig c;
        c.sparsity = sparsity;
        c.pattern = sparsity == Rational(0) ? PatternKind::none : PatternKind::unstructured;
        c.validate();
        return c;
    }

    static CompressionConfig pruning_only_nm(NMPattern pattern) {
        CompressionConfig c;
        c.nm = pattern;
        c.sparsity = pattern.sparsity();
        c.pattern = c.sparsity == Rational(0) ? PatternKind::none : PatternKind::nm;
        if (c.pattern == PatternKind::none) c.nm.reset();
        c.validate();
        return c;
    }

    static CompressionConfig quantization_only(Rational bits) {
        CompressionConfig c;
        c.bits = bits;
        c.validate();
        return c;
    }

    static CompressionConfig joint(Rational sparsity, Rational bits,
                                   std::optional<NMPattern> pattern = std::nullopt) {
        CompressionConfig c;
        c.sparsity = pattern ? pattern->sparsity() : sparsity;
        c.bits = bits;
        c.pattern = pattern                        ? PatternKind::nm
                    : c.sparsity == Rational(0)    ? PatternKind::none
                                                   : PatternKind::unstructured;
        c.nm = pattern;
        c.validate();
        return c;
    }

    bool is_baseline() const { return sparsity == Rational(0) && bits == Rational(16); }
    bool has_pruning() const { return sparsity > Rational(0); }
    bool has_quantization() const { return bits < Rational(16); }
    bool is_joint() const { return has_pruning() && has_quantization(); }

    void validate() const {
        if (sparsity < Rational(0) || sparsity > Rational(1))
            throw validation_error("sparsity outside [0,1]: " + sparsity.to_string());
        if (bits <= Rational(0) || bits > Rational(16))
            throw validation_error("bits outside (0,16]: " + bits.to_string());
        if ((sparsity == Rational(0)) != (pattern == PatternKind::none))
            throw validation_error("sparsity 0 requires pattern none and vice versa");
        if (pattern == PatternKind::nm) {
            if (!nm) throw validation_error("nm pattern without n:m parameters");
            nm->validate();
            if (sparsity != nm->sparsity())
                throw validation_error("sparsity " + sparsity.to_string() +
                                       " inconsistent with pattern " + nm->to_string());
        } else if (nm) {
            throw validation_error("n:m parameters present for non-nm pattern");
        }
    }

    std::string pattern_string() const {
        switch (pattern) {
            case PatternKind::none: return "none";
            case PatternKind::unstructured: return "unstructured";
            case PatternKind::nm: return nm->to_string();
        }
        return "none";
    }

    // Canonical config string: s=<rational>%;q=<bits>b;pat=<pattern>.
    // The sparsity is a plain rational fraction (s=1/3% means one-third).
    std::string to_string() const {
        return "s=" + sparsity.to_string() + "%;q=" + bits.to_string() + "b;pat=" +
               pattern_string();
    }

    static CompressionConfig parse(const std::string& text) {
        Rational s(0), q(16);
        std::string pat = "none";
        std::size_t start = 0;
        bool saw_s = false, saw_q = false;
        while (start < text.size()) {
            auto end = text.find(';', start);
            if (end == std::string::npos) end = text.size();
            std::string field = text.substr(start, end - start);
            start = end + 1;
            if (field.empty()) continue;
            auto eq = field.find('=');
            if (eq == std::string::npos)
                throw validation_error("bad config field '" + field + "' in '" + text + "'");
            std::string key = field.substr(0, eq);
            std::string val = field.substr(eq + 1);
            if (key == "s") {
                if (!val.empty() && val.back() == '%') val.pop_back();
                s = Rational::parse_snapped(val);
                saw_s = true;
            } else if (key == "q") {
                if (!val.empty() && (val.back() == 'b' || val.back() == 'B')) val.pop_back();
                q = Rational::parse(val);
                saw_q = true;
            } else if (key == "pat") {
                pat = val;
            } else {
                throw validation_error("unknown config key '" + key + "' in '" + text + "'");
            }
        }
        if (!saw_s || !saw_q)
            throw validation_error("config string needs s= and q= fields: '" + text + "'");
        return from_fields(s, q, pat);
    }

    // Builds and validates a config from loosely typed fields (file loaders,
    // CLI flags). An N:M pattern string overrides the sparsity value.
    static CompressionConfig from_fields(Rational sparsity, Rational bits,
                                         const std::string& pattern) {
        CompressionConfig c;
        c.sparsity = sparsity;
        c.bits = bits;
        if (pattern == "none" || pattern.empty()) {
            c.pattern = PatternKind::none;
        } else if (pattern == "unstructured") {
            c.pattern = PatternKind::unstructured;
        } else {
            c.nm = NMPattern::parse(pattern);
            c.pattern = PatternKind::nm;
            c.sparsity = c.nm->sparsity();
        }
        // A zero-sparsity "unstructured" row is just the dense config.
        if (c.sparsity == Rational(0) && c.pattern == PatternKind::unstructured)
            c.pattern = PatternKind::none;
        c.validate();
        return c;
    }

    friend bool operator==(const CompressionConfig& a, const CompressionConfig& b) {
        return a.sparsity == b.sparsity && a.bits == b.bits && a.pattern == b.pattern &&
               a.nm == b.nm;
    }
    friend bool operator!=(const CompressionConfig& a, const CompressionConfig& b) {
        return !(a == b);
    }
    friend bool operator<(const CompressionConfig& a, const CompressionConfig& b) {
        auto key = [](const CompressionConfig& c) {
            return std::make_tuple(c.sparsity, c.bits, static_cast<int>(c.pattern),
                                   c.nm ? c.nm->n_pruned : -1, c.nm ? c.nm->m_group : -1);
        };
        return key(a) < key(b);
    }
};

} // namespace srcr
