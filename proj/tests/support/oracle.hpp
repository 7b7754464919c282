#pragma once

// Test-only oracles. Everything here works directly on bitmasks of selected
// features and the plain tree structure of a diagram; none of it goes
// through the counting or propagation code under test.

#include <bit>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fmgen/feature_model.hpp"

namespace fmgen::oracle {

using Mask = std::uint32_t;

inline bool has(Mask m, FeatureId f) { return (m >> f) & 1u; }

/// The validity predicate: root selected, selected features have selected
/// parents, group semantics hold under every selected feature, constraints hold.
class Validity {
public:
    explicit Validity(const FeatureDiagram& d) : n_(d.size()) {
        parent_.resize(n_);
        for (FeatureId f = 0; f < n_; ++f) {
            const Feature& feat = d.feature(f);
            parent_[f] = feat.parent;
            for (const auto& g : feat.groups) {
                Mask members = 0, mandatory = 0;
                for (FeatureId m : g.members) {
                    members |= Mask{1} << m;
                    if (d.feature(m).presence == Presence::Mandatory) mandatory |= Mask{1} << m;
                }
                groups_.push_back({f, g.kind, members, mandatory});
            }
        }
        for (const auto& c : d.constraints()) {
            auto a = d.find(c.from);
            auto b = d.find(c.to);
            constraints_.push_back({c.kind, Mask{1} << *a, Mask{1} << *b});
        }
    }

    bool operator()(Mask s) const {
        if (!has(s, 0)) return false;
        for (FeatureId f = 1; f < n_; ++f)
            if (has(s, f) && !has(s, parent_[f])) return false;
        for (const auto& g : groups_) {
            if (!has(s, g.parent)) continue;
            const int on = std::popcount(s & g.members);
            switch (g.kind) {
            case GroupKind::And:
                if ((s & g.mandatory) != g.mandatory) return false;
                break;
            case GroupKind::Or:
                if (on < 1) return false;
                break;
            case GroupKind::Alternative:
                if (on != 1) return false;
                break;
            }
        }
        for (const auto& c : constraints_) {
            const bool a = s & c.from, b = s & c.to;
            if (c.kind == ConstraintKind::Requires && a && !b) return false;
            if (c.kind == ConstraintKind::Excludes && a && b) return false;
        }
        return true;
    }

    std::size_t size() const { return n_; }

private:
    struct G {
        FeatureId parent;
        GroupKind kind;
        Mask members;
        Mask mandatory;
    };
    struct C {
        ConstraintKind kind;
        Mask from;
        Mask to;
    };
    std::size_t n_;
    std::vector<FeatureId> parent_;
    std::vector<G> groups_;
    std::vector<C> constraints_;
};

/// Every valid configuration, by exhaustive enumeration of feature subsets.
inline std::vector<Mask> enumerate_valid(const FeatureDiagram& d) {
    Validity valid(d);
    const std::size_t n = d.size();
    std::vector<Mask> out;
    const Mask limit = Mask{1} << (n - 1);
    for (Mask rest = 0; rest < limit; ++rest) {
        Mask s = (rest << 1) | 1u;  // root is bit 0
        if (valid(s)) out.push_back(s);
    }
    return out;
}

inline std::uint64_t brute_count(const FeatureDiagram& d) { return enumerate_valid(d).size(); }

/// Does some valid configuration agree with every decided state?
inline bool extends(Mask config, std::span<const FeatureState> states) {
    for (FeatureId f = 0; f < states.size(); ++f) {
        if (states[f] == FeatureState::Selected && !has(config, f)) return false;
        if (states[f] == FeatureState::Deselected && has(config, f)) return false;
    }
    return true;
}

struct RandomDiagramOptions {
    std::size_t min_features = 1;
    std::size_t max_features = 20;
    std::size_t max_constraints = 0;
    std::string prefix = "F";
};

/// Random well-formed diagram with names prefix0..prefixN-1.
inline FeatureDiagram random_diagram(std::mt19937_64& rng, const RandomDiagramOptions& opt) {
    std::uniform_int_distribution<std::size_t> size_dist(opt.min_features, opt.max_features);
    const std::size_t target = size_dist(rng);
    std::size_t count = 1;
    auto name = [&](std::size_t i) { return opt.prefix + std::to_string(i); };
    DiagramBuilder b(name(0));
    std::vector<DiagramBuilder::Handle> nodes{b.root()};
    while (count < target) {
        auto parent = nodes[std::uniform_int_distribution<std::size_t>(0, nodes.size() - 1)(rng)];
        const auto room = target - count;
        const int pick = std::uniform_int_distribution<int>(0, 9)(rng);
        if (room >= 2 && pick >= 7) {
            auto kind = pick == 9 ? GroupKind::Alternative : GroupKind::Or;
            auto g = b.add_group(parent, kind);
            auto members = std::uniform_int_distribution<std::size_t>(2, std::min<std::size_t>(4, room))(rng);
            for (std::size_t i = 0; i < members; ++i) nodes.push_back(b.add_member(parent, g, name(count++)));
        } else {
            auto presence = pick < 3 ? Presence::Mandatory : Presence::Optional;
            nodes.push_back(b.add_feature(parent, presence, name(count++)));
        }
    }
    if (count >= 2 && opt.max_constraints > 0) {
        auto k = std::uniform_int_distribution<std::size_t>(0, opt.max_constraints)(rng);
        std::uniform_int_distribution<std::size_t> feat(0, count - 1);
        for (std::size_t i = 0; i < k; ++i) {
            auto a = feat(rng), c = feat(rng);
            if (a == c) continue;
            auto kind = std::uniform_int_distribution<int>(0, 1)(rng) ? ConstraintKind::Requires
                                                                        : ConstraintKind::Excludes;
            b.add_constraint(kind, name(a), name(c));
        }
    }
    return std::move(b).build();
}

}  // namespace fmgen::oracle
