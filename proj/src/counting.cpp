// Exact configuration counting.
//
// Without cross-tree constraints the count is a product/sum over the tree:
// a selected feature contributes the product of its groups, where
//   And:         prod(mandatory ? sel(m) : sel(m) + 1)
//   Alternative: sum(sel(m))
//   Or:          prod(sel(m) + 1) - 1
// Assumptions (features forced on or off) refine the same recurrence. With
// constraints, the features they touch are branched on explicitly and each
// fully assigned branch is counted compositionally.

#include <algorithm>

#include "fmgen/feature_model.hpp"

namespace fmgen {
namespace {

using Integer = VariantCount::Integer;

class Counter {
public:
    Counter(const FeatureDiagram& d, std::span<const FeatureState> assumed)
        : d_(d), assumed_(assumed.begin(), assumed.end()), sel_(d.size()), has_on_(d.size()) {
        if (assumed_.size() != d.size()) throw ConfigError("assumption vector does not match the diagram");
        for (const auto& c : d.resolved_constraints()) {
            touched_.push_back(c.from);
            touched_.push_back(c.to);
        }
        std::sort(touched_.begin(), touched_.end());
        touched_.erase(std::unique(touched_.begin(), touched_.end()), touched_.end());
        for (std::size_t i = 0; i < touched_.size(); ++i) {
            for (std::size_t j = 0; j < d.resolved_constraints().size(); ++j) {
                const auto& c = d.resolved_constraints()[j];
                if (c.from == touched_[i] || c.to == touched_[i]) constraints_of_[touched_[i]].push_back(j);
            }
        }
    }

    Integer run() {
        for (const auto& c : d_.resolved_constraints())
            if (violated(c)) return 0;
        return branch(0);
    }

private:
    bool violated(const ResolvedConstraint& c) const {
        auto a = assumed_[c.from];
        auto b = assumed_[c.to];
        if (c.kind == ConstraintKind::Requires) return a == FeatureState::Selected && b == FeatureState::Deselected;
        return a == FeatureState::Selected && b == FeatureState::Selected;
    }

    Integer branch(std::size_t k) {
        if (k == touched_.size()) return tree_count();
        const FeatureId f = touched_[k];
        if (assumed_[f] != FeatureState::Undecided) return branch(k + 1);

        Integer total = 0;
        for (auto value : {FeatureState::Selected, FeatureState::Deselected}) {
            assumed_[f] = value;
            bool ok = std::none_of(constraints_of_[f].begin(), constraints_of_[f].end(), [&](std::size_t j) {
                return violated(d_.resolved_constraints()[j]);
            });
            if (ok && k + 1 < touched_.size() && tree_count().is_zero()) ok = false;
            if (ok) total += branch(k + 1);
        }
        assumed_[f] = FeatureState::Undecided;
        return total;
    }

    Integer tree_count() {
        const auto n = static_cast<FeatureId>(d_.size());
        for (FeatureId id = n; id-- > 0;) {
            const Feature& f = d_.feature(id);
            bool on = assumed_[id] == FeatureState::Selected;
            for (const auto& g : f.groups)
                for (FeatureId m : g.members) on = on || has_on_[m];
            has_on_[id] = on;

            if (assumed_[id] == FeatureState::Deselected) {
                sel_[id] = 0;
                continue;
            }
            Integer product = 1;
            for (const auto& g : f.groups) {
                product *= group_count(g);
                if (product.is_zero()) break;
            }
            sel_[id] = std::move(product);
        }
        return sel_[d_.root()];
    }

    Integer unselected(FeatureId m) const { return has_on_[m] ? 0 : 1; }

    Integer group_count(const Group& g) const {
        switch (g.kind) {
        case GroupKind::And: {
            Integer p = 1;
            for (FeatureId m : g.members) {
                if (d_.feature(m).presence == Presence::Mandatory)
                    p *= sel_[m];
                else
                    p *= sel_[m] + unselected(m);
            }
            return p;
        }
        case GroupKind::Alternative: {
            // Exactly one member selected, every other member fully off.
            std::size_t blocked = 0;
            FeatureId only = kNoFeature;
            for (FeatureId m : g.members)
                if (has_on_[m]) {
                    ++blocked;
                    only = m;
                }
            if (blocked > 1) return 0;
            if (blocked == 1) return sel_[only];
            Integer s = 0;
            for (FeatureId m : g.members) s += sel_[m];
            return s;
        }
        case GroupKind::Or: {
            Integer all = 1;
            Integer none = 1;
            for (FeatureId m : g.members) {
                all *= sel_[m] + unselected(m);
                none *= unselected(m);
            }
            return all - none;
        }
        }
        return 0;
    }

    const FeatureDiagram& d_;
    std::vector<FeatureState> assumed_;
    std::vector<Integer> sel_;
    std::vector<bool> has_on_;
    std::vector<FeatureId> touched_;
    std::unordered_map<FeatureId, std::vector<std::size_t>> constraints_of_;
};

}  // namespace

VariantCount count_completions(const FeatureDiagram& diagram, std::span<const FeatureState> assumed) {
    diagram.require_well_formed();
    return VariantCount(Counter(diagram, assumed).run());
}

VariantCount count_variants(const FeatureDiagram& diagram) {
    std::vector<FeatureState> free(diagram.size(), FeatureState::Undecided);
    return count_completions(diagram, free);
}

}  // namespace fmgen
