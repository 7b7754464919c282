#include "fmgen/widget_transform.hpp"

#include <algorithm>

#include <json.hpp>

namespace fmgen {

std::string_view to_string(WidgetKind kind) {
    switch (kind) {
    case WidgetKind::Panel: return "Panel";
    case WidgetKind::GroupTitle: return "GroupTitle";
    case WidgetKind::Checkbox: return "Checkbox";
    case WidgetKind::RadioGroup: return "RadioGroup";
    case WidgetKind::CheckboxGroup: return "CheckboxGroup";
    case WidgetKind::Label: return "Label";
    }
    return "?";
}

std::string_view to_string(Validation validation) {
    switch (validation) {
    case Validation::None: return "None";
    case Validation::AtLeastOne: return "AtLeastOne";
    case Validation::ExactlyOne: return "ExactlyOne";
    }
    return "?";
}

const WidgetNode* WidgetTree::find(std::string_view ref) const {
    auto it = by_ref_.find(ref);
    return it == by_ref_.end() ? nullptr : it->second;
}

WidgetTree::WidgetTree(const WidgetTree& other)
    : root_(other.root_), bindings_(other.bindings_), omissions_(other.omissions_), widget_of_(other.widget_of_),
      panel_of_(other.panel_of_), names_(other.names_) {
    index();
}

WidgetTree::WidgetTree(WidgetTree&& other)
    : root_(std::move(other.root_)), bindings_(std::move(other.bindings_)), omissions_(std::move(other.omissions_)),
      widget_of_(std::move(other.widget_of_)), panel_of_(std::move(other.panel_of_)), names_(std::move(other.names_)) {
    index();
    other.by_ref_.clear();
}

WidgetTree& WidgetTree::operator=(const WidgetTree& other) {
    if (this != &other) *this = WidgetTree(other);
    return *this;
}

WidgetTree& WidgetTree::operator=(WidgetTree&& other) {
    root_ = std::move(other.root_);
    bindings_ = std::move(other.bindings_);
    omissions_ = std::move(other.omissions_);
    widget_of_ = std::move(other.widget_of_);
    panel_of_ = std::move(other.panel_of_);
    names_ = std::move(other.names_);
    index();
    other.by_ref_.clear();
    return *this;
}

void WidgetTree::index() {
    by_ref_.clear();
    std::vector<const WidgetNode*> stack{&root_};
    while (!stack.empty()) {
        const WidgetNode* n = stack.back();
        stack.pop_back();
        by_ref_.emplace(n->ref, n);
        for (const auto& c : n->children) stack.push_back(&c);
    }
}

namespace {

class Builder {
public:
    Builder(const FeatureDiagram& d, TransformOptions opt, std::vector<std::string>& widget_of,
            std::vector<std::string>& panel_of, std::vector<EnablementBinding>& bindings,
            std::vector<Omission>& omissions)
        : d_(d), opt_(opt), widget_of_(widget_of), panel_of_(panel_of), bindings_(bindings), omissions_(omissions) {}

    WidgetNode panel(FeatureId f) {
        WidgetNode p{WidgetKind::Panel, "panel:" + d_.name_of(f), d_.name_of(f), Validation::None, f, {}};
        const Feature& feat = d_.feature(f);
        for (std::size_t gi = 0; gi < feat.groups.size(); ++gi) {
            const Group& g = feat.groups[gi];
            if (g.kind == GroupKind::And) {
                for (FeatureId m : g.members) {
                    const bool mandatory = d_.feature(m).presence == Presence::Mandatory;
                    const bool has_panel = d_.feature(m).has_children();
                    if (mandatory && !has_panel && opt_.omit_childless_mandatory) {
                        omissions_.push_back({m, "childless mandatory feature"});
                        panel_of_[m] = p.ref;
                        continue;
                    }
                    p.children.push_back(leaf(m, mandatory ? WidgetKind::GroupTitle : WidgetKind::Checkbox, p.ref));
                    if (has_panel) p.children.push_back(panel(m));
                }
            } else {
                const bool radio = g.kind == GroupKind::Alternative;
                WidgetNode group{radio ? WidgetKind::RadioGroup : WidgetKind::CheckboxGroup,
                                 "group:" + d_.name_of(f) + "/" + std::to_string(gi),
                                 d_.name_of(f),
                                 radio ? Validation::ExactlyOne : Validation::AtLeastOne,
                                 f,
                                 {}};
                for (FeatureId m : g.members) group.children.push_back(leaf(m, WidgetKind::Checkbox, p.ref));
                p.children.push_back(std::move(group));
                for (FeatureId m : g.members)
                    if (d_.feature(m).has_children()) p.children.push_back(panel(m));
            }
        }
        return p;
    }

    WidgetNode leaf(FeatureId f, WidgetKind kind, const std::string& enclosing) {
        WidgetNode n{kind, "feature:" + d_.name_of(f), d_.name_of(f), Validation::None, f, {}};
        widget_of_[f] = n.ref;
        panel_of_[f] = enclosing;
        if (n.interactive()) bindings_.push_back({n.ref, f});
        return n;
    }

private:
    const FeatureDiagram& d_;
    TransformOptions opt_;
    std::vector<std::string>& widget_of_;
    std::vector<std::string>& panel_of_;
    std::vector<EnablementBinding>& bindings_;
    std::vector<Omission>& omissions_;
};

nlohmann::json node_json(const WidgetNode& n) {
    nlohmann::json j;
    j["kind"] = to_string(n.kind);
    j["ref"] = n.ref;
    j["title"] = n.title;
    j["validation"] = n.validation == Validation::None ? nlohmann::json(nullptr) : nlohmann::json(to_string(n.validation));
    j["children"] = nlohmann::json::array();
    for (const auto& c : n.children) j["children"].push_back(node_json(c));
    return j;
}

}  // namespace

WidgetTree transform(const FeatureDiagram& d, TransformOptions options) {
    d.require_well_formed();
    WidgetTree t;
    t.widget_of_.assign(d.size(), "");
    t.panel_of_.assign(d.size(), "");
    for (const auto& f : d.features()) t.names_.push_back(f.name);
    Builder b(d, options, t.widget_of_, t.panel_of_, t.bindings_, t.omissions_);
    t.root_ = b.panel(d.root());
    t.widget_of_[d.root()] = t.root_.ref;
    t.panel_of_[d.root()] = t.root_.ref;
    t.index();
    return t;
}

std::string serialize(const WidgetTree& tree) {
    nlohmann::json doc;
    doc["root"] = node_json(tree.root());
    doc["bindings"] = nlohmann::json::array();
    for (const auto& b : tree.bindings())
        doc["bindings"].push_back(
            {{"widget", b.widget}, {"feature", tree.feature_names()[b.feature]}, {"condition", "open"}});
    doc["omissions"] = nlohmann::json::array();
    for (const auto& o : tree.omissions())
        doc["omissions"].push_back({{"feature", tree.feature_names()[o.feature]}, {"reason", o.reason}});
    return doc.dump(2) + "\n";
}

namespace {

bool fill_enablement(const WidgetNode& n, const std::vector<bool>& open, std::map<std::string, bool>& out) {
    bool enabled = false;
    switch (n.kind) {
    case WidgetKind::Checkbox: enabled = open[n.feature]; break;
    case WidgetKind::GroupTitle:
    case WidgetKind::Label: enabled = false; break;
    default: break;
    }
    for (const auto& c : n.children) {
        bool child = fill_enablement(c, open, out);
        if (n.kind == WidgetKind::Panel || n.kind == WidgetKind::RadioGroup || n.kind == WidgetKind::CheckboxGroup)
            enabled = enabled || child;
    }
    out[n.ref] = enabled;
    return enabled;
}

}  // namespace

std::map<std::string, bool> compute_enablement(const WidgetTree& tree, const Configuration& config) {
    const FeatureDiagram& d = config.diagram();
    bool match = d.size() == tree.feature_names().size();
    for (FeatureId f = 0; match && f < d.size(); ++f) match = d.name_of(f) == tree.feature_names()[f];
    if (!match) throw ConfigError("widget tree and configuration belong to different diagrams");

    std::vector<bool> open(d.size(), false);
    for (const auto& b : tree.bindings()) {
        const FeatureId f = b.feature;
        if (config.decision_on(f))
            open[f] = retract_decision(config, f).state(f) == FeatureState::Undecided;
        else
            open[f] = config.state(f) == FeatureState::Undecided;
    }
    std::map<std::string, bool> out;
    fill_enablement(tree.root(), open, out);
    return out;
}

std::vector<Notification> derive_notifications(const WidgetTree& tree, const ConsequenceReport& report,
                                               FeatureId trigger, Decision value) {
    const std::string& home = tree.panel_of(trigger);
    // The panel governed by the trigger holds exactly the trigger's descendants.
    const WidgetNode* governed = tree.find("panel:" + tree.feature_names()[trigger]);
    auto inside_governed = [&](FeatureId f) {
        if (!governed || governed->feature != trigger) return false;
        for (FeatureId p = f; p != kNoFeature;) {
            const std::string& panel = tree.panel_of(p);
            if (panel == governed->ref) return true;
            const WidgetNode* n = tree.find(panel);
            if (!n || n->feature == p) break;
            p = n->feature;
        }
        return false;
    };

    std::vector<Notification> out;
    for (const auto& change : report.changed) {
        if (change.feature == trigger) continue;
        const std::string& panel = tree.panel_of(change.feature);
        if (panel == home || inside_governed(change.feature)) continue;
        auto it = std::find_if(out.begin(), out.end(), [&](const Notification& n) { return n.panel == panel; });
        if (it == out.end()) {
            out.push_back({trigger, value, panel, {}, true});
            it = out.end() - 1;
        }
        it->affected.emplace_back(change.feature, change.after);
    }
    return out;
}

}  // namespace fmgen
