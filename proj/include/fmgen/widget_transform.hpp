#pragma once

// Feature diagram -> abstract widget tree.
//
//   root feature              Panel
//   optional feature          Checkbox
//   mandatory feature         GroupTitle (non-interactive)
//   alternative group         RadioGroup, ExactlyOne, one Checkbox option per member
//   or-group                  CheckboxGroup, AtLeastOne
//   feature with children     its own widget followed by a Panel holding its groups
//
// The serialized form is byte-stable JSON so any renderer, and golden tests,
// can consume it without a UI toolkit.

#include <map>
#include <string>
#include <vector>

#include "fmgen/config_engine.hpp"
#include "fmgen/feature_model.hpp"

namespace fmgen {

enum class WidgetKind { Panel, GroupTitle, Checkbox, RadioGroup, CheckboxGroup, Label };
enum class Validation { None, AtLeastOne, ExactlyOne };

std::string_view to_string(WidgetKind kind);
std::string_view to_string(Validation validation);

struct WidgetNode {
    WidgetKind kind = WidgetKind::Panel;
    std::string ref;  ///< "panel:F", "feature:F" or "group:F/i"
    std::string title;
    Validation validation = Validation::None;
    FeatureId feature = kNoFeature;  ///< owning feature; the parent for groups
    std::vector<WidgetNode> children;

    bool interactive() const noexcept { return kind == WidgetKind::Checkbox; }
};

/// Checkbox `widget` is enabled iff the decision on `feature` is still open.
struct EnablementBinding {
    std::string widget;
    FeatureId feature;
};

struct Omission {
    FeatureId feature;
    std::string reason;
};

struct TransformOptions {
    /// Drop childless mandatory features (recorded as omissions) instead of
    /// showing them as group titles.
    bool omit_childless_mandatory = false;
};

class WidgetTree {
public:
    WidgetTree() = default;
    WidgetTree(const WidgetTree& other);
    WidgetTree(WidgetTree&& other);
    WidgetTree& operator=(const WidgetTree& other);
    WidgetTree& operator=(WidgetTree&& other);

    const WidgetNode& root() const noexcept { return root_; }
    const std::vector<EnablementBinding>& bindings() const noexcept { return bindings_; }
    const std::vector<Omission>& omissions() const noexcept { return omissions_; }

    const WidgetNode* find(std::string_view ref) const;
    /// Ref of the widget representing `feature`; empty when omitted.
    const std::string& widget_of(FeatureId feature) const { return widget_of_.at(feature); }
    /// Ref of the panel that directly contains the feature's widget (or
    /// would, for omitted features). The root's own panel for the root.
    const std::string& panel_of(FeatureId feature) const { return panel_of_.at(feature); }

    const std::vector<std::string>& feature_names() const noexcept { return names_; }

private:
    friend WidgetTree transform(const FeatureDiagram&, TransformOptions);

    WidgetNode root_;
    std::vector<EnablementBinding> bindings_;
    std::vector<Omission> omissions_;
    std::vector<std::string> widget_of_;
    std::vector<std::string> panel_of_;
    std::vector<std::string> names_;
    std::map<std::string, const WidgetNode*, std::less<>> by_ref_;

    void index();
};

WidgetTree transform(const FeatureDiagram& diagram, TransformOptions options = {});

/// Two-space indented JSON with sorted keys.
std::string serialize(const WidgetTree& tree);

/// Widget ref -> enabled. A checkbox is enabled iff its feature would still
/// accept a user decision (it is open once the user's own decision on it is
/// set aside). Containers are enabled iff some interactive descendant is;
/// titles and labels never are. Throws ConfigError on a diagram mismatch.
std::map<std::string, bool> compute_enablement(const WidgetTree& tree, const Configuration& config);

struct Notification {
    FeatureId trigger;
    Decision value;
    std::string panel;  ///< panel holding the affected widgets
    std::vector<std::pair<FeatureId, FeatureState>> affected;
    bool cross_panel = true;
};

/// Consequences the enable/disable display cannot show in place: changes to
/// features whose widgets sit neither in the trigger's own panel nor inside
/// the panel the trigger governs. One notification per such panel.
std::vector<Notification> derive_notifications(const WidgetTree& tree, const ConsequenceReport& report,
                                               FeatureId trigger, Decision value);

}  // namespace fmgen
