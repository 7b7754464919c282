#pragma once

// Feature diagrams: a concept tree of mandatory/optional features and
// or/alternative groups, plus requires/excludes cross-tree constraints.

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "fmgen/errors.hpp"

namespace fmgen {

/// Index of a feature inside its diagram. Ids follow document (pre-)order,
/// the root is always 0 and a feature's subtree is the contiguous id range
/// [id, subtree_end(id)).
using FeatureId = std::uint32_t;
inline constexpr FeatureId kNoFeature = ~FeatureId{0};

enum class Presence { Mandatory, Optional };
enum class GroupKind { And, Or, Alternative };
enum class ConstraintKind { Requires, Excludes };

/// Tri-state of a feature during specialization.
enum class FeatureState : std::uint8_t { Undecided, Selected, Deselected };

std::string_view to_string(GroupKind kind);
std::string_view to_string(ConstraintKind kind);
std::string_view to_string(FeatureState state);

struct Group {
    GroupKind kind = GroupKind::And;
    std::vector<FeatureId> members;
};

struct Annotation {
    std::string key;
    std::string text;
};

struct Feature {
    std::string name;
    /// Empty for the root and for members of Or/Alternative groups; the
    /// group kind governs those.
    std::optional<Presence> presence;
    FeatureId parent = kNoFeature;
    /// Index of the parent's group that holds this feature.
    std::size_t group_index = 0;
    std::vector<Group> groups;
    std::vector<Annotation> annotations;
    SourcePos pos;

    bool has_children() const;
};

struct CrossTreeConstraint {
    ConstraintKind kind = ConstraintKind::Requires;
    std::string from;
    std::string to;
    SourcePos pos;
};

struct ResolvedConstraint {
    ConstraintKind kind;
    FeatureId from;
    FeatureId to;
};

class DiagramBuilder;

/// Immutable after construction; share freely between threads.
class FeatureDiagram {
public:
    const std::string& name() const noexcept { return features_.front().name; }
    FeatureId root() const noexcept { return 0; }
    std::size_t size() const noexcept { return features_.size(); }

    const Feature& feature(FeatureId id) const { return features_.at(id); }
    std::span<const Feature> features() const noexcept { return features_; }
    const std::string& name_of(FeatureId id) const { return features_.at(id).name; }

    std::optional<FeatureId> find(std::string_view name) const;
    /// Like find() but throws ConfigError naming the feature.
    FeatureId require(std::string_view name) const;

    const std::vector<CrossTreeConstraint>& constraints() const noexcept { return constraints_; }
    /// Constraints whose endpoints both resolve and differ.
    const std::vector<ResolvedConstraint>& resolved_constraints() const noexcept { return resolved_; }

    FeatureId subtree_end(FeatureId id) const { return subtree_end_.at(id); }
    bool in_subtree(FeatureId id, FeatureId ancestor) const {
        return id >= ancestor && id < subtree_end_[ancestor];
    }
    /// The group holding `id`, or nullptr for the root.
    const Group* parent_group(FeatureId id) const;

    /// True when structural validation found no errors. Analyses and the
    /// configuration engine refuse diagrams that are not well formed.
    bool well_formed() const noexcept { return well_formed_; }
    void require_well_formed() const;

private:
    friend class DiagramBuilder;
    FeatureDiagram() = default;

    std::vector<Feature> features_;
    std::vector<FeatureId> subtree_end_;
    std::vector<CrossTreeConstraint> constraints_;
    std::vector<ResolvedConstraint> resolved_;
    std::unordered_map<std::string, FeatureId> index_;
    bool well_formed_ = false;
};

/// Lenient construction: only the tree shape is enforced here. Invariant
/// violations (duplicate names, group arity, dangling constraints) are kept
/// and surface through validate_model(); parse_model() rejects them.
class DiagramBuilder {
public:
    explicit DiagramBuilder(std::string root_name, SourcePos pos = {});

    /// Builder-local handle; ids are renumbered into document order by build().
    using Handle = std::size_t;
    Handle root() const noexcept { return 0; }

    /// Appends to the parent's trailing And group, opening one if needed.
    Handle add_feature(Handle parent, Presence presence, std::string name, SourcePos pos = {});
    /// Opens a new group on `parent` and returns its index.
    std::size_t add_group(Handle parent, GroupKind kind);
    Handle add_member(Handle parent, std::size_t group, std::string name, SourcePos pos = {});

    void annotate(Handle feature, std::string key, std::string text, SourcePos pos = {});
    void add_constraint(ConstraintKind kind, std::string from, std::string to, SourcePos pos = {});

    FeatureDiagram build() &&;

private:
    std::vector<Feature> nodes_;
    std::vector<CrossTreeConstraint> constraints_;
};

enum class Severity { Error, Warning };

enum class DiagnosticKind {
    DuplicateName,
    GroupArity,
    UnknownConstraintTarget,
    SelfConstraint,
    InvalidName,
    DeadFeature,
};

struct ModelDiagnostic {
    Severity severity = Severity::Error;
    DiagnosticKind kind = DiagnosticKind::DeadFeature;
    std::string message;
    std::string feature;
};

/// `severity: message (feature)`
std::string render(const ModelDiagnostic& diagnostic);

/// Parses the `.fm` block grammar. Throws ModelError on syntax errors and on
/// any structural invariant violation.
FeatureDiagram parse_model(std::string_view text);

/// Canonical `.fm` text; parse_model(to_source(d)) reproduces d.
std::string to_source(const FeatureDiagram& diagram);

/// Structural invariant checks only.
std::vector<ModelDiagnostic> structural_diagnostics(const FeatureDiagram& diagram);

/// Structural checks plus dead-feature detection. Empty iff the diagram is
/// well formed and every feature occurs in some valid configuration.
std::vector<ModelDiagnostic> validate_model(const FeatureDiagram& diagram);

/// Exact number of valid configurations, arbitrary precision.
class VariantCount {
public:
    using Integer = boost::multiprecision::cpp_int;

    VariantCount() = default;
    explicit VariantCount(Integer value) : value_(std::move(value)) {}

    const Integer& value() const noexcept { return value_; }
    std::string to_string() const { return value_.str(); }
    bool is_zero() const { return value_.is_zero(); }

    friend bool operator==(const VariantCount&, const VariantCount&) = default;
    friend auto operator<=>(const VariantCount& a, const VariantCount& b) {
        return a.value_ < b.value_ ? std::strong_ordering::less
             : a.value_ > b.value_ ? std::strong_ordering::greater
                                   : std::strong_ordering::equal;
    }

private:
    Integer value_;
};

VariantCount count_variants(const FeatureDiagram& diagram);

/// Number of valid configurations agreeing with every Selected/Deselected
/// entry of `assumed` (indexed by FeatureId; Undecided entries are free).
VariantCount count_completions(const FeatureDiagram& diagram, std::span<const FeatureState> assumed);

}  // namespace fmgen
