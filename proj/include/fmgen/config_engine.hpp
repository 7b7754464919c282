#pragma once

// Interactive specialization of a feature diagram.
//
// A Configuration is a value: the ordered user decisions plus the derived
// tri-state of every feature. The derived state is always recomputed from
// the decisions as the least fixpoint of these rules:
//
//   P1  deselected feature          => descendants deselected
//   P2  selected feature            => parent selected
//   P3  selected feature            => mandatory And-members selected
//   P4  alternative, parent selected: one member selected => others deselected;
//                                     all but one deselected => last selected
//   P5  or-group, parent selected:    all but one deselected => last selected
//   P6  requires(a, b):  a selected => b selected; b deselected => a deselected
//   P7  excludes(a, b):  a selected => b deselected (both directions)
//
// A decision is rejected when the fixpoint clashes or when no complete valid
// configuration extends the result, so every accepted state can still be
// completed.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fmgen/feature_model.hpp"

namespace fmgen {

/// The 1 and 0 of a specialization.
enum class Decision : std::uint8_t { Deselected = 0, Selected = 1 };

constexpr FeatureState to_state(Decision d) noexcept {
    return d == Decision::Selected ? FeatureState::Selected : FeatureState::Deselected;
}
constexpr Decision opposite(Decision d) noexcept {
    return d == Decision::Selected ? Decision::Deselected : Decision::Selected;
}
std::string_view to_string(Decision d);

enum class Rule {
    Root,
    UserDecision,
    ParentDeselected,      // P1
    ChildSelected,         // P2
    MandatoryChild,        // P3
    AlternativeExclusion,  // P4, one selected
    AlternativeLast,       // P4, last remaining
    OrLast,                // P5
    Requires,              // P6
    Excludes,              // P7
    NoValidCompletion,     // feasibility guard
};

std::string_view to_string(Rule rule);

struct Literal {
    FeatureId feature = kNoFeature;
    FeatureState state = FeatureState::Undecided;

    friend bool operator==(const Literal&, const Literal&) = default;
};

/// One implication step: `premises` hold, so `rule` yields `conclusion`.
/// NoValidCompletion links have no conclusion (feature == kNoFeature).
struct ReasonLink {
    Rule rule = Rule::Root;
    std::vector<Literal> premises;
    Literal conclusion;
};

/// A rejected decision. The chain is ordered so that every premise is the
/// conclusion of an earlier link; it ends either with a link concluding the
/// opposite of an earlier conclusion or with a NoValidCompletion link.
struct Conflict {
    FeatureId feature = kNoFeature;
    Decision value = Decision::Selected;
    std::vector<ReasonLink> reasons;
};

struct Change {
    FeatureId feature;
    FeatureState before;
    FeatureState after;

    friend bool operator==(const Change&, const Change&) = default;
};

struct ConsequenceReport {
    std::vector<Change> changed;  ///< document order
    std::vector<Conflict> conflicts;
};

class Configuration {
public:
    using DecisionList = std::vector<std::pair<FeatureId, Decision>>;

    const FeatureDiagram& diagram() const noexcept { return *diagram_; }
    const std::shared_ptr<const FeatureDiagram>& diagram_ptr() const noexcept { return diagram_; }

    std::span<const FeatureState> states() const noexcept { return states_; }
    FeatureState state(FeatureId id) const { return states_.at(id); }

    /// Application order; at most one entry per feature.
    const DecisionList& decisions() const noexcept { return decisions_; }
    std::optional<Decision> decision_on(FeatureId id) const;

    /// Same diagram, same decision set (order ignored) and same states.
    friend bool operator==(const Configuration& a, const Configuration& b);

private:
    friend struct ConfigAccess;
    Configuration(std::shared_ptr<const FeatureDiagram> d, DecisionList decisions, std::vector<FeatureState> states)
        : diagram_(std::move(d)), decisions_(std::move(decisions)), states_(std::move(states)) {}

    std::shared_ptr<const FeatureDiagram> diagram_;
    DecisionList decisions_;
    std::vector<FeatureState> states_;
};

struct Applied {
    Configuration config;
    ConsequenceReport report;
};

using ApplyResult = std::variant<Applied, Conflict>;

Configuration init_config(std::shared_ptr<const FeatureDiagram> diagram);

/// Recomputes a configuration from scratch; the decisions are applied in the
/// given order. Duplicate features keep their last decision.
std::variant<Configuration, Conflict> configure(std::shared_ptr<const FeatureDiagram> diagram,
                                                const Configuration::DecisionList& decisions);

ApplyResult apply_decision(const Configuration& config, FeatureId feature, Decision value);
ApplyResult apply_decision(const Configuration& config, std::string_view feature, Decision value);

/// Throws ConfigError when `feature` has no user decision.
Configuration retract_decision(const Configuration& config, FeatureId feature);
Configuration retract_decision(const Configuration& config, std::string_view feature);

/// Takes a raw 0/1 assignment as-is, bypassing propagation, so that external
/// specifications can be checked with status(). Every feature becomes a
/// user decision.
Configuration unchecked_assignment(std::shared_ptr<const FeatureDiagram> diagram, std::span<const Decision> values);

enum class ObligationKind {
    UndecidedFeature,
    OrUnresolved,           // parent selected, no member selected yet
    OrViolated,             // parent selected, every member deselected
    AlternativeUnresolved,  // parent selected, none selected yet
    AlternativeViolated,    // parent selected, zero or several selected and nothing left open
    MandatoryMissing,
    ParentNotSelected,
    RootNotSelected,
    ConstraintViolated,
};

std::string_view to_string(ObligationKind kind);

struct Obligation {
    ObligationKind kind;
    FeatureId feature;  ///< group parent for group obligations
    std::size_t group = 0;
    std::string message;
};

struct Status {
    bool complete = false;
    std::vector<Obligation> obligations;
};

Status status(const Configuration& config);

class IncompleteConfiguration : public Error {
public:
    explicit IncompleteConfiguration(std::vector<Obligation> obligations);
    const std::vector<Obligation>& obligations() const noexcept { return obligations_; }

private:
    std::vector<Obligation> obligations_;
};

enum class FinalizePolicy { Strict, DefaultOff };

/// Strict: returns the configuration unchanged if complete. DefaultOff:
/// deselects every open optional feature and or-member (document order)
/// wherever that is accepted. Throws IncompleteConfiguration otherwise.
Configuration finalize(const Configuration& config, FinalizePolicy policy);

/// Human-readable rendering of a conflict for CLI and service payloads.
std::vector<std::string> describe(const FeatureDiagram& diagram, const Conflict& conflict);
std::string describe(const FeatureDiagram& diagram, const ReasonLink& link);

/// `.dec` files: one `select <Name>` / `deselect <Name>` per line, `#` comments.
std::vector<std::pair<std::string, Decision>> parse_decisions(std::string_view text);

}  // namespace fmgen
