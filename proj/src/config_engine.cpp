#include "fmgen/config_engine.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "fmgen/text.hpp"

namespace fmgen {

struct ConfigAccess {
    static Configuration make(std::shared_ptr<const FeatureDiagram> d, Configuration::DecisionList decisions,
                              std::vector<FeatureState> states) {
        return Configuration(std::move(d), std::move(decisions), std::move(states));
    }
};

std::string_view to_string(Decision d) { return d == Decision::Selected ? "1" : "0"; }

std::string_view to_string(ObligationKind kind) {
    switch (kind) {
    case ObligationKind::UndecidedFeature: return "undecided-feature";
    case ObligationKind::OrUnresolved: return "or-unresolved";
    case ObligationKind::OrViolated: return "or-violated";
    case ObligationKind::AlternativeUnresolved: return "alternative-unresolved";
    case ObligationKind::AlternativeViolated: return "alternative-violated";
    case ObligationKind::MandatoryMissing: return "mandatory-missing";
    case ObligationKind::ParentNotSelected: return "parent-not-selected";
    case ObligationKind::RootNotSelected: return "root-not-selected";
    case ObligationKind::ConstraintViolated: return "constraint-violated";
    }
    return "?";
}

std::string_view to_string(Rule rule) {
    switch (rule) {
    case Rule::Root: return "root";
    case Rule::UserDecision: return "decision";
    case Rule::ParentDeselected: return "parent-deselected";
    case Rule::ChildSelected: return "child-selected";
    case Rule::MandatoryChild: return "mandatory";
    case Rule::AlternativeExclusion: return "alternative-exclusion";
    case Rule::AlternativeLast: return "alternative-last";
    case Rule::OrLast: return "or-last";
    case Rule::Requires: return "requires";
    case Rule::Excludes: return "excludes";
    case Rule::NoValidCompletion: return "no-valid-completion";
    }
    return "?";
}

std::optional<Decision> Configuration::decision_on(FeatureId id) const {
    for (const auto& [f, v] : decisions_)
        if (f == id) return v;
    return std::nullopt;
}

bool operator==(const Configuration& a, const Configuration& b) {
    if (a.diagram_ != b.diagram_ || a.states_ != b.states_) return false;
    auto da = a.decisions_;
    auto db = b.decisions_;
    std::sort(da.begin(), da.end());
    std::sort(db.begin(), db.end());
    return da == db;
}

namespace {

class Propagator {
public:
    explicit Propagator(const FeatureDiagram& d)
        : d_(d), state_(d.size(), FeatureState::Undecided), reason_(d.size(), -1), requires_of_(d.size()),
          required_by_(d.size()), excludes_(d.size()) {
        for (const auto& c : d.resolved_constraints()) {
            if (c.kind == ConstraintKind::Requires) {
                requires_of_[c.from].push_back(c.to);
                required_by_[c.to].push_back(c.from);
            } else {
                excludes_[c.from].push_back(c.to);
                excludes_[c.to].push_back(c.from);
            }
        }
    }

    bool start() { return assign({d_.root(), FeatureState::Selected}, Rule::Root, {}) && run(); }

    bool decide(FeatureId f, Decision v) {
        return assign({f, to_state(v)}, Rule::UserDecision, {}) && run();
    }

    const std::vector<FeatureState>& states() const { return state_; }

    /// Antecedent cone of both sides of the clash, in derivation order, with
    /// the clashing link last.
    std::vector<ReasonLink> explain() const {
        std::vector<bool> seen(links_.size(), false);
        std::vector<int> stack;
        auto push_feature = [&](FeatureId f) {
            int r = reason_[f];
            if (r >= 0 && !seen[static_cast<std::size_t>(r)]) {
                seen[static_cast<std::size_t>(r)] = true;
                stack.push_back(r);
            }
        };
        for (const auto& p : clash_.premises) push_feature(p.feature);
        push_feature(clash_.conclusion.feature);
        while (!stack.empty()) {
            int r = stack.back();
            stack.pop_back();
            for (const auto& p : links_[static_cast<std::size_t>(r)].premises) push_feature(p.feature);
        }
        std::vector<ReasonLink> chain;
        for (std::size_t i = 0; i < links_.size(); ++i)
            if (seen[i]) chain.push_back(links_[i]);
        chain.push_back(clash_);
        return chain;
    }

private:
    bool assign(Literal lit, Rule rule, std::vector<Literal> premises) {
        auto& s = state_[lit.feature];
        if (s == lit.state) return true;
        if (s != FeatureState::Undecided) {
            clash_ = ReasonLink{rule, std::move(premises), lit};
            return false;
        }
        s = lit.state;
        reason_[lit.feature] = static_cast<int>(links_.size());
        links_.push_back(ReasonLink{rule, std::move(premises), lit});
        queue_.push_back(lit.feature);
        return true;
    }

    bool run() {
        while (!queue_.empty()) {
            FeatureId f = queue_.front();
            queue_.pop_front();
            if (!(state_[f] == FeatureState::Selected ? on_selected(f) : on_deselected(f))) {
                queue_.clear();
                return false;
            }
        }
        return true;
    }

    bool on_selected(FeatureId f) {
        const Feature& feat = d_.feature(f);
        const Literal self{f, FeatureState::Selected};
        if (feat.parent != kNoFeature && !assign({feat.parent, FeatureState::Selected}, Rule::ChildSelected, {self}))
            return false;
        for (std::size_t gi = 0; gi < feat.groups.size(); ++gi) {
            const Group& g = feat.groups[gi];
            if (g.kind == GroupKind::And) {
                for (FeatureId m : g.members)
                    if (d_.feature(m).presence == Presence::Mandatory &&
                        !assign({m, FeatureState::Selected}, Rule::MandatoryChild, {self}))
                        return false;
            } else if (!check_last(f, g)) {
                return false;
            }
        }
        if (const Group* g = d_.parent_group(f); g && g->kind == GroupKind::Alternative) {
            for (FeatureId s : g->members)
                if (s != f && !assign({s, FeatureState::Deselected}, Rule::AlternativeExclusion, {self}))
                    return false;
        }
        for (FeatureId b : requires_of_[f])
            if (!assign({b, FeatureState::Selected}, Rule::Requires, {self})) return false;
        for (FeatureId b : excludes_[f])
            if (!assign({b, FeatureState::Deselected}, Rule::Excludes, {self})) return false;
        return true;
    }

    bool on_deselected(FeatureId f) {
        const Feature& feat = d_.feature(f);
        const Literal self{f, FeatureState::Deselected};
        for (const auto& g : feat.groups)
            for (FeatureId m : g.members)
                if (!assign({m, FeatureState::Deselected}, Rule::ParentDeselected, {self})) return false;
        for (FeatureId a : required_by_[f])
            if (!assign({a, FeatureState::Deselected}, Rule::Requires, {self})) return false;
        if (const Group* g = d_.parent_group(f); g && g->kind != GroupKind::And) return check_last(feat.parent, *g);
        return true;
    }

    // P4/P5 unit rule: with the parent selected and all members but one
    // deselected, the remaining member is forced on. When every member is
    // already deselected the forced member clashes.
    bool check_last(FeatureId parent, const Group& g) {
        if (state_[parent] != FeatureState::Selected || g.members.empty()) return true;
        FeatureId open = kNoFeature;
        std::size_t off = 0;
        for (FeatureId m : g.members) {
            if (state_[m] == FeatureState::Deselected)
                ++off;
            else
                open = m;
        }
        if (off + 1 < g.members.size()) return true;
        FeatureId target = open != kNoFeature ? open : g.members.back();
        std::vector<Literal> premises{{parent, FeatureState::Selected}};
        for (FeatureId m : g.members)
            if (m != target) premises.push_back({m, FeatureState::Deselected});
        const Rule rule = g.kind == GroupKind::Or ? Rule::OrLast : Rule::AlternativeLast;
        return assign({target, FeatureState::Selected}, rule, std::move(premises));
    }

    const FeatureDiagram& d_;
    std::vector<FeatureState> state_;
    std::vector<int> reason_;
    std::vector<ReasonLink> links_;
    std::deque<FeatureId> queue_;
    ReasonLink clash_;
    std::vector<std::vector<FeatureId>> requires_of_;
    std::vector<std::vector<FeatureId>> required_by_;
    std::vector<std::vector<FeatureId>> excludes_;
};

Configuration::DecisionList dedupe(const Configuration::DecisionList& decisions) {
    Configuration::DecisionList out;
    for (const auto& [f, v] : decisions) {
        std::erase_if(out, [f = f](const auto& e) { return e.first == f; });
        out.emplace_back(f, v);
    }
    return out;
}

Conflict infeasible(const FeatureDiagram& d, const Configuration::DecisionList& decisions) {
    Conflict c;
    c.feature = decisions.back().first;
    c.value = decisions.back().second;
    c.reasons.push_back({Rule::Root, {}, {d.root(), FeatureState::Selected}});
    std::vector<Literal> premises;
    for (const auto& [f, v] : decisions) {
        c.reasons.push_back({Rule::UserDecision, {}, {f, to_state(v)}});
        premises.push_back({f, to_state(v)});
    }
    c.reasons.push_back({Rule::NoValidCompletion, std::move(premises), {kNoFeature, FeatureState::Undecided}});
    return c;
}

}  // namespace

std::variant<Configuration, Conflict> configure(std::shared_ptr<const FeatureDiagram> diagram,
                                                const Configuration::DecisionList& decisions) {
    const FeatureDiagram& d = *diagram;
    d.require_well_formed();
    auto list = dedupe(decisions);
    for (const auto& [f, v] : list)
        if (f >= d.size()) throw ConfigError("unknown feature id " + std::to_string(f));

    Propagator p(d);
    if (!p.start()) {
        Conflict c;
        c.feature = d.root();
        c.reasons = p.explain();
        return c;
    }
    for (const auto& [f, v] : list) {
        if (!p.decide(f, v)) {
            Conflict c;
            c.feature = f;
            c.value = v;
            c.reasons = p.explain();
            return c;
        }
    }
    if (count_completions(d, p.states()).is_zero()) {
        if (list.empty()) {
            Conflict c;
            c.feature = d.root();
            c.reasons.push_back({Rule::Root, {}, {d.root(), FeatureState::Selected}});
            c.reasons.push_back({Rule::NoValidCompletion, {}, {kNoFeature, FeatureState::Undecided}});
            return c;
        }
        return infeasible(d, list);
    }
    return ConfigAccess::make(std::move(diagram), std::move(list), p.states());
}

Configuration init_config(std::shared_ptr<const FeatureDiagram> diagram) {
    auto result = configure(std::move(diagram), {});
    if (auto* c = std::get_if<Configuration>(&result)) return std::move(*c);
    throw ConfigError("feature diagram admits no valid configuration");
}

ApplyResult apply_decision(const Configuration& config, FeatureId feature, Decision value) {
    const FeatureDiagram& d = config.diagram();
    if (feature >= d.size()) throw ConfigError("unknown feature id " + std::to_string(feature));
    if (config.decision_on(feature) == value) return Applied{config, {}};

    auto decisions = config.decisions();
    std::erase_if(decisions, [&](const auto& e) { return e.first == feature; });
    decisions.emplace_back(feature, value);

    auto result = configure(config.diagram_ptr(), decisions);
    if (auto* conflict = std::get_if<Conflict>(&result)) return std::move(*conflict);

    Applied applied{std::move(std::get<Configuration>(result)), {}};
    for (FeatureId id = 0; id < d.size(); ++id) {
        auto before = config.state(id);
        auto after = applied.config.state(id);
        if (before != after) applied.report.changed.push_back({id, before, after});
    }
    return applied;
}

ApplyResult apply_decision(const Configuration& config, std::string_view feature, Decision value) {
    return apply_decision(config, config.diagram().require(feature), value);
}

Configuration retract_decision(const Configuration& config, FeatureId feature) {
    if (!config.decision_on(feature)) {
        const auto& name = feature < config.diagram().size() ? config.diagram().name_of(feature) : std::string("?");
        throw ConfigError("no user decision on feature '" + name + "' to retract");
    }
    auto decisions = config.decisions();
    std::erase_if(decisions, [&](const auto& e) { return e.first == feature; });
    auto result = configure(config.diagram_ptr(), decisions);
    if (auto* c = std::get_if<Configuration>(&result)) return std::move(*c);
    // A subset of an accepted decision set is always accepted.
    throw std::logic_error("retraction produced a conflict");
}

Configuration retract_decision(const Configuration& config, std::string_view feature) {
    return retract_decision(config, config.diagram().require(feature));
}

Configuration unchecked_assignment(std::shared_ptr<const FeatureDiagram> diagram, std::span<const Decision> values) {
    if (values.size() != diagram->size()) throw ConfigError("assignment does not cover the diagram");
    Configuration::DecisionList decisions;
    std::vector<FeatureState> states;
    for (FeatureId id = 0; id < values.size(); ++id) {
        decisions.emplace_back(id, values[id]);
        states.push_back(to_state(values[id]));
    }
    return ConfigAccess::make(std::move(diagram), std::move(decisions), std::move(states));
}

// ---------------------------------------------------------------------------
// Status

namespace {

std::string member_list(const FeatureDiagram& d, const Group& g) {
    std::string out;
    for (FeatureId m : g.members) {
        if (!out.empty()) out += ", ";
        out += d.name_of(m);
    }
    return out;
}

}  // namespace

Status status(const Configuration& config) {
    const FeatureDiagram& d = config.diagram();
    const auto s = config.states();
    Status st;
    auto add = [&](ObligationKind kind, FeatureId f, std::size_t group, std::string msg) {
        st.obligations.push_back({kind, f, group, std::move(msg)});
    };

    if (s[d.root()] != FeatureState::Selected)
        add(ObligationKind::RootNotSelected, d.root(), 0, "root feature " + d.name() + " must be selected");

    // Groups whose open members are already covered by a group obligation.
    std::vector<bool> covered(d.size(), false);

    for (FeatureId id = 0; id < d.size(); ++id) {
        const Feature& f = d.feature(id);
        if (s[id] == FeatureState::Selected && f.parent != kNoFeature && s[f.parent] != FeatureState::Selected)
            add(ObligationKind::ParentNotSelected, id, 0,
                f.name + " is selected but its parent " + d.name_of(f.parent) + " is not");
        if (s[id] != FeatureState::Selected) continue;

        for (std::size_t gi = 0; gi < f.groups.size(); ++gi) {
            const Group& g = f.groups[gi];
            std::size_t on = 0, open = 0;
            for (FeatureId m : g.members) {
                if (s[m] == FeatureState::Selected) ++on;
                if (s[m] == FeatureState::Undecided) ++open;
            }
            auto cover = [&] {
                for (FeatureId m : g.members) covered[m] = true;
            };
            switch (g.kind) {
            case GroupKind::And:
                for (FeatureId m : g.members)
                    if (d.feature(m).presence == Presence::Mandatory && s[m] == FeatureState::Deselected)
                        add(ObligationKind::MandatoryMissing, m, 0,
                            "mandatory feature " + d.name_of(m) + " of " + f.name + " is deselected");
                break;
            case GroupKind::Or:
                if (on == 0 && open > 0) {
                    add(ObligationKind::OrUnresolved, id, gi,
                        "or-group of " + f.name + ": select at least one of " + member_list(d, g));
                    cover();
                } else if (on == 0) {
                    add(ObligationKind::OrViolated, id, gi,
                        "or-group of " + f.name + ": every member is deselected (" + member_list(d, g) + ")");
                }
                break;
            case GroupKind::Alternative:
                if (on == 0 && open > 0) {
                    add(ObligationKind::AlternativeUnresolved, id, gi,
                        "alternative group of " + f.name + ": select exactly one of " + member_list(d, g));
                    cover();
                } else if (on != 1) {
                    add(ObligationKind::AlternativeViolated, id, gi,
                        "alternative group of " + f.name + ": " + std::to_string(on) + " of " + member_list(d, g) +
                            " selected, exactly one required");
                }
                break;
            }
        }
    }

    for (FeatureId id = 0; id < d.size(); ++id) {
        const Feature& f = d.feature(id);
        if (s[id] != FeatureState::Undecided || covered[id]) continue;
        if (f.parent != kNoFeature && s[f.parent] == FeatureState::Undecided) continue;
        add(ObligationKind::UndecidedFeature, id, 0, f.name + " is undecided");
    }

    for (const auto& c : d.resolved_constraints()) {
        const bool a = s[c.from] == FeatureState::Selected;
        const bool b = s[c.to] == FeatureState::Selected;
        if (c.kind == ConstraintKind::Requires && a && s[c.to] == FeatureState::Deselected)
            add(ObligationKind::ConstraintViolated, c.from, 0,
                d.name_of(c.from) + " requires " + d.name_of(c.to) + ", which is deselected");
        if (c.kind == ConstraintKind::Excludes && a && b)
            add(ObligationKind::ConstraintViolated, c.from, 0,
                d.name_of(c.from) + " excludes " + d.name_of(c.to) + ", but both are selected");
    }

    st.complete = st.obligations.empty();
    return st;
}

namespace {

std::string summarize(const std::vector<Obligation>& obligations) {
    std::string out = "configuration is incomplete";
    for (const auto& o : obligations) out += "\n  " + o.message;
    return out;
}

}  // namespace

IncompleteConfiguration::IncompleteConfiguration(std::vector<Obligation> obligations)
    : Error(summarize(obligations)), obligations_(std::move(obligations)) {}

Configuration finalize(const Configuration& config, FinalizePolicy policy) {
    Configuration current = config;
    if (policy == FinalizePolicy::DefaultOff) {
        const FeatureDiagram& d = config.diagram();
        for (FeatureId id = 0; id < d.size(); ++id) {
            if (current.state(id) != FeatureState::Undecided) continue;
            const Feature& f = d.feature(id);
            const Group* g = d.parent_group(id);
            const bool defaultable = f.presence == Presence::Optional || (g && g->kind == GroupKind::Or);
            if (!defaultable) continue;
            auto result = apply_decision(current, id, Decision::Deselected);
            if (auto* applied = std::get_if<Applied>(&result)) current = std::move(applied->config);
        }
    }
    auto st = status(current);
    if (!st.complete) throw IncompleteConfiguration(std::move(st.obligations));
    return current;
}

// ---------------------------------------------------------------------------
// Rendering and decision files

std::string describe(const FeatureDiagram& d, const ReasonLink& link) {
    auto lit = [&](const Literal& l) {
        return d.name_of(l.feature) + "=" + (l.state == FeatureState::Selected ? "1" : "0");
    };
    std::string out;
    if (link.conclusion.feature != kNoFeature)
        out = lit(link.conclusion);
    else
        out = "no valid completion";
    out += " by " + std::string(to_string(link.rule));
    if (!link.premises.empty()) {
        out += " from ";
        for (std::size_t i = 0; i < link.premises.size(); ++i) {
            if (i) out += ", ";
            out += lit(link.premises[i]);
        }
    }
    return out;
}

std::vector<std::string> describe(const FeatureDiagram& d, const Conflict& conflict) {
    std::vector<std::string> out;
    out.reserve(conflict.reasons.size());
    for (const auto& link : conflict.reasons) out.push_back(describe(d, link));
    return out;
}

std::vector<std::pair<std::string, Decision>> parse_decisions(std::string_view text) {
    std::vector<std::pair<std::string, Decision>> out;
    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::istringstream in{std::string(line)};
        std::string verb, name, extra;
        in >> verb >> name >> extra;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (verb != "select" && verb != "deselect")
            throw ConfigError(where + "expected 'select' or 'deselect', got '" + verb + "'");
        if (!is_identifier(name)) throw ConfigError(where + "expected a feature name after '" + verb + "'");
        if (!extra.empty()) throw ConfigError(where + "unexpected '" + extra + "'");
        out.emplace_back(name, verb == "select" ? Decision::Selected : Decision::Deselected);
    }
    return out;
}

}  // namespace fmgen
