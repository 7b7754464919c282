#include "fmgen/feature_model.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "fmgen/text.hpp"

namespace fmgen {

std::string format_pos(const SourcePos& pos) {
    return std::to_string(pos.line) + ":" + std::to_string(pos.column);
}

std::string_view to_string(GroupKind kind) {
    switch (kind) {
    case GroupKind::And: return "and";
    case GroupKind::Or: return "or";
    case GroupKind::Alternative: return "alternative";
    }
    return "?";
}

std::string_view to_string(ConstraintKind kind) {
    return kind == ConstraintKind::Requires ? "requires" : "excludes";
}

std::string_view to_string(FeatureState state) {
    switch (state) {
    case FeatureState::Undecided: return "undecided";
    case FeatureState::Selected: return "selected";
    case FeatureState::Deselected: return "deselected";
    }
    return "?";
}

bool Feature::has_children() const {
    return std::any_of(groups.begin(), groups.end(), [](const Group& g) { return !g.members.empty(); });
}

// ---------------------------------------------------------------------------
// FeatureDiagram

std::optional<FeatureId> FeatureDiagram::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

FeatureId FeatureDiagram::require(std::string_view name) const {
    if (auto id = find(name)) return *id;
    throw ConfigError("unknown feature '" + std::string(name) + "'");
}

const Group* FeatureDiagram::parent_group(FeatureId id) const {
    const Feature& f = feature(id);
    if (f.parent == kNoFeature) return nullptr;
    return &features_[f.parent].groups[f.group_index];
}

void FeatureDiagram::require_well_formed() const {
    if (well_formed_) return;
    auto diagnostics = structural_diagnostics(*this);
    std::string message = "malformed feature diagram";
    if (!diagnostics.empty()) message += ": " + render(diagnostics.front());
    throw ModelError(ModelError::Kind::Malformed, message);
}

// ---------------------------------------------------------------------------
// DiagramBuilder

DiagramBuilder::DiagramBuilder(std::string root_name, SourcePos pos) {
    Feature root;
    root.name = std::move(root_name);
    root.pos = pos;
    nodes_.push_back(std::move(root));
}

DiagramBuilder::Handle DiagramBuilder::add_feature(Handle parent, Presence presence, std::string name,
                                                   SourcePos pos) {
    auto& groups = nodes_.at(parent).groups;
    if (groups.empty() || groups.back().kind != GroupKind::And) groups.push_back(Group{GroupKind::And, {}});
    Feature f;
    f.name = std::move(name);
    f.presence = presence;
    f.parent = static_cast<FeatureId>(parent);
    f.group_index = groups.size() - 1;
    f.pos = pos;
    Handle h = nodes_.size();
    groups.back().members.push_back(static_cast<FeatureId>(h));
    nodes_.push_back(std::move(f));
    return h;
}

std::size_t DiagramBuilder::add_group(Handle parent, GroupKind kind) {
    auto& groups = nodes_.at(parent).groups;
    groups.push_back(Group{kind, {}});
    return groups.size() - 1;
}

DiagramBuilder::Handle DiagramBuilder::add_member(Handle parent, std::size_t group, std::string name,
                                                  SourcePos pos) {
    auto& g = nodes_.at(parent).groups.at(group);
    if (g.kind == GroupKind::And) throw std::invalid_argument("add_member on an And group; use add_feature");
    Feature f;
    f.name = std::move(name);
    f.parent = static_cast<FeatureId>(parent);
    f.group_index = group;
    f.pos = pos;
    Handle h = nodes_.size();
    g.members.push_back(static_cast<FeatureId>(h));
    nodes_.push_back(std::move(f));
    return h;
}

void DiagramBuilder::annotate(Handle feature, std::string key, std::string text, SourcePos pos) {
    auto& f = nodes_.at(feature);
    for (const auto& a : f.annotations)
        if (a.key == key)
            throw ModelError(ModelError::Kind::Syntax,
                             "duplicate annotation '@" + key + "' on feature '" + f.name + "'", pos);
    f.annotations.push_back({std::move(key), std::move(text)});
}

void DiagramBuilder::add_constraint(ConstraintKind kind, std::string from, std::string to, SourcePos pos) {
    constraints_.push_back({kind, std::move(from), std::move(to), pos});
}

FeatureDiagram DiagramBuilder::build() && {
    // Renumber into document order: each feature, then its groups' members
    // (and their subtrees) in order.
    std::vector<FeatureId> new_id(nodes_.size(), kNoFeature);
    std::vector<Handle> order;
    order.reserve(nodes_.size());
    std::vector<Handle> stack{0};
    while (!stack.empty()) {
        Handle h = stack.back();
        stack.pop_back();
        new_id[h] = static_cast<FeatureId>(order.size());
        order.push_back(h);
        const auto& groups = nodes_[h].groups;
        for (auto g = groups.rbegin(); g != groups.rend(); ++g)
            for (auto m = g->members.rbegin(); m != g->members.rend(); ++m) stack.push_back(*m);
    }

    FeatureDiagram d;
    d.features_.reserve(order.size());
    for (Handle h : order) {
        Feature f = std::move(nodes_[h]);
        if (f.parent != kNoFeature) f.parent = new_id[f.parent];
        for (auto& g : f.groups)
            for (auto& m : g.members) m = new_id[m];
        d.features_.push_back(std::move(f));
    }

    const auto n = static_cast<FeatureId>(d.features_.size());
    d.subtree_end_.assign(n, 0);
    for (FeatureId id = n; id-- > 0;) {
        FeatureId end = id + 1;
        for (const auto& g : d.features_[id].groups)
            for (FeatureId m : g.members) end = std::max(end, d.subtree_end_[m]);
        d.subtree_end_[id] = end;
    }

    for (FeatureId id = 0; id < n; ++id) d.index_.emplace(d.features_[id].name, id);

    d.constraints_ = std::move(constraints_);
    for (const auto& c : d.constraints_) {
        auto from = d.find(c.from);
        auto to = d.find(c.to);
        if (from && to && *from != *to) d.resolved_.push_back({c.kind, *from, *to});
    }

    auto diagnostics = structural_diagnostics(d);
    d.well_formed_ = std::none_of(diagnostics.begin(), diagnostics.end(),
                                  [](const ModelDiagnostic& m) { return m.severity == Severity::Error; });
    return d;
}

// ---------------------------------------------------------------------------
// Diagnostics

std::string render(const ModelDiagnostic& diagnostic) {
    std::string out = diagnostic.severity == Severity::Error ? "error: " : "warning: ";
    out += diagnostic.message;
    if (!diagnostic.feature.empty()) out += " (" + diagnostic.feature + ")";
    return out;
}

std::vector<ModelDiagnostic> structural_diagnostics(const FeatureDiagram& d) {
    std::vector<ModelDiagnostic> out;
    std::unordered_set<std::string_view> seen, reported;
    for (const auto& f : d.features()) {
        if (!is_identifier(f.name)) {
            out.push_back({Severity::Error, DiagnosticKind::InvalidName, "invalid feature name", f.name});
        }
        if (!seen.insert(f.name).second && reported.insert(f.name).second) {
            out.push_back({Severity::Error, DiagnosticKind::DuplicateName, "duplicate feature name", f.name});
        }
        for (const auto& g : f.groups) {
            if (g.kind != GroupKind::And && g.members.size() < 2) {
                out.push_back({Severity::Error, DiagnosticKind::GroupArity,
                               std::string(to_string(g.kind)) + "-group has " + std::to_string(g.members.size()) +
                                   " member(s), at least 2 required",
                               f.name});
            }
        }
    }
    for (const auto& c : d.constraints()) {
        const std::string what = std::string(to_string(c.kind)) + " " + c.from + " " + c.to;
        for (const auto* end : {&c.from, &c.to}) {
            if (!d.find(*end)) {
                out.push_back({Severity::Error, DiagnosticKind::UnknownConstraintTarget,
                               "constraint '" + what + "' references an unknown feature", *end});
            }
        }
        if (c.from == c.to) {
            out.push_back({Severity::Error, DiagnosticKind::SelfConstraint,
                           "constraint '" + what + "' relates a feature to itself", c.from});
        }
    }
    return out;
}

std::vector<ModelDiagnostic> validate_model(const FeatureDiagram& d) {
    auto out = structural_diagnostics(d);
    if (!d.well_formed()) return out;

    std::vector<FeatureState> assumed(d.size(), FeatureState::Undecided);
    for (FeatureId id = 0; id < d.size(); ++id) {
        assumed[id] = FeatureState::Selected;
        if (count_completions(d, assumed).is_zero()) {
            out.push_back({Severity::Warning, DiagnosticKind::DeadFeature, "dead feature", d.name_of(id)});
        }
        assumed[id] = FeatureState::Undecided;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { Ident, LBrace, RBrace, Arrow, Annotation, String, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    SourcePos pos;
};

const std::unordered_set<std::string_view> kKeywords = {"feature",     "mandatory", "optional", "alternative",
                                                         "or",          "requires",  "excludes"};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        skip_space();
        Token t;
        t.pos = {line_, col_};
        if (at_end()) return t;
        char c = src_[i_];
        if (c == '{') {
            advance();
            t.kind = Tok::LBrace;
        } else if (c == '}') {
            advance();
            t.kind = Tok::RBrace;
        } else if (c == '-' && i_ + 1 < src_.size() && src_[i_ + 1] == '>') {
            advance();
            advance();
            t.kind = Tok::Arrow;
        } else if (c == '@') {
            advance();
            t.kind = Tok::Annotation;
            t.text = word();
            if (t.text.empty()) throw ModelError(ModelError::Kind::Syntax, "expected annotation key after '@'", t.pos);
        } else if (c == '"') {
            t.kind = Tok::String;
            t.text = string_literal(t.pos);
        } else if (std::isalpha(static_cast<unsigned char>(c))) {
            t.kind = Tok::Ident;
            t.text = word();
        } else {
            throw ModelError(ModelError::Kind::Syntax, std::string("unexpected character '") + c + "'", t.pos);
        }
        return t;
    }

private:
    bool at_end() const { return i_ >= src_.size(); }

    void advance() {
        if (src_[i_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++i_;
    }

    void skip_space() {
        while (!at_end()) {
            char c = src_[i_];
            if (c == '#') {
                while (!at_end() && src_[i_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    std::string word() {
        std::string out;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_')) {
            out += src_[i_];
            advance();
        }
        return out;
    }

    std::string string_literal(SourcePos start) {
        advance();  // opening quote
        std::string out;
        while (true) {
            if (at_end() || src_[i_] == '\n')
                throw ModelError(ModelError::Kind::Syntax, "unterminated string literal", start);
            char c = src_[i_];
            advance();
            if (c == '"') break;
            if (c == '\\') {
                if (at_end()) throw ModelError(ModelError::Kind::Syntax, "unterminated string literal", start);
                char e = src_[i_];
                advance();
                switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default:
                    throw ModelError(ModelError::Kind::Syntax, std::string("unknown escape '\\") + e + "'", start);
                }
            } else {
                out += c;
            }
        }
        return out;
    }

    std::string_view src_;
    std::size_t i_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) { tok_ = lex_.next(); }

    FeatureDiagram parse() {
        expect_keyword("feature");
        auto [name, pos] = expect_name();
        DiagramBuilder b(name, pos);
        annotations(b, b.root());
        block(b, b.root());
        while (tok_.kind != Tok::End) {
            if (is_keyword("requires")) {
                SourcePos at = tok_.pos;
                shift();
                auto from = expect_name().first;
                if (tok_.kind != Tok::Arrow) error("expected '->' in requires constraint");
                shift();
                auto to = expect_name().first;
                b.add_constraint(ConstraintKind::Requires, from, to, at);
            } else if (is_keyword("excludes")) {
                SourcePos at = tok_.pos;
                shift();
                auto from = expect_name().first;
                auto to = expect_name().first;
                b.add_constraint(ConstraintKind::Excludes, from, to, at);
            } else {
                error("expected 'requires' or 'excludes' constraint after the root feature block");
            }
        }
        return std::move(b).build();
    }

private:
    [[noreturn]] void error(const std::string& message) const {
        throw ModelError(ModelError::Kind::Syntax, message, tok_.pos);
    }

    void shift() { tok_ = lex_.next(); }

    bool is_keyword(std::string_view kw) const { return tok_.kind == Tok::Ident && tok_.text == kw; }

    void expect_keyword(std::string_view kw) {
        if (!is_keyword(kw)) error("expected '" + std::string(kw) + "'");
        shift();
    }

    std::pair<std::string, SourcePos> expect_name() {
        if (tok_.kind != Tok::Ident) error("expected a feature name");
        if (kKeywords.count(tok_.text)) error("'" + tok_.text + "' is a reserved word, not a feature name");
        auto out = std::make_pair(tok_.text, tok_.pos);
        shift();
        return out;
    }

    void annotations(DiagramBuilder& b, DiagramBuilder::Handle h) {
        while (tok_.kind == Tok::Annotation) {
            auto key = tok_.text;
            auto pos = tok_.pos;
            shift();
            if (tok_.kind != Tok::String) error("expected a quoted string after '@" + key + "'");
            b.annotate(h, key, tok_.text, pos);
            shift();
        }
    }

    void block(DiagramBuilder& b, DiagramBuilder::Handle parent) {
        if (tok_.kind != Tok::LBrace) error("expected '{'");
        shift();
        while (tok_.kind != Tok::RBrace) {
            if (tok_.kind == Tok::End) error("unexpected end of input, expected '}'");
            item(b, parent);
        }
        shift();
    }

    void item(DiagramBuilder& b, DiagramBuilder::Handle parent) {
        if (is_keyword("mandatory") || is_keyword("optional")) {
            auto presence = is_keyword("mandatory") ? Presence::Mandatory : Presence::Optional;
            shift();
            auto [name, pos] = expect_name();
            auto h = b.add_feature(parent, presence, name, pos);
            annotations(b, h);
            if (tok_.kind == Tok::LBrace) block(b, h);
        } else if (is_keyword("alternative") || is_keyword("or")) {
            auto kind = is_keyword("or") ? GroupKind::Or : GroupKind::Alternative;
            shift();
            if (tok_.kind != Tok::LBrace) error("expected '{' after group keyword");
            shift();
            auto g = b.add_group(parent, kind);
            while (tok_.kind != Tok::RBrace) {
                if (tok_.kind == Tok::End) error("unexpected end of input, expected '}'");
                if (is_keyword("mandatory") || is_keyword("optional"))
                    error("'" + tok_.text + "' markers are not allowed inside " + std::string(to_string(kind)) +
                          " groups");
                auto [name, pos] = expect_name();
                auto h = b.add_member(parent, g, name, pos);
                annotations(b, h);
                if (tok_.kind == Tok::LBrace) block(b, h);
            }
            shift();
        } else {
            error("expected 'mandatory', 'optional', 'alternative' or 'or'");
        }
    }

    Lexer lex_;
    Token tok_;
};

ModelError::Kind error_kind(DiagnosticKind k) {
    switch (k) {
    case DiagnosticKind::DuplicateName: return ModelError::Kind::DuplicateName;
    case DiagnosticKind::GroupArity: return ModelError::Kind::GroupArity;
    case DiagnosticKind::UnknownConstraintTarget: return ModelError::Kind::UnknownConstraintTarget;
    default: return ModelError::Kind::Malformed;
    }
}

SourcePos position_of(const FeatureDiagram& d, const ModelDiagnostic& m) {
    if (m.kind == DiagnosticKind::UnknownConstraintTarget || m.kind == DiagnosticKind::SelfConstraint) {
        for (const auto& c : d.constraints())
            if (c.from == m.feature || c.to == m.feature) return c.pos;
    }
    if (m.kind == DiagnosticKind::DuplicateName) {
        // Report the second declaration.
        bool first = true;
        for (const auto& f : d.features()) {
            if (f.name != m.feature) continue;
            if (!first) return f.pos;
            first = false;
        }
    }
    if (auto id = d.find(m.feature)) return d.feature(*id).pos;
    return {};
}

void write_annotations(std::string& out, const Feature& f) {
    for (const auto& a : f.annotations) out += " @" + a.key + " " + quote(a.text);
}

void write_block(std::string& out, const FeatureDiagram& d, const Feature& f, int depth);

void write_feature_tail(std::string& out, const FeatureDiagram& d, const Feature& f, int depth) {
    write_annotations(out, f);
    if (f.has_children()) {
        out += " {\n";
        write_block(out, d, f, depth + 1);
        out += std::string(static_cast<std::size_t>(depth) * 2, ' ') + "}";
    }
    out += "\n";
}

void write_block(std::string& out, const FeatureDiagram& d, const Feature& f, int depth) {
    const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
    for (const auto& g : f.groups) {
        if (g.kind == GroupKind::And) {
            for (FeatureId m : g.members) {
                const auto& child = d.feature(m);
                out += indent + (child.presence == Presence::Mandatory ? "mandatory " : "optional ") + child.name;
                write_feature_tail(out, d, child, depth);
            }
        } else {
            out += indent + std::string(to_string(g.kind)) + " {\n";
            for (FeatureId m : g.members) {
                const auto& child = d.feature(m);
                out += indent + "  " + child.name;
                write_feature_tail(out, d, child, depth + 1);
            }
            out += indent + "}\n";
        }
    }
}

}  // namespace

FeatureDiagram parse_model(std::string_view text) {
    FeatureDiagram d = Parser(text).parse();
    if (!d.well_formed()) {
        for (const auto& m : structural_diagnostics(d)) {
            if (m.severity != Severity::Error) continue;
            throw ModelError(error_kind(m.kind), m.message + " (" + m.feature + ")", position_of(d, m));
        }
    }
    return d;
}

std::string to_source(const FeatureDiagram& d) {
    std::string out = "feature " + d.name();
    const Feature& root = d.feature(d.root());
    write_annotations(out, root);
    out += " {\n";
    write_block(out, d, root, 1);
    out += "}\n";
    for (const auto& c : d.constraints()) {
        if (c.kind == ConstraintKind::Requires)
            out += "requires " + c.from + " -> " + c.to + "\n";
        else
            out += "excludes " + c.from + " " + c.to + "\n";
    }
    return out;
}

}  // namespace fmgen
