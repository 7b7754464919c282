#include <set>

#include "fmgen/generator.hpp"
#include "fmgen/text.hpp"

namespace fmgen {

namespace {

struct Token {
    enum Kind { Word, String, Punct } kind;
    std::string text;
};

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
    throw GeneratorError("rules line " + std::to_string(line) + ": " + msg);
}

std::string unquote(std::string_view s, std::size_t& i, std::size_t line) {
    std::string out;
    for (++i; i < s.size(); ++i) {
        char c = s[i];
        if (c == '"') {
            ++i;
            return out;
        }
        if (c == '\\' && i + 1 < s.size()) {
            c = s[++i];
            if (c == 'n')
                c = '\n';
            else if (c == 't')
                c = '\t';
            else if (c != '"' && c != '\\')
                fail(line, std::string("unknown escape \\") + c);
        }
        out += c;
    }
    fail(line, "unterminated string");
}

/// `punct` characters become single-character tokens; everything else that
/// is not whitespace or a quote is part of a word.
std::vector<Token> tokenize(std::string_view s, std::size_t line, std::string_view punct) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
        } else if (c == '"') {
            out.push_back({Token::String, unquote(s, i, line)});
        } else if (punct.find(c) != std::string_view::npos) {
            out.push_back({Token::Punct, std::string(1, c)});
            ++i;
        } else {
            std::size_t j = i;
            while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r' && s[j] != '"' &&
                   punct.find(s[j]) == std::string_view::npos)
                ++j;
            out.push_back({Token::Word, std::string(s.substr(i, j - i))});
            i = j;
        }
    }
    return out;
}

bool frame_segment(std::string_view seg, std::string* name = nullptr, std::optional<std::size_t>* index = nullptr) {
    auto open = seg.find('[');
    std::string_view base = seg.substr(0, open);
    if (!is_identifier(base)) return false;
    std::optional<std::size_t> idx;
    if (open != std::string_view::npos) {
        if (seg.back() != ']' || seg.size() < open + 3) return false;
        auto digits = seg.substr(open + 1, seg.size() - open - 2);
        if (digits.find_first_not_of("0123456789") != std::string_view::npos) return false;
        idx = std::stoul(std::string(digits));
    }
    if (name) *name = std::string(base);
    if (index) *index = idx;
    return true;
}

std::vector<std::string> split_path(std::string_view p) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto slash = p.find('/', start);
        out.emplace_back(p.substr(start, slash - start));
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
    return out;
}

void check_slot_path(const std::string& path, std::size_t line) {
    const auto segs = split_path(path);
    if (segs.size() % 2 == 0) fail(line, "slot path " + path + " must end in a slot name");
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const bool ok = i % 2 == 0 ? is_identifier(segs[i]) : frame_segment(segs[i]);
        if (!ok) fail(line, "bad segment '" + segs[i] + "' in slot path " + path);
    }
}

void check_output_path(const std::string& path, std::size_t line) {
    if (path.empty() || path.front() == '/' || path.find('\\') != std::string::npos)
        fail(line, "output path " + path + " must be relative");
    for (const auto& seg : split_path(path))
        if (seg.empty() || seg == "." || seg == "..") fail(line, "output path " + path + " has an empty, . or .. segment");
    for (const char* reserved : {kManifestFile, kSpecFile, kOverlayFile})
        if (path == reserved) fail(line, "output path " + path + " is reserved");
}

class ActionParser {
public:
    ActionParser(std::vector<Token> tokens, std::size_t line) : t_(std::move(tokens)), line_(line) {}

    FillAction parse() {
        FillAction a;
        a.line = line_;
        if (peek_word("when")) {
            ++i_;
            Guard g;
            g.feature = word("a feature name after 'when'");
            punct('=');
            const std::string v = word("0 or 1");
            if (v != "0" && v != "1") fail(line_, "guard value must be 0 or 1");
            g.value = v == "1" ? Decision::Selected : Decision::Deselected;
            punct(':');
            a.guard = std::move(g);
        }
        keyword("fill");
        a.slot_path = word("a slot path");
        check_slot_path(a.slot_path, line_);
        keyword("with");
        if (peek_word("text")) {
            ++i_;
            a.is_text = true;
            a.text = string("a quoted string after 'text'");
        } else {
            a.frame = word("a frame name");
            if (!is_identifier(a.frame)) fail(line_, "bad frame name " + a.frame);
            if (i_ < t_.size() && t_[i_].kind == Token::Punct && t_[i_].text == "(") {
                ++i_;
                while (!(i_ < t_.size() && t_[i_].kind == Token::Punct && t_[i_].text == ")")) {
                    if (!a.params.empty()) punct(',');
                    std::string name = word("a parameter name");
                    punct('=');
                    a.params.emplace_back(std::move(name), string("a quoted parameter value"));
                }
                ++i_;
            }
        }
        if (i_ != t_.size()) fail(line_, "unexpected '" + t_[i_].text + "'");
        return a;
    }

private:
    bool peek_word(std::string_view w) const { return i_ < t_.size() && t_[i_].kind == Token::Word && t_[i_].text == w; }

    std::string word(const std::string& what) {
        if (i_ >= t_.size() || t_[i_].kind != Token::Word) fail(line_, "expected " + what);
        return t_[i_++].text;
    }
    std::string string(const std::string& what) {
        if (i_ >= t_.size() || t_[i_].kind != Token::String) fail(line_, "expected " + what);
        return t_[i_++].text;
    }
    void keyword(std::string_view w) {
        if (!peek_word(w)) fail(line_, "expected '" + std::string(w) + "'");
        ++i_;
    }
    void punct(char c) {
        if (i_ >= t_.size() || t_[i_].kind != Token::Punct || t_[i_].text[0] != c)
            fail(line_, std::string("expected '") + c + "'");
        ++i_;
    }

    std::vector<Token> t_;
    std::size_t line_;
    std::size_t i_ = 0;
};

OutputRule parse_output(const std::vector<Token>& t, std::size_t line) {
    auto is = [&](std::size_t i, std::string_view w) { return i < t.size() && t[i].kind == Token::Word && t[i].text == w; };
    if (t.size() < 4 || !is(2, "root")) fail(line, "expected 'output <path> root <Frame> [markers <prefix> [<suffix>]]'");
    OutputRule r;
    r.line = line;
    r.path = t[1].text;
    r.root_frame = t[3].text;
    if (!is_identifier(r.root_frame)) fail(line, "bad frame name " + r.root_frame);
    if (t.size() > 4) {
        if (!is(4, "markers") || t.size() < 6 || t.size() > 7) fail(line, "expected 'markers <prefix> [<suffix>]'");
        r.markers.prefix = t[5].text;
        r.markers.suffix = t.size() == 7 ? t[6].text : "";
        if (trim(r.markers.prefix).empty()) fail(line, "marker prefix must not be blank");
    }
    check_output_path(r.path, line);
    return r;
}

std::string bare_or_quoted(std::string_view s) {
    const bool plain = !s.empty() && s.find_first_of(" \t\r\n\"\\") == std::string_view::npos;
    return plain ? std::string(s) : quote(s);
}

}  // namespace

RuleSet parse_rules(std::string_view text) {
    RuleSet rules;
    std::set<std::string> paths;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        const std::size_t no = i + 1;
        if (line.empty() || line.front() == '#') continue;
        if (starts_with(line, "output ") || line == "output") {
            auto r = parse_output(tokenize(line, no, ""), no);
            for (const auto& p : paths) {
                if (p == r.path) fail(no, "duplicate output path " + r.path);
                if (starts_with(r.path, p + "/") || starts_with(p, r.path + "/"))
                    fail(no, "output paths " + p + " and " + r.path + " overlap");
            }
            paths.insert(r.path);
            rules.outputs.push_back(std::move(r));
            continue;
        }
        if (rules.outputs.empty()) fail(no, "fill before any 'output' line");
        rules.outputs.back().actions.push_back(ActionParser(tokenize(line, no, "()=,:"), no).parse());
    }
    return rules;
}

std::string serialize_rules(const RuleSet& rules) {
    std::string out;
    for (const auto& r : rules.outputs) {
        if (!out.empty()) out += '\n';
        out += "output " + bare_or_quoted(r.path) + " root " + r.root_frame + " markers " +
               bare_or_quoted(r.markers.prefix);
        if (!r.markers.suffix.empty()) out += " " + bare_or_quoted(r.markers.suffix);
        out += '\n';
        for (const auto& a : r.actions) {
            out += "  ";
            if (a.guard)
                out += "when " + a.guard->feature + " = " + (a.guard->value == Decision::Selected ? "1" : "0") + " : ";
            out += "fill " + a.slot_path + " with ";
            if (a.is_text) {
                out += "text " + quote(a.text);
            } else {
                out += a.frame;
                if (!a.params.empty()) {
                    out += "(";
                    for (std::size_t i = 0; i < a.params.size(); ++i)
                        out += (i ? ", " : "") + a.params[i].first + "=" + quote(a.params[i].second);
                    out += ")";
                }
            }
            out += '\n';
        }
    }
    return out;
}

void bind(const RuleSet& rules, const FeatureDiagram& d, const FrameLibrary& lib) {
    for (const auto& r : rules.outputs) {
        const Frame* root = lib.find(r.root_frame);
        if (!root) fail(r.line, "unknown frame " + r.root_frame);
        for (const auto& a : r.actions) {
            if (a.guard && !d.find(a.guard->feature)) fail(a.line, "unknown feature " + a.guard->feature);
            const auto segs = split_path(a.slot_path);
            const Frame* cur = root;
            for (std::size_t i = 0; i < segs.size(); ++i) {
                if (i % 2 == 0) {
                    if (!cur->has_slot(segs[i])) fail(a.line, "frame " + cur->name + " has no slot " + segs[i]);
                } else {
                    std::string name;
                    frame_segment(segs[i], &name);
                    cur = lib.find(name);
                    if (!cur) fail(a.line, "unknown frame " + name);
                }
            }
            if (a.is_text) continue;
            const Frame* fill = lib.find(a.frame);
            if (!fill) fail(a.line, "unknown frame " + a.frame);
            std::set<std::string> seen;
            for (const auto& [param, value] : a.params) {
                if (!fill->has_slot(param)) fail(a.line, "frame " + a.frame + " has no slot " + param);
                if (!seen.insert(param).second) fail(a.line, "parameter " + param + " given twice");
            }
        }
    }
}

namespace detail {

/// Shared with the generator: the fill list an action's slot path names.
std::vector<SlotEntry>* resolve_slot_path(FrameInstance& root, const std::string& path, std::string& error) {
    const auto segs = split_path(path);
    FrameInstance* cur = &root;
    for (std::size_t i = 0; i + 1 < segs.size(); i += 2) {
        std::string name;
        std::optional<std::size_t> index;
        frame_segment(segs[i + 1], &name, &index);
        auto it = cur->fills.find(segs[i]);
        std::vector<FrameInstance*> matches;
        if (it != cur->fills.end())
            for (auto& e : it->second)
                if (!e.is_literal() && e.instance().frame == name) matches.push_back(&e.instance());
        if (matches.empty() || (index && *index >= matches.size())) {
            error = "no " + segs[i + 1] + " instance in slot " + segs[i];
            return nullptr;
        }
        cur = index ? matches[*index] : matches.back();
    }
    return &cur->fills[segs.back()];
}

}  // namespace detail

}  // namespace fmgen
