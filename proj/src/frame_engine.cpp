#include "fmgen/frame_engine.hpp"

#include <algorithm>
#include <optional>
#include <regex>
#include <set>

#include "fmgen/text.hpp"

namespace fmgen {

bool Frame::has_slot(std::string_view slot) const {
    return std::find(slots.begin(), slots.end(), slot) != slots.end();
}

void FrameLibrary::add(Frame frame) {
    const std::string where = "frame " + frame.name + ": ";
    if (!is_identifier(frame.name)) throw FrameError("invalid frame name '" + frame.name + "'");
    if (index_.count(frame.name)) throw FrameError("duplicate frame " + frame.name);

    std::vector<BodyPart> merged;
    for (auto& part : frame.body) {
        if (!part.is_slot && part.text.empty()) continue;
        if (!part.is_slot && !merged.empty() && !merged.back().is_slot)
            merged.back().text += part.text;
        else
            merged.push_back(std::move(part));
    }
    frame.body = std::move(merged);

    std::set<std::string> declared;
    for (const auto& s : frame.slots) {
        if (!is_identifier(s)) throw FrameError(where + "invalid slot name '" + s + "'");
        if (!declared.insert(s).second) throw FrameError(where + "duplicate slot " + s);
    }
    std::set<std::string> used;
    for (std::size_t i = 0; i < frame.body.size(); ++i) {
        const auto& part = frame.body[i];
        if (!part.is_slot) {
            if (i + 1 < frame.body.size() && part.text.back() == '<')
                throw FrameError(where + "text before a slot may not end in '<'");
            continue;
        }
        if (!declared.count(part.text)) throw FrameError(where + "slot " + part.text + " is not declared");
        if (!used.insert(part.text).second) throw FrameError(where + "slot " + part.text + " is used twice");
    }
    for (const auto& s : frame.slots)
        if (!used.count(s)) throw FrameError(where + "slot " + s + " is declared but never used");

    index_.emplace(frame.name, frames_.size());
    frames_.push_back(std::move(frame));
}

const Frame* FrameLibrary::find(std::string_view name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &frames_[it->second];
}

const Frame& FrameLibrary::require(std::string_view name) const {
    if (auto* f = find(name)) return *f;
    throw FrameError("unknown frame " + std::string(name));
}

std::vector<BodyPart> parse_body(std::string_view s) {
    std::vector<BodyPart> out;
    std::string text;
    std::size_t i = 0;
    while (i < s.size()) {
        if (s.compare(i, 4, "<<<<") == 0) {
            text += "<<";
            i += 4;
        } else if (s.compare(i, 2, "<<") == 0) {
            const auto close = s.find(">>", i + 2);
            const auto name = close == std::string_view::npos ? std::string_view{} : s.substr(i + 2, close - i - 2);
            if (!is_identifier(name))
                throw FrameError("invalid placeholder at offset " + std::to_string(i) + " (write <<<< for a literal <<)");
            if (!text.empty()) out.push_back({false, std::move(text)});
            text.clear();
            out.push_back({true, std::string(name)});
            i = close + 2;
        } else {
            text += s[i++];
        }
    }
    if (!text.empty()) out.push_back({false, std::move(text)});
    return out;
}

FrameLibrary parse_frames(std::string_view text) {
    static const std::regex header(R"(frame\s+(\S+)\s*\(([^)]*)\)\s*<<<(\S+))");
    FrameLibrary lib;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        if (line.empty() || line.front() == '#') continue;
        const std::string at = "line " + std::to_string(i + 1) + ": ";
        std::match_results<std::string_view::const_iterator> m;
        if (!std::regex_match(line.begin(), line.end(), m, header))
            throw FrameError(at + "expected 'frame Name (slots) <<<TAG'");
        Frame f;
        f.name = m[1].str();
        const std::string slot_list = m[2].str();
        if (!trim(slot_list).empty()) {
            std::size_t start = 0;
            while (true) {
                auto comma = slot_list.find(',', start);
                f.slots.emplace_back(trim(std::string_view(slot_list).substr(start, comma - start)));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
        }
        const std::string tag = m[3].str();
        std::string body;
        std::size_t j = i + 1;
        for (; j < lines.size() && lines[j] != tag; ++j) {
            if (j > i + 1) body += '\n';
            body += lines[j];
        }
        if (j == lines.size()) throw FrameError(at + "frame " + f.name + " is missing its closing " + tag);
        try {
            f.body = parse_body(body);
            lib.add(std::move(f));
        } catch (const FrameError& e) {
            throw FrameError(at + e.what());
        }
        i = j;
    }
    return lib;
}

std::string serialize_frames(const FrameLibrary& lib) {
    std::string out;
    for (const auto& f : lib.frames()) {
        std::string body;
        for (const auto& part : f.body) {
            if (part.is_slot) {
                body += "<<" + part.text + ">>";
                continue;
            }
            for (std::size_t i = 0; i < part.text.size(); ++i) {
                if (part.text.compare(i, 2, "<<") == 0) {
                    body += "<<<<";
                    ++i;
                } else {
                    body += part.text[i];
                }
            }
        }
        const auto lines = split_lines(body);
        std::string tag = "END";
        for (int n = 1; std::find(lines.begin(), lines.end(), tag) != lines.end(); ++n) tag = "END" + std::to_string(n);

        if (!out.empty()) out += '\n';
        out += "frame " + f.name + " (";
        for (std::size_t i = 0; i < f.slots.size(); ++i) out += (i ? ", " : "") + f.slots[i];
        out += ") <<<" + tag + "\n" + body + "\n" + tag + "\n";
    }
    return out;
}

SlotEntry SlotEntry::literal(std::string text) {
    SlotEntry e;
    e.text_ = std::move(text);
    return e;
}

SlotEntry SlotEntry::nested(FrameInstance instance) {
    SlotEntry e;
    e.nested_.push_back(std::move(instance));
    return e;
}

bool operator==(const SlotEntry& a, const SlotEntry& b) { return a.text_ == b.text_ && a.nested_ == b.nested_; }

namespace {

void check_instance(const FrameLibrary& lib, FrameInstance& inst, const std::string& path) {
    const Frame* frame = lib.find(inst.frame);
    if (!frame) throw FrameError(path + ": unknown frame " + inst.frame);
    for (auto it = inst.fills.begin(); it != inst.fills.end();) {
        if (!frame->has_slot(it->first))
            throw FrameError(path + ": frame " + inst.frame + " has no slot " + it->first);
        if (it->second.empty()) {
            it = inst.fills.erase(it);
            continue;
        }
        for (std::size_t i = 0; i < it->second.size(); ++i) {
            auto& e = it->second[i];
            if (!e.is_literal())
                check_instance(lib, e.instance(), path + "/" + it->first + "[" + std::to_string(i) + "]");
        }
        ++it;
    }
}

}  // namespace

FrameInstance instantiate(const FrameLibrary& lib, std::string_view frame, Fills fills) {
    FrameInstance inst{std::string(frame), std::move(fills)};
    check_instance(lib, inst, inst.frame);
    return inst;
}

FrameInstance instantiate_graph(const FrameLibrary& lib, const std::map<std::string, InstanceNode>& nodes,
                                std::string_view root) {
    std::set<std::string> visiting, done;
    auto build = [&](auto& self, const std::string& id) -> FrameInstance {
        auto it = nodes.find(id);
        if (it == nodes.end()) throw FrameError("unknown instance node " + id);
        if (visiting.count(id)) throw FrameError("cycle detected through instance node " + id);
        if (done.count(id)) throw FrameError("instance node " + id + " is used more than once");
        visiting.insert(id);
        FrameInstance inst{it->second.frame, {}};
        for (const auto& [slot, entries] : it->second.fills) {
            auto& list = inst.fills[slot];
            for (const auto& e : entries) {
                if (auto* text = std::get_if<std::string>(&e))
                    list.push_back(SlotEntry::literal(*text));
                else
                    list.push_back(SlotEntry::nested(self(self, std::get<NodeRef>(e).id)));
            }
        }
        visiting.erase(id);
        done.insert(id);
        return inst;
    };
    FrameInstance inst = build(build, std::string(root));
    check_instance(lib, inst, inst.frame);
    return inst;
}

namespace {

enum class MarkerKind { BeginFrame, EndFrame, BeginText, EndText };

constexpr std::string_view keyword(MarkerKind k) {
    switch (k) {
    case MarkerKind::BeginFrame: return "BEGIN-FRAME";
    case MarkerKind::EndFrame: return "END-FRAME";
    case MarkerKind::BeginText: return "BEGIN-TEXT";
    case MarkerKind::EndText: return "END-TEXT";
    }
    return "";
}

constexpr MarkerKind kAllKinds[] = {MarkerKind::BeginFrame, MarkerKind::EndFrame, MarkerKind::BeginText,
                                    MarkerKind::EndText};

struct Marker {
    MarkerKind kind;
    std::string path;
};

void check_markers(const MarkerConfig& m) {
    if (trim(m.prefix).empty() || m.prefix.find('\n') != std::string::npos)
        throw FrameError("marker prefix must be a non-empty single line");
    if (m.suffix.find('\n') != std::string::npos) throw FrameError("marker suffix must be a single line");
}

std::string marker_line(const MarkerConfig& m, MarkerKind kind, const std::string& path) {
    std::string s = m.prefix + " " + std::string(keyword(kind)) + " " + path;
    if (!m.suffix.empty()) s += " " + m.suffix;
    return s;
}

/// Kind of marker the line claims to be, whether or not it is well formed.
std::optional<MarkerKind> marker_like(const MarkerConfig& m, std::string_view line) {
    if (!starts_with(line, m.prefix) || line.size() <= m.prefix.size() || line[m.prefix.size()] != ' ') return {};
    line.remove_prefix(m.prefix.size() + 1);
    for (auto k : kAllKinds) {
        const auto kw = keyword(k);
        if (starts_with(line, kw) && (line.size() == kw.size() || line[kw.size()] == ' ')) return k;
    }
    return {};
}

std::optional<Marker> parse_marker(const MarkerConfig& m, std::string_view line) {
    auto kind = marker_like(m, line);
    if (!kind) return {};
    line.remove_prefix(m.prefix.size() + 1 + keyword(*kind).size());
    if (line.empty() || line.front() != ' ') return {};
    line.remove_prefix(1);
    if (!m.suffix.empty()) {
        const std::string tail = " " + m.suffix;
        if (line.size() < tail.size() || line.substr(line.size() - tail.size()) != tail) return {};
        line.remove_suffix(tail.size());
    }
    if (line.empty() || line.find(' ') != std::string_view::npos) return {};
    return Marker{*kind, std::string(line)};
}

std::string entry_path(const std::string& parent, const std::string& slot, std::size_t i) {
    return parent + "/" + slot + "[" + std::to_string(i) + "]";
}

std::size_t line_of(std::string_view text, std::size_t pos) {
    return 1 + std::count(text.begin(), text.begin() + std::min(pos, text.size()), '\n');
}

class Emitter {
public:
    Emitter(const FrameLibrary& lib, const MarkerConfig& m) : lib_(lib), m_(m) {}

    Expansion run(const FrameInstance& inst) {
        emit(inst, inst.frame);
        std::size_t start = 0, line = 1;
        for (auto l : split_lines(out_.text)) {
            if (!marker_starts_.count(start) && marker_like(m_, l))
                throw FrameError("expanded text line " + std::to_string(line) +
                                 " looks like a frame marker: " + std::string(l));
            start += l.size() + 1;
            ++line;
        }
        return std::move(out_);
    }

private:
    void line_start() {
        if (!out_.text.empty() && out_.text.back() != '\n') out_.text += '\n';
    }

    void marker(MarkerKind kind, const std::string& path) {
        line_start();
        marker_starts_.insert(out_.text.size());
        out_.text += marker_line(m_, kind, path) + "\n";
    }

    void emit(const FrameInstance& inst, const std::string& path) {
        const Frame& frame = lib_.require(inst.frame);
        marker(MarkerKind::BeginFrame, path);
        for (const auto& part : frame.body) {
            if (!part.is_slot) {
                out_.text += part.text;
                continue;
            }
            auto it = inst.fills.find(part.text);
            if (it == inst.fills.end()) continue;
            for (std::size_t i = 0; i < it->second.size(); ++i) {
                const auto& e = it->second[i];
                const std::string p = entry_path(path, part.text, i);
                if (e.is_literal()) {
                    marker(MarkerKind::BeginText, p);
                    out_.literals.push_back({p, out_.text.size(), e.text().size()});
                    out_.text += e.text() + "\n";
                    marker(MarkerKind::EndText, p);
                } else {
                    emit(e.instance(), p + ":" + e.instance().frame);
                }
            }
        }
        marker(MarkerKind::EndFrame, path);
    }

    const FrameLibrary& lib_;
    const MarkerConfig& m_;
    Expansion out_;
    std::set<std::size_t> marker_starts_;
};

class Extractor {
public:
    Extractor(std::string_view text, const FrameLibrary& lib, const MarkerConfig& m) : t_(text), lib_(lib), m_(m) {}

    FrameInstance run() {
        auto begin = marker_at(pos_);
        if (!begin || begin->first.kind != MarkerKind::BeginFrame)
            fail(pos_, "expected a BEGIN-FRAME marker line");
        const std::string path = begin->first.path;
        if (!lib_.find(path)) fail(pos_, "unknown frame " + path);
        pos_ = begin->second;
        FrameInstance inst = frame_at(path, path);
        if (pos_ != t_.size()) fail(pos_, "unexpected text after the final END-FRAME marker");
        return inst;
    }

private:
    [[noreturn]] void fail(std::size_t pos, const std::string& msg) const {
        throw FrameError("line " + std::to_string(line_of(t_, pos)) + ": " + msg);
    }

    bool at_line_start(std::size_t pos) const { return pos == 0 || t_[pos - 1] == '\n'; }

    std::string_view line_at(std::size_t pos) const {
        auto nl = t_.find('\n', pos);
        return t_.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    }

    /// Marker on the line starting at `pos`, with the position after its newline.
    std::optional<std::pair<Marker, std::size_t>> marker_at(std::size_t pos) const {
        if (pos >= t_.size()) return {};
        const auto line = line_at(pos);
        if (!marker_like(m_, line)) return {};
        auto marker = parse_marker(m_, line);
        if (!marker) fail(pos, "malformed marker line: " + std::string(line));
        std::size_t next = pos + line.size();
        if (next < t_.size()) ++next;
        return std::pair{*marker, next};
    }

    /// Position of the line a marker would start on, allowing for the
    /// newline expansion inserts when not already at a line start.
    std::optional<std::size_t> marker_line_start(std::size_t pos) const {
        if (at_line_start(pos)) return pos;
        if (pos < t_.size() && t_[pos] == '\n') return pos + 1;
        return {};
    }

    void expect_marker(MarkerKind kind, const std::string& path) {
        auto at = marker_line_start(pos_);
        auto found = at ? marker_at(*at) : std::nullopt;
        if (!found) fail(pos_, "expected " + std::string(keyword(kind)) + " " + path + "; text was modified or a marker is missing");
        if (found->first.kind != kind || found->first.path != path)
            fail(*at, "expected " + std::string(keyword(kind)) + " " + path + " but found " +
                          std::string(keyword(found->first.kind)) + " " + found->first.path);
        pos_ = found->second;
    }

    FrameInstance frame_at(const std::string& name, const std::string& path) {
        const Frame& frame = lib_.require(name);
        FrameInstance inst{name, {}};
        for (const auto& part : frame.body) {
            if (!part.is_slot) {
                if (t_.compare(pos_, part.text.size(), part.text) != 0) {
                    auto at = marker_line_start(pos_);
                    if (at && marker_at(*at))
                        fail(*at, "unexpected marker inside " + path + ": " + std::string(line_at(*at)));
                    fail(pos_, "text outside literal regions of " + path + " was modified");
                }
                pos_ += part.text.size();
                continue;
            }
            std::vector<SlotEntry> entries;
            for (std::size_t i = 0;; ++i) {
                const std::string p = entry_path(path, part.text, i);
                auto at = marker_line_start(pos_);
                auto found = at ? marker_at(*at) : std::nullopt;
                if (!found) break;
                const Marker& mk = found->first;
                if (mk.kind == MarkerKind::BeginText && mk.path == p) {
                    pos_ = found->second;
                    entries.push_back(SlotEntry::literal(literal(p)));
                } else if (mk.kind == MarkerKind::BeginFrame && starts_with(mk.path, p + ":")) {
                    const std::string child = mk.path.substr(p.size() + 1);
                    if (!lib_.find(child)) fail(*at, "unknown frame " + child + " in marker path " + mk.path);
                    pos_ = found->second;
                    entries.push_back(SlotEntry::nested(frame_at(child, mk.path)));
                } else {
                    break;
                }
            }
            if (!entries.empty()) inst.fills.emplace(part.text, std::move(entries));
        }
        expect_marker(MarkerKind::EndFrame, path);
        return inst;
    }

    std::string literal(const std::string& path) {
        const std::size_t start = pos_;
        std::size_t pos = pos_;
        while (pos < t_.size()) {
            if (auto found = marker_at(pos)) {
                if (found->first.kind != MarkerKind::EndText || found->first.path != path)
                    fail(pos, "marker line inside the literal region " + path);
                std::string text(t_.substr(start, pos - start));
                if (!text.empty()) text.pop_back();
                pos_ = found->second;
                return text;
            }
            auto nl = t_.find('\n', pos);
            pos = nl == std::string_view::npos ? t_.size() : nl + 1;
        }
        fail(start, "literal region " + path + " has no END-TEXT marker");
    }

    std::string_view t_;
    const FrameLibrary& lib_;
    const MarkerConfig& m_;
    std::size_t pos_ = 0;
};

}  // namespace

Expansion expand_with_map(const FrameInstance& instance, const FrameLibrary& lib, const MarkerConfig& markers) {
    check_markers(markers);
    FrameInstance checked = instance;
    check_instance(lib, checked, checked.frame);
    return Emitter(lib, markers).run(instance);
}

std::string expand(const FrameInstance& instance, const FrameLibrary& lib, const MarkerConfig& markers) {
    return expand_with_map(instance, lib, markers).text;
}

FrameInstance extract(std::string_view text, const FrameLibrary& lib, const MarkerConfig& markers) {
    check_markers(markers);
    return Extractor(text, lib, markers).run();
}

}  // namespace fmgen
