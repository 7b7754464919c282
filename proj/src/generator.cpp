#include "fmgen/generator.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <json.hpp>

#include "fmgen/digest.hpp"
#include "fmgen/text.hpp"

namespace fmgen {

namespace detail {
std::vector<SlotEntry>* resolve_slot_path(FrameInstance& root, const std::string& path, std::string& error);
}

namespace {

template <typename Instance, typename Fn>
void walk_literals(Instance& inst, const FrameLibrary& lib, const std::string& path, Fn&& fn) {
    for (const auto& part : lib.require(inst.frame).body) {
        if (!part.is_slot) continue;
        auto it = inst.fills.find(part.text);
        if (it == inst.fills.end()) continue;
        for (std::size_t i = 0; i < it->second.size(); ++i) {
            auto& e = it->second[i];
            const std::string p = path + "/" + part.text + "[" + std::to_string(i) + "]";
            if (e.is_literal())
                fn(p, e);
            else
                walk_literals(e.instance(), lib, p + ":" + e.instance().frame, fn);
        }
    }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw GeneratorError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) throw GeneratorError("cannot write " + path.string());
}

std::string inputs_digest(const Configuration& c, const FrameLibrary& lib, const RuleSet& rules,
                          const std::string& spec, const Overlay* overlay) {
    std::string all;
    auto part = [&](std::string_view tag, const std::string& text) {
        all += std::string(tag) + " " + std::to_string(text.size()) + "\n" + text;
    };
    part("model", to_source(c.diagram()));
    part("decisions", spec);
    part("frames", serialize_frames(lib));
    part("rules", serialize_rules(rules));
    if (overlay && !overlay->edits.empty()) part("overlay", serialize_overlay(*overlay));
    return sha256_hex(all);
}

std::optional<Overlay> read_overlay(const std::filesystem::path& out) {
    const auto p = out / kOverlayFile;
    if (!std::filesystem::exists(p)) return std::nullopt;
    return parse_overlay(read_file(p.string()));
}

}  // namespace

std::vector<std::pair<std::string, std::string>> literal_paths(const FrameInstance& instance, const FrameLibrary& lib) {
    std::vector<std::pair<std::string, std::string>> out;
    walk_literals(instance, lib, instance.frame, [&](const std::string& p, const SlotEntry& e) { out.emplace_back(p, e.text()); });
    return out;
}

std::string serialize_overlay(const Overlay& overlay) {
    nlohmann::json doc;
    doc["edits"] = nlohmann::json::array();
    for (const auto& e : overlay.edits) doc["edits"].push_back({{"file", e.file}, {"path", e.path}, {"text", e.text}});
    return doc.dump(2) + "\n";
}

Overlay parse_overlay(std::string_view json) {
    Overlay o;
    try {
        auto doc = nlohmann::json::parse(json);
        for (const auto& e : doc.at("edits"))
            o.edits.push_back({e.at("file").get<std::string>(), e.at("path").get<std::string>(),
                               e.at("text").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
        throw GeneratorError(std::string("malformed overlay: ") + e.what());
    }
    std::sort(o.edits.begin(), o.edits.end(),
              [](const auto& a, const auto& b) { return std::tie(a.file, a.path) < std::tie(b.file, b.path); });
    return o;
}

std::string serialize_manifest(const Manifest& m) {
    std::string out = "inputs\t" + m.inputs_digest + "\n";
    for (const auto& e : m.entries) out += e.path + "\t" + std::to_string(e.bytes) + "\t" + e.digest + "\n";
    return out;
}

Manifest parse_manifest(std::string_view text) {
    Manifest m;
    const auto lines = split_lines(text);
    auto bad = [](std::size_t line) { return GeneratorError("MANIFEST line " + std::to_string(line) + " is malformed"); };
    if (lines.empty() || !starts_with(lines[0], "inputs\t")) throw bad(1);
    m.inputs_digest = std::string(lines[0].substr(7));
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto l = lines[i];
        const auto t1 = l.find('\t'), t2 = l.rfind('\t');
        if (t1 == std::string_view::npos || t1 == t2) throw bad(i + 1);
        ManifestEntry e;
        e.path = std::string(l.substr(0, t1));
        try {
            e.bytes = std::stoul(std::string(l.substr(t1 + 1, t2 - t1 - 1)));
        } catch (const std::exception&) {
            throw bad(i + 1);
        }
        e.digest = std::string(l.substr(t2 + 1));
        m.entries.push_back(std::move(e));
    }
    return m;
}

BuiltOutputs build_outputs(const Configuration& c, const FrameLibrary& lib, const RuleSet& rules,
                           const Overlay* overlay) {
    const FeatureDiagram& d = c.diagram();
    bind(rules, d, lib);
    BuiltOutputs built;
    for (const auto& r : rules.outputs) {
        FrameInstance root{r.root_frame, {}};
        for (const auto& a : r.actions) {
            if (a.guard) {
                const FeatureState s = c.state(d.require(a.guard->feature));
                if (s == FeatureState::Undecided)
                    throw GeneratorError("rules line " + std::to_string(a.line) + ": guard feature " +
                                         a.guard->feature + " is undecided");
                if (s != to_state(a.guard->value)) continue;
            }
            std::string error;
            auto* list = detail::resolve_slot_path(root, a.slot_path, error);
            if (!list) throw GeneratorError("rules line " + std::to_string(a.line) + ": cannot fill " + a.slot_path + ": " + error);
            if (a.is_text) {
                list->push_back(SlotEntry::literal(a.text));
            } else {
                Fills fills;
                for (const auto& [param, value] : a.params) fills[param].push_back(SlotEntry::literal(value));
                list->push_back(SlotEntry::nested(instantiate(lib, a.frame, std::move(fills))));
            }
        }
        FrameInstance inst = instantiate(lib, root.frame, std::move(root.fills));
        if (overlay) {
            std::map<std::string, SlotEntry*> literals;
            walk_literals(inst, lib, inst.frame, [&](const std::string& p, SlotEntry& e) { literals[p] = &e; });
            for (const auto& e : overlay->edits) {
                if (e.file != r.path) continue;
                auto it = literals.find(e.path);
                if (it == literals.end())
                    built.stale.push_back(e);
                else
                    *it->second = SlotEntry::literal(e.text);
            }
        }
        built.instances.emplace_back(&r, std::move(inst));
    }
    if (overlay)
        for (const auto& e : overlay->edits)
            if (std::none_of(rules.outputs.begin(), rules.outputs.end(), [&](const auto& r) { return r.path == e.file; }))
                built.stale.push_back(e);
    return built;
}

GenerateResult generate(const Configuration& c, const FrameLibrary& lib, const RuleSet& rules,
                        const std::filesystem::path& out) {
    const std::string spec = emit_spec(c);
    const auto overlay = read_overlay(out);
    auto built = build_outputs(c, lib, rules, overlay ? &*overlay : nullptr);

    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& [rule, inst] : built.instances) files.emplace_back(rule->path, expand(inst, lib, rule->markers));
    files.emplace_back(kSpecFile, spec);
    std::sort(files.begin(), files.end());

    GenerateResult result;
    result.stale_overlay = std::move(built.stale);
    result.manifest.inputs_digest = inputs_digest(c, lib, rules, spec, overlay ? &*overlay : nullptr);
    for (const auto& [path, content] : files) {
        write_file(out / path, content);
        result.manifest.entries.push_back({path, content.size(), sha256_hex(content)});
    }
    write_file(out / kManifestFile, serialize_manifest(result.manifest));
    return result;
}

Overlay RoundtripReport::to_overlay() const {
    Overlay o;
    for (const auto& c : changes) o.edits.push_back({c.file, c.path, c.edited});
    std::sort(o.edits.begin(), o.edits.end(),
              [](const auto& a, const auto& b) { return std::tie(a.file, a.path) < std::tie(b.file, b.path); });
    return o;
}

RoundtripReport roundtrip_update(const std::filesystem::path& out, std::shared_ptr<const FeatureDiagram> diagram,
                                 const FrameLibrary& lib, const RuleSet& rules) {
    auto read = [&](const std::string& name) {
        try {
            return read_file((out / name).string());
        } catch (const Error&) {
            throw GeneratorError("cannot read " + name + " in " + out.string() + "; run generate first");
        }
    };
    const Manifest manifest = parse_manifest(read(kManifestFile));
    const std::string spec = read(kSpecFile);
    const Configuration c = parse_spec(spec, std::move(diagram));
    const auto overlay = read_overlay(out);
    auto built = build_outputs(c, lib, rules, overlay ? &*overlay : nullptr);
    if (inputs_digest(c, lib, rules, emit_spec(c), overlay ? &*overlay : nullptr) != manifest.inputs_digest)
        throw GeneratorError("model, frames, rules or overlay changed since the last generate run; regenerate first");

    RoundtripReport report;
    for (const auto& [rule, expected] : built.instances) {
        const std::string text = read(rule->path);
        FrameInstance edited;
        try {
            edited = extract(text, lib, rule->markers);
        } catch (const FrameError& e) {
            throw GeneratorError(rule->path + ": " + e.what());
        }
        auto shape = [&](FrameInstance inst) {
            walk_literals(inst, lib, inst.frame, [](const std::string&, SlotEntry& e) { e = SlotEntry::literal(""); });
            return inst;
        };
        if (shape(edited) != shape(expected))
            throw GeneratorError(rule->path + ": frame structure differs from the generated file");
        const auto want = literal_paths(expected, lib);
        const auto got = literal_paths(edited, lib);
        for (std::size_t i = 0; i < want.size(); ++i)
            if (want[i].second != got[i].second)
                report.changes.push_back({rule->path, want[i].first, want[i].second, got[i].second});
    }
    return report;
}

Overlay export_overlay(const std::filesystem::path& out, const RoundtripReport& report) {
    std::map<std::pair<std::string, std::string>, std::string> merged;
    if (auto existing = read_overlay(out))
        for (const auto& e : existing->edits) merged[{e.file, e.path}] = e.text;
    for (const auto& c : report.changes) merged[{c.file, c.path}] = c.edited;
    Overlay o;
    for (const auto& [key, text] : merged) o.edits.push_back({key.first, key.second, text});
    write_file(out / kOverlayFile, serialize_overlay(o));
    return o;
}

}  // namespace fmgen
