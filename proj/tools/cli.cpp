#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <ostream>

#include "fmgen/generator.hpp"
#include "fmgen/service.hpp"
#include "fmgen/text.hpp"
#include "fmgen/widget_transform.hpp"

namespace fmgen {

namespace {

using nlohmann::json;

struct Options {
    std::string model;
    std::string decisions;
    std::string frames;
    std::string rules;
    std::string out;
    std::string policy = "strict";
    std::string format = "text";
    std::string host = "127.0.0.1";
    int port = 8080;
    int idle_minutes = 30;
    bool preview = false;
    bool export_overlay = false;
    bool omit_childless_mandatory = false;
};

/// Domain failure already reported on the error stream.
struct Reported {};

std::shared_ptr<const FeatureDiagram> load_model(const std::string& path) {
    return std::make_shared<const FeatureDiagram>(parse_model(read_file(path)));
}

FinalizePolicy policy_of(const Options& o) {
    return o.policy == "default-off" ? FinalizePolicy::DefaultOff : FinalizePolicy::Strict;
}

json obligations_json(const FeatureDiagram& d, const std::vector<Obligation>& obligations) {
    json out = json::array();
    for (const auto& o : obligations)
        out.push_back({{"kind", to_string(o.kind)}, {"feature", d.name_of(o.feature)}, {"message", o.message}});
    return out;
}

void report_obligations(const std::vector<Obligation>& obligations, std::ostream& err) {
    err << "error: the configuration is incomplete\n";
    for (const auto& o : obligations) err << "  " << o.message << "\n";
}

Configuration configure_file(const std::shared_ptr<const FeatureDiagram>& d, const std::string& path, std::ostream& err) {
    Configuration::DecisionList decisions;
    if (!path.empty())
        for (const auto& [name, v] : parse_decisions(read_file(path))) decisions.emplace_back(d->require(name), v);
    auto r = configure(d, decisions);
    if (auto* conflict = std::get_if<Conflict>(&r)) {
        err << "error: cannot " << (conflict->value == Decision::Selected ? "select " : "deselect ")
            << d->name_of(conflict->feature) << "\n";
        for (const auto& line : describe(*d, *conflict)) err << "  " << line << "\n";
        throw Reported{};
    }
    return std::get<Configuration>(std::move(r));
}

Configuration finalized(const Configuration& c, const Options& o, std::ostream& err) {
    try {
        return finalize(c, policy_of(o));
    } catch (const IncompleteConfiguration& e) {
        report_obligations(e.obligations(), err);
        throw Reported{};
    }
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
    const auto d = load_model(o.model);
    const auto diags = validate_model(*d);
    const bool ok = std::none_of(diags.begin(), diags.end(), [](const auto& m) { return m.severity == Severity::Error; });
    if (o.format == "json") {
        json list = json::array();
        for (const auto& m : diags)
            list.push_back({{"severity", m.severity == Severity::Error ? "error" : "warning"},
                            {"message", m.message},
                            {"feature", m.feature}});
        out << json{{"ok", ok}, {"diagnostics", list}}.dump(2) << "\n";
    } else {
        for (const auto& m : diags) (m.severity == Severity::Error ? err : out) << render(m) << "\n";
        if (ok) out << "ok\n";
    }
    return ok ? 0 : 1;
}

int cmd_count(const Options& o, std::ostream& out) {
    const auto n = count_variants(*load_model(o.model)).to_string();
    if (o.format == "json")
        out << json{{"count", n}}.dump(2) << "\n";
    else
        out << n << "\n";
    return 0;
}

int cmd_transform(const Options& o, std::ostream& out) {
    TransformOptions t;
    t.omit_childless_mandatory = o.omit_childless_mandatory;
    out << serialize(transform(*load_model(o.model), t));
    return 0;
}

int cmd_configure(const Options& o, std::ostream& out, std::ostream& err) {
    const auto d = load_model(o.model);
    Configuration c = configure_file(d, o.decisions, err);
    if (o.policy != "strict") c = finalized(c, o, err);
    const Status st = status(c);
    if (o.format == "json") {
        json states = json::object();
        for (FeatureId f = 0; f < d->size(); ++f) states[d->name_of(f)] = to_string(c.state(f));
        out << json{{"states", states}, {"complete", st.complete}, {"obligations", obligations_json(*d, st.obligations)}}
                   .dump(2)
            << "\n";
        return 0;
    }
    for (FeatureId f = 0; f < d->size(); ++f) out << d->name_of(f) << "\t" << to_string(c.state(f)) << "\n";
    out << (st.complete ? "complete" : "incomplete") << "\n";
    for (const auto& ob : st.obligations) out << "  " << ob.message << "\n";
    return 0;
}

int cmd_spec(const Options& o, std::ostream& out, std::ostream& err) {
    const auto d = load_model(o.model);
    const Configuration c = configure_file(d, o.decisions, err);
    if (o.preview) {
        out << emit_spec(c, SpecMode::Preview);
        return 0;
    }
    out << emit_spec(finalized(c, o, err));
    return 0;
}

int cmd_generate(const Options& o, std::ostream& out, std::ostream& err) {
    const auto d = load_model(o.model);
    const Configuration c = finalized(configure_file(d, o.decisions, err), o, err);
    const FrameLibrary lib = parse_frames(read_file(o.frames));
    const RuleSet rules = parse_rules(read_file(o.rules));
    const std::filesystem::path root = o.out;
    const auto result = generate(c, lib, rules, root);
    for (const auto& e : result.stale_overlay)
        err << "warning: overlay edit " << e.file << " " << e.path << " no longer matches a literal\n";
    const std::string manifest = (root / kManifestFile).string();
    if (o.format == "json") {
        json entries = json::array();
        for (const auto& e : result.manifest.entries)
            entries.push_back({{"path", e.path}, {"bytes", e.bytes}, {"digest", e.digest}});
        out << json{{"manifest", manifest}, {"inputs", result.manifest.inputs_digest}, {"entries", entries}}.dump(2)
            << "\n";
    } else {
        out << manifest << "\n";
    }
    return 0;
}

int cmd_roundtrip(const Options& o, std::ostream& out) {
    const auto d = load_model(o.model);
    const FrameLibrary lib = parse_frames(read_file(o.frames));
    const RuleSet rules = parse_rules(read_file(o.rules));
    const std::filesystem::path root = o.out;
    const auto report = roundtrip_update(root, d, lib, rules);
    std::string overlay;
    if (o.export_overlay) {
        export_overlay(root, report);
        overlay = (root / kOverlayFile).string();
    }
    if (o.format == "json") {
        json changes = json::array();
        for (const auto& c : report.changes)
            changes.push_back({{"file", c.file}, {"path", c.path}, {"generated", c.generated}, {"edited", c.edited}});
        out << json{{"changes", changes}, {"overlay", overlay.empty() ? json(nullptr) : json(overlay)}}.dump(2) << "\n";
        return 0;
    }
    for (const auto& c : report.changes) out << "edited\t" << c.file << "\t" << c.path << "\n";
    if (report.changes.empty()) out << "no edits\n";
    if (!overlay.empty()) out << overlay << "\n";
    return 0;
}

int cmd_serve(const Options& o, std::ostream& out) {
    SessionService::Options so;
    if (!o.out.empty()) so.output_root = o.out;
    so.idle_timeout = std::chrono::minutes(o.idle_minutes);
    SessionService service(so);
    HttpServer server(service);
    const int port = server.start(o.host, o.port);
    out << "listening on http://" << o.host << ":" << port << std::endl;
    server.wait();
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Feature models, configuration and frame-based generation", "fmgen"};
    app.require_subcommand(1);
    Options o;

    auto format = [&](CLI::App* sub) {
        sub->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"text", "json"}));
    };
    auto policy = [&](CLI::App* sub) {
        sub->add_option("--policy", o.policy, "Completion policy")->check(CLI::IsMember({"strict", "default-off"}));
    };
    auto model = [&](CLI::App* sub) { sub->add_option("model,--model", o.model, "Feature model (.fm)")->required(); };

    auto* validate = app.add_subcommand("validate", "Check a feature model");
    model(validate);
    format(validate);

    auto* count = app.add_subcommand("count", "Count valid configurations");
    model(count);
    format(count);

    auto* xform = app.add_subcommand("transform", "Print the widget tree as JSON");
    model(xform);
    xform->add_flag("--omit-childless-mandatory", o.omit_childless_mandatory,
                    "Leave out mandatory features without children");

    auto* conf = app.add_subcommand("configure", "Apply a decision file and print the resulting states");
    model(conf);
    conf->add_option("--decisions", o.decisions, "Decision file (.dec)");
    policy(conf);
    format(conf);

    auto* spec = app.add_subcommand("spec", "Print the XML specification");
    model(spec);
    spec->add_option("--decisions", o.decisions, "Decision file (.dec)");
    policy(spec);
    spec->add_flag("--preview", o.preview, "Allow undecided features (value=\"?\")");

    auto* gen = app.add_subcommand("generate", "Generate files and a MANIFEST");
    model(gen);
    gen->add_option("--decisions", o.decisions, "Decision file (.dec)");
    gen->add_option("--frames", o.frames, "Frame library")->required();
    gen->add_option("--rules", o.rules, "Rule file")->required();
    gen->add_option("--out", o.out, "Output directory")->required();
    policy(gen);
    format(gen);

    auto* rt = app.add_subcommand("roundtrip", "Report hand edits in generated files");
    model(rt);
    rt->add_option("--frames", o.frames, "Frame library")->required();
    rt->add_option("--rules", o.rules, "Rule file")->required();
    rt->add_option("--out", o.out, "Output directory of the last generate run")->required();
    rt->add_flag("--export", o.export_overlay, "Merge the edits into OVERLAY");
    format(rt);

    auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
    serve->add_option("--host", o.host, "Address to bind");
    serve->add_option("--port", o.port, "Port; 0 picks a free one")->check(CLI::Range(0, 65535));
    serve->add_option("--out", o.out, "Root directory for generate runs");
    serve->add_option("--idle-minutes", o.idle_minutes, "Session idle timeout")->check(CLI::PositiveNumber);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        err << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return 2;
    }

    try {
        if (validate->parsed()) return cmd_validate(o, out, err);
        if (count->parsed()) return cmd_count(o, out);
        if (xform->parsed()) return cmd_transform(o, out);
        if (conf->parsed()) return cmd_configure(o, out, err);
        if (spec->parsed()) return cmd_spec(o, out, err);
        if (gen->parsed()) return cmd_generate(o, out, err);
        if (rt->parsed()) return cmd_roundtrip(o, out);
        if (serve->parsed()) return cmd_serve(o, out);
    } catch (const Reported&) {
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace fmgen
