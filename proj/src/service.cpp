#include "fmgen/service.hpp"

#include <random>
#include <sstream>

#include <json.hpp>

namespace fmgen {

using nlohmann::json;

namespace {

struct HttpError {
    int status;
    std::string code;
    std::string message;
    std::vector<std::string> reasons;
    json extra = json::object();
};

Response reply(int status, json body) { return {status, body.dump(2) + "\n"}; }

Response reply(const HttpError& e) {
    json body = e.extra;
    body["code"] = e.code;
    body["message"] = e.message;
    body["reasons"] = e.reasons;
    return reply(e.status, std::move(body));
}

json obligations_json(const FeatureDiagram& d, const std::vector<Obligation>& obligations) {
    json out = json::array();
    for (const auto& o : obligations)
        out.push_back({{"kind", to_string(o.kind)}, {"feature", d.name_of(o.feature)}, {"message", o.message}});
    return out;
}

std::vector<std::string> messages(const std::vector<Obligation>& obligations) {
    std::vector<std::string> out;
    for (const auto& o : obligations) out.push_back(o.message);
    return out;
}

json literal_json(const FeatureDiagram& d, const Literal& l) {
    if (l.feature == kNoFeature) return nullptr;
    return {{"feature", d.name_of(l.feature)}, {"state", to_string(l.state)}};
}

json changes_json(const FeatureDiagram& d, const std::vector<Change>& changes) {
    json out = json::array();
    for (const auto& c : changes)
        out.push_back({{"feature", d.name_of(c.feature)}, {"before", to_string(c.before)}, {"after", to_string(c.after)}});
    return out;
}

std::vector<Change> diff(const Configuration& before, const Configuration& after) {
    std::vector<Change> out;
    for (FeatureId f = 0; f < before.diagram().size(); ++f)
        if (before.state(f) != after.state(f)) out.push_back({f, before.state(f), after.state(f)});
    return out;
}

std::string random_id() {
    static std::mutex m;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(m);
    std::ostringstream out;
    out << std::hex;
    for (int i = 0; i < 2; ++i) {
        out.width(16);
        out.fill('0');
        out << rng();
    }
    return out.str();
}

json parse_body(const std::string& body) {
    if (body.empty()) return json::object();
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        throw HttpError{400, "bad_request", std::string("malformed JSON body: ") + e.what(), {}};
    }
    if (!doc.is_object()) throw HttpError{400, "bad_request", "request body must be a JSON object", {}};
    return doc;
}

std::optional<std::string> string_field(const json& body, const char* key, bool required) {
    auto it = body.find(key);
    if (it == body.end() || it->is_null()) {
        if (required) throw HttpError{400, "bad_request", std::string("missing field '") + key + "'", {}};
        return std::nullopt;
    }
    if (!it->is_string()) throw HttpError{400, "bad_request", std::string("field '") + key + "' must be a string", {}};
    return it->get<std::string>();
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < path.size()) {
        if (path[i] == '/') {
            ++i;
            continue;
        }
        auto j = path.find('/', i);
        if (j == std::string::npos) j = path.size();
        out.push_back(path.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace

struct SessionService::Session {
    Session(std::string id_, std::shared_ptr<const FeatureDiagram> d, WidgetTree t, Configuration c)
        : id(std::move(id_)), diagram(std::move(d)), tree(std::move(t)), config(std::move(c)) {}

    std::string id;
    std::shared_ptr<const FeatureDiagram> diagram;
    WidgetTree tree;
    std::optional<FrameLibrary> frames;
    std::optional<RuleSet> rules;
    std::vector<std::string> warnings;
    Configuration config;
    /// Configuration before each accepted decision, and the decision.
    std::vector<std::pair<Configuration, std::pair<FeatureId, Decision>>> history;
    Clock::time_point last_used;  ///< guarded by the table mutex
    std::mutex mutex;
    bool deleted = false;

    json view() const {
        const FeatureDiagram& d = *diagram;
        json states = json::object();
        for (FeatureId f = 0; f < d.size(); ++f) states[d.name_of(f)] = to_string(config.state(f));
        json decisions = json::array();
        for (const auto& [f, v] : config.decisions())
            decisions.push_back({{"feature", d.name_of(f)}, {"value", v == Decision::Selected ? 1 : 0}});
        const Status st = status(config);
        return {{"id", id},
                {"states", std::move(states)},
                {"decisions", std::move(decisions)},
                {"enablement", compute_enablement(tree, config)},
                {"status", {{"complete", st.complete}, {"obligations", obligations_json(d, st.obligations)}}},
                {"can_undo", !history.empty()}};
    }
};

SessionService::SessionService() : SessionService(Options{}) {}

SessionService::SessionService(Options options) : options_(std::move(options)) {
    if (options_.output_root.empty()) options_.output_root = std::filesystem::temp_directory_path() / "fmgen-sessions";
    if (!options_.next_id) options_.next_id = random_id;
    if (!options_.now) options_.now = [] { return Clock::now(); };
}

SessionService::~SessionService() = default;

std::size_t SessionService::expire_idle() {
    std::lock_guard lock(table_mutex_);
    const auto now = options_.now();
    std::size_t n = 0;
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        if (now - it->second->last_used > options_.idle_timeout) {
            it = sessions_.erase(it);
            ++n;
        } else {
            ++it;
        }
    }
    return n;
}

std::size_t SessionService::session_count() const {
    std::lock_guard lock(table_mutex_);
    return sessions_.size();
}

std::optional<Configuration> SessionService::configuration(const std::string& id) const {
    std::shared_ptr<Session> s;
    {
        std::lock_guard lock(table_mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) return std::nullopt;
        s = it->second;
    }
    std::lock_guard lock(s->mutex);
    return s->config;
}

std::shared_ptr<SessionService::Session> SessionService::lookup(const std::string& id) {
    std::lock_guard lock(table_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw HttpError{404, "unknown_session", "no session " + id, {}};
    it->second->last_used = options_.now();
    return it->second;
}

Response SessionService::handle(const Request& request) {
    try {
        expire_idle();
        const auto segs = split_path(request.path);
        if (segs.empty() || segs[0] != "sessions") throw HttpError{404, "not_found", "no route " + request.path, {}};
        auto wrong_method = [&] {
            return HttpError{405, "method_not_allowed", request.method + " is not allowed on " + request.path, {}};
        };
        if (segs.size() == 1) {
            if (request.method != "POST") throw wrong_method();
            return create(request);
        }
        if (segs.size() == 2) {
            if (request.method != "DELETE") throw wrong_method();
            std::shared_ptr<Session> s;
            {
                std::lock_guard lock(table_mutex_);
                auto it = sessions_.find(segs[1]);
                if (it == sessions_.end()) throw HttpError{404, "unknown_session", "no session " + segs[1], {}};
                s = it->second;
                sessions_.erase(it);
            }
            std::lock_guard lock(s->mutex);
            s->deleted = true;
            return reply(200, {{"deleted", segs[1]}});
        }
        if (segs.size() != 3) throw HttpError{404, "not_found", "no route " + request.path, {}};
        static const std::map<std::string, std::string> methods = {
            {"widgets", "GET"}, {"decisions", "POST"}, {"undo", "POST"}, {"spec", "GET"}, {"generate", "POST"}};
        auto m = methods.find(segs[2]);
        if (m == methods.end()) throw HttpError{404, "not_found", "no route " + request.path, {}};
        if (request.method != m->second) throw wrong_method();
        auto s = lookup(segs[1]);
        std::lock_guard lock(s->mutex);
        if (s->deleted) throw HttpError{404, "unknown_session", "no session " + segs[1], {}};
        return dispatch(*s, segs[2], request);
    } catch (const HttpError& e) {
        return reply(e);
    } catch (const std::exception& e) {
        return reply(HttpError{500, "internal", e.what(), {}});
    }
}

Response SessionService::create(const Request& request) {
    const json body = parse_body(request.body);
    const auto model = string_field(body, "model", true);
    const auto frames = string_field(body, "frames", false);
    const auto rules = string_field(body, "rules", false);
    if (frames.has_value() != rules.has_value())
        throw HttpError{400, "bad_request", "frames and rules must be given together", {}};

    std::shared_ptr<const FeatureDiagram> diagram;
    try {
        diagram = std::make_shared<const FeatureDiagram>(parse_model(*model));
    } catch (const ModelError& e) {
        throw HttpError{400, "invalid_model", "the model does not parse", {e.what()}};
    }
    std::vector<std::string> warnings;
    for (const auto& diag : validate_model(*diagram)) warnings.push_back(render(diag));

    std::optional<Configuration> config;
    try {
        config = init_config(diagram);
    } catch (const ConfigError& e) {
        throw HttpError{400, "invalid_model", "the model has no valid configuration", {e.what()}};
    }

    std::optional<FrameLibrary> lib;
    std::optional<RuleSet> rule_set;
    if (frames) {
        try {
            lib = parse_frames(*frames);
        } catch (const FrameError& e) {
            throw HttpError{400, "invalid_frames", "the frame library does not parse", {e.what()}};
        }
        try {
            rule_set = parse_rules(*rules);
            bind(*rule_set, *diagram, *lib);
        } catch (const GeneratorError& e) {
            throw HttpError{400, "invalid_rules", "the rules do not match the model and frames", {e.what()}};
        }
    }

    auto s = std::make_shared<Session>("", diagram, transform(*diagram), std::move(*config));
    s->frames = std::move(lib);
    s->rules = std::move(rule_set);
    s->warnings = std::move(warnings);
    {
        std::lock_guard lock(table_mutex_);
        do s->id = options_.next_id();
        while (sessions_.count(s->id));
        s->last_used = options_.now();
        sessions_.emplace(s->id, s);
    }
    json out = s->view();
    out["widgets"] = json::parse(serialize(s->tree));
    out["warnings"] = s->warnings;
    out["generator"] = s->frames.has_value();
    return reply(201, std::move(out));
}

Response SessionService::dispatch(Session& s, const std::string& action, const Request& request) {
    const FeatureDiagram& d = *s.diagram;

    if (action == "widgets") {
        json out = s.view();
        out["widgets"] = json::parse(serialize(s.tree));
        out["warnings"] = s.warnings;
        out["generator"] = s.frames.has_value();
        return reply(200, std::move(out));
    }

    if (action == "decisions") {
        const json body = parse_body(request.body);
        const auto name = string_field(body, "feature", true);
        auto v = body.find("value");
        if (v == body.end() || !v->is_number_integer() || (*v != 0 && *v != 1))
            throw HttpError{400, "bad_request", "field 'value' must be 0 or 1", {}};
        const auto feature = d.find(*name);
        if (!feature) throw HttpError{400, "unknown_feature", "no feature " + *name + " in " + d.name(), {}};
        const Decision value = *v == 1 ? Decision::Selected : Decision::Deselected;

        auto result = apply_decision(s.config, *feature, value);
        if (auto* conflict = std::get_if<Conflict>(&result)) {
            json chain = json::array();
            for (const auto& link : conflict->reasons) {
                json premises = json::array();
                for (const auto& p : link.premises) premises.push_back(literal_json(d, p));
                chain.push_back({{"rule", to_string(link.rule)},
                                 {"premises", std::move(premises)},
                                 {"conclusion", literal_json(d, link.conclusion)}});
            }
            HttpError e{409, "conflict",
                        std::string(value == Decision::Selected ? "cannot select " : "cannot deselect ") + *name,
                        describe(d, *conflict)};
            e.extra["conflict"] = {{"feature", *name}, {"value", value == Decision::Selected ? 1 : 0}, {"chain", chain}};
            throw e;
        }
        auto& applied = std::get<Applied>(result);
        json notifications = json::array();
        for (const auto& n : derive_notifications(s.tree, applied.report, *feature, value)) {
            json affected = json::array();
            for (const auto& [f, st] : n.affected) affected.push_back({{"feature", d.name_of(f)}, {"state", to_string(st)}});
            notifications.push_back({{"panel", n.panel},
                                     {"trigger", {{"feature", d.name_of(n.trigger)}, {"value", n.value == Decision::Selected ? 1 : 0}}},
                                     {"affected", std::move(affected)},
                                     {"cross_panel", n.cross_panel}});
        }
        if (!(applied.config == s.config)) {
            s.history.emplace_back(std::move(s.config), std::make_pair(*feature, value));
            s.config = std::move(applied.config);
        }
        json out = s.view();
        out["changes"] = changes_json(d, applied.report.changed);
        out["notifications"] = std::move(notifications);
        return reply(200, std::move(out));
    }

    if (action == "undo") {
        if (s.history.empty()) throw HttpError{409, "nothing_to_undo", "the session has no decision to undo", {}};
        auto [previous, decision] = std::move(s.history.back());
        s.history.pop_back();
        const auto changes = diff(s.config, previous);
        s.config = std::move(previous);
        json out = s.view();
        out["undone"] = {{"feature", d.name_of(decision.first)}, {"value", decision.second == Decision::Selected ? 1 : 0}};
        out["changes"] = changes_json(d, changes);
        out["notifications"] = json::array();
        return reply(200, std::move(out));
    }

    if (action == "spec") {
        std::string mode = "preview";
        if (auto it = request.query.find("mode"); it != request.query.end()) mode = it->second;
        if (mode != "preview" && mode != "final")
            throw HttpError{400, "bad_request", "mode must be preview or final", {}};
        const Status st = status(s.config);
        if (mode == "final" && !st.complete) {
            HttpError e{409, "incomplete", "the configuration is not complete", messages(st.obligations)};
            e.extra["obligations"] = obligations_json(d, st.obligations);
            throw e;
        }
        return reply(200, {{"mode", mode},
                           {"complete", st.complete},
                           {"xml", emit_spec(s.config, mode == "final" ? SpecMode::Final : SpecMode::Preview)}});
    }

    // generate
    const json body = parse_body(request.body);
    const std::string policy = string_field(body, "policy", false).value_or("strict");
    if (policy != "strict" && policy != "default-off")
        throw HttpError{400, "bad_request", "policy must be strict or default-off", {}};
    if (!s.frames) throw HttpError{400, "no_generator", "the session was created without frames and rules", {}};
    std::optional<Configuration> final;
    try {
        final = finalize(s.config, policy == "strict" ? FinalizePolicy::Strict : FinalizePolicy::DefaultOff);
    } catch (const IncompleteConfiguration& e) {
        HttpError err{409, "incomplete", "the configuration is not complete", messages(e.obligations())};
        err.extra["obligations"] = obligations_json(d, e.obligations());
        throw err;
    }
    const auto out_dir = options_.output_root / s.id;
    GenerateResult result;
    try {
        result = generate(*final, *s.frames, *s.rules, out_dir);
    } catch (const Error& e) {
        throw HttpError{422, "generation_failed", "generation failed", {e.what()}};
    }
    json entries = json::array();
    for (const auto& e : result.manifest.entries)
        entries.push_back({{"path", e.path}, {"bytes", e.bytes}, {"digest", e.digest}});
    json stale = json::array();
    for (const auto& e : result.stale_overlay) stale.push_back({{"file", e.file}, {"path", e.path}, {"text", e.text}});
    return reply(200, {{"out", out_dir.string()},
                       {"policy", policy},
                       {"manifest", {{"inputs", result.manifest.inputs_digest}, {"entries", std::move(entries)}}},
                       {"stale_overlay", std::move(stale)}});
}

}  // namespace fmgen
