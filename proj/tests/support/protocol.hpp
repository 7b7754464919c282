#pragma once

// Replays a recorded protocol fixture through SessionService and mirrors
// every decision and undo with direct library calls. After each step the
// session's configuration must equal the mirror's.

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmgen/service.hpp"

namespace fmgen::test {

struct ProtocolReplay {
    std::vector<std::string> mismatches;
    nlohmann::json actual;  ///< the fixture with responses as served
    std::size_t steps = 0;
    std::size_t conflicts = 0;
};

/// Configuration equality across independently parsed diagrams.
inline bool equivalent(const Configuration& a, const Configuration& b) {
    if (to_source(a.diagram()) != to_source(b.diagram())) return false;
    if (!std::ranges::equal(a.states(), b.states())) return false;
    auto da = a.decisions(), db = b.decisions();
    std::sort(da.begin(), da.end());
    std::sort(db.begin(), db.end());
    return da == db;
}

/// Body with the run-specific output directory blanked out.
inline nlohmann::json normalized_body(const std::string& body) {
    auto doc = nlohmann::json::parse(body);
    if (doc.is_object() && doc.contains("out")) doc["out"] = "<out>";
    return doc;
}

inline ProtocolReplay replay_protocol(const nlohmann::json& fixture, const std::filesystem::path& out_root) {
    using nlohmann::json;
    int counter = 0;
    SessionService::Options opts;
    opts.output_root = out_root;
    opts.next_id = [&counter] { return "s" + std::to_string(++counter); };
    SessionService service(opts);

    struct Mirror {
        std::shared_ptr<const FeatureDiagram> diagram;
        std::vector<Configuration> configs;  ///< history; back() is current
    };
    std::map<std::string, Mirror> mirrors;

    ProtocolReplay out;
    out.actual = fixture;
    auto fail = [&](std::size_t i, const std::string& what) {
        out.mismatches.push_back("step " + std::to_string(i) + ": " + what);
    };

    for (std::size_t i = 0; i < fixture.at("steps").size(); ++i) {
        const json& step = fixture["steps"][i];
        const json& rq = step.at("request");
        Request req{rq.at("method"), rq.at("path"), {}, {}};
        if (rq.contains("query"))
            for (const auto& [k, v] : rq["query"].items()) req.query[k] = v.get<std::string>();
        if (rq.contains("body")) req.body = rq["body"].dump();
        const Response res = service.handle(req);
        const json body = normalized_body(res.body);
        out.actual["steps"][i]["response"] = {{"status", res.status}, {"body", body}};
        ++out.steps;

        if (step.contains("response")) {
            if (step["response"].at("status") != res.status)
                fail(i, "status " + std::to_string(res.status) + ", recorded " + step["response"]["status"].dump());
            else if (step["response"].at("body") != body)
                fail(i, "body differs from the recording");
        }

        // Library mirror.
        std::vector<std::string> segs;
        for (std::size_t a = 0, b; a < req.path.size(); a = b + 1) {
            b = req.path.find('/', a);
            if (b == std::string::npos) b = req.path.size();
            if (b > a) segs.push_back(req.path.substr(a, b - a));
        }
        if (segs.size() == 1 && res.status == 201) {
            auto d = std::make_shared<const FeatureDiagram>(parse_model(rq["body"]["model"].get<std::string>()));
            mirrors[body["id"]] = {d, {init_config(d)}};
        }
        if (segs.size() < 2 || !mirrors.count(segs[1])) continue;
        Mirror& m = mirrors[segs[1]];
        const std::string action = segs.size() == 3 ? segs[2] : "";
        if (segs.size() == 2 && req.method == "DELETE" && res.status == 200) {
            mirrors.erase(segs[1]);
            if (service.configuration(segs[1])) fail(i, "deleted session still present");
            continue;
        }
        if (action == "decisions") {
            const auto f = m.diagram->find(rq["body"].value("feature", ""));
            const json v = rq["body"].value("value", json());
            if (f && v.is_number_integer() && (v == 0 || v == 1)) {
                auto r = apply_decision(m.configs.back(), *f, v == 1 ? Decision::Selected : Decision::Deselected);
                if (auto* applied = std::get_if<Applied>(&r)) {
                    if (res.status != 200) fail(i, "library accepted a decision the service rejected");
                    if (!(applied->config == m.configs.back())) m.configs.push_back(applied->config);
                } else {
                    ++out.conflicts;
                    if (res.status != 409) fail(i, "library rejected a decision the service accepted");
                }
            }
        } else if (action == "undo" && res.status == 200) {
            if (m.configs.size() < 2)
                fail(i, "service undid a decision the library has no record of");
            else
                m.configs.pop_back();
        }
        const auto served = service.configuration(segs[1]);
        if (!served) {
            fail(i, "session " + segs[1] + " vanished");
        } else if (!equivalent(*served, m.configs.back())) {
            fail(i, "session state differs from library replay");
        }
        if (res.status == 200 && body.contains("states")) {
            const Configuration& c = m.configs.back();
            for (FeatureId f = 0; f < c.diagram().size(); ++f)
                if (body["states"].value(c.diagram().name_of(f), "") != to_string(c.state(f)))
                    fail(i, "reported state of " + c.diagram().name_of(f) + " differs from library replay");
        }
    }
    return out;
}

}  // namespace fmgen::test
