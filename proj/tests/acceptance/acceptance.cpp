// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "fmgen/generator.hpp"
#include "fmgen/service.hpp"
#include "fmgen/widget_transform.hpp"
#include "support/fixtures.hpp"
#include "support/frames_oracle.hpp"
#include "support/gating.hpp"
#include "support/oracle.hpp"
#include "support/pipeline.hpp"
#include "support/protocol.hpp"
#include "support/replay.hpp"
#include "support/subtree.hpp"
#include "support/walk.hpp"

namespace fmgen {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;
};

/// Records the first failure; later ones are counted only.
class Tally {
public:
    void fail(const std::string& what) {
        if (first_.empty()) first_ = what;
        ++failures_;
    }
    bool ok() const { return failures_ == 0; }
    Outcome outcome(const std::string& summary) const {
        if (ok()) return {true, summary};
        return {false, std::to_string(failures_) + " failure(s); first: " + first_ + " [" + summary + "]"};
    }

private:
    std::string first_;
    std::size_t failures_ = 0;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt_seconds(double s) {
    std::ostringstream o;
    o.precision(3);
    o << std::fixed << s << "s";
    return o.str();
}

std::shared_ptr<const FeatureDiagram> shared(FeatureDiagram d) {
    return std::make_shared<const FeatureDiagram>(std::move(d));
}

Configuration from_mask(const std::shared_ptr<const FeatureDiagram>& d, oracle::Mask m) {
    std::vector<Decision> values;
    for (FeatureId f = 0; f < d->size(); ++f) values.push_back(oracle::has(m, f) ? Decision::Selected : Decision::Deselected);
    return unchecked_assignment(d, values);
}

bool completable(const std::vector<oracle::Mask>& valid, std::span<const FeatureState> states) {
    return std::any_of(valid.begin(), valid.end(), [&](oracle::Mask m) { return oracle::extends(m, states); });
}

Outcome counting_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1001);
    Tally t;
    int constrained = 0;
    for (int i = 0; i < 500; ++i) {
        const std::size_t k = i % 2 ? 6 : 0;
        constrained += k > 0;
        auto d = oracle::random_diagram(rng, {.min_features = 1, .max_features = 20, .max_constraints = k});
        if (count_variants(d).value() != oracle::brute_count(d)) t.fail("diagram " + std::to_string(i) + ":\n" + to_source(d));
    }
    const double s = seconds_since(t0);
    if (s >= 60) t.fail("took " + fmt_seconds(s));
    return t.outcome("500 diagrams (" + std::to_string(constrained) + " with constraints) in " + fmt_seconds(s));
}

Outcome scale_check() {
    Tally t;
    auto d = test::load_model("synthetic200.fm");
    if (d->size() < 200) t.fail("only " + std::to_string(d->size()) + " features");
    const auto t0 = Clock::now();
    const auto n = count_variants(*d);
    const double s = seconds_since(t0);
    if (s >= 1) t.fail("count took " + fmt_seconds(s));
    VariantCount::Integer bound = 1;
    for (int i = 0; i < 17; ++i) bound *= 10;
    if (n.value() <= bound) t.fail("count " + n.to_string() + " is not above 10^17");

    std::mt19937_64 rng(1002);
    int fragments = 0;
    for (int i = 0; i < 100; ++i) {
        auto f = oracle::random_fragment(rng, *d, 15);
        if (count_variants(f).value() != oracle::brute_count(f)) t.fail("fragment:\n" + to_source(f));
        fragments += f.size() == 15;
    }
    return t.outcome(std::to_string(d->size()) + " features, " + std::to_string(d->resolved_constraints().size()) +
                     " constraints, count " + n.to_string() + " in " + fmt_seconds(s) + "; 100 fragments (" +
                     std::to_string(fragments) + " of exactly 15 features) match enumeration");
}

Outcome fixture_counts() {
    Tally t;
    auto view = test::load_model("view.fm");
    auto dialog = test::load_model("dialog.fm");
    if (oracle::brute_count(*view) != 68 || count_variants(*view).to_string() != "68")
        t.fail("View: " + count_variants(*view).to_string());
    if (oracle::brute_count(*dialog) != 12 || count_variants(*dialog).to_string() != "12")
        t.fail("Dialog: " + count_variants(*dialog).to_string());
    return t.outcome("View 68, Dialog 12");
}

Outcome propagation() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1003);
    Tally t;
    int sequences = 0, steps = 0, conflicts = 0, permutations = 0;
    while (sequences < 10000) {
        auto d = shared(oracle::random_diagram(rng, {.min_features = 2, .max_features = 16, .max_constraints = 4}));
        const auto valid = oracle::enumerate_valid(*d);
        if (valid.empty()) continue;
        for (int w = 0; w < 20 && sequences < 10000; ++w, ++sequences) {
            auto walk = oracle::random_walk(rng, d, 12);
            steps += 12;
            conflicts += static_cast<int>(walk.conflicts.size());
            for (const auto& c : walk.states)
                if (!completable(valid, c.states())) t.fail("accepted state without completion in\n" + to_source(*d));
            for (const auto& c : walk.conflicts) {
                if (auto why = oracle::check_conflict_chain(*d, c); !why.empty()) t.fail("bad chain: " + why);
            }
            if (permutations < 1000 && w == 0) {
                const auto& last = walk.states.back();
                for (int p = 0; p < 10; ++p, ++permutations) {
                    auto decisions = last.decisions();
                    std::shuffle(decisions.begin(), decisions.end(), rng);
                    auto c = init_config(d);
                    for (const auto& [f, v] : decisions) {
                        auto r = apply_decision(c, f, v);
                        if (!std::holds_alternative<Applied>(r)) {
                            t.fail("permutation rejected a decision in\n" + to_source(*d));
                            break;
                        }
                        c = std::get<Applied>(std::move(r)).config;
                    }
                    if (!(c == last)) t.fail("permutation reached a different state in\n" + to_source(*d));
                    auto batch = configure(d, decisions);
                    if (!std::holds_alternative<Configuration>(batch) || !(std::get<Configuration>(batch) == last))
                        t.fail("configure disagrees with stepwise application in\n" + to_source(*d));
                }
            }
        }
    }
    if (permutations < 1000) t.fail("only " + std::to_string(permutations) + " permutations");
    return t.outcome(std::to_string(sequences) + " sequences (" + std::to_string(steps) + " decisions, " +
                     std::to_string(conflicts) + " conflicts), " + std::to_string(permutations) + " permutations in " +
                     fmt_seconds(seconds_since(t0)));
}

void collect_disabled_expectations(const WidgetNode& n, const FeatureDiagram& d, FeatureId view, bool inside,
                                   std::vector<std::string>& out) {
    const bool descendant = n.feature != kNoFeature && n.feature != view && d.in_subtree(n.feature, view);
    if (inside || descendant) out.push_back(n.ref);
    for (const auto& c : n.children) collect_disabled_expectations(c, d, view, inside || n.ref == "panel:View", out);
}

Outcome transform_goldens() {
    Tally t;
    for (const char* m : {"dialog", "view"}) {
        const auto actual = serialize(transform(*test::load_model(std::string(m) + ".fm")));
        std::string golden;
        try {
            golden = read_file(test::golden_path(std::string(m) + ".widgets.json"));
        } catch (const Error& e) {
            t.fail(e.what());
        }
        if (actual != golden) t.fail(std::string(m) + " differs from its golden");
    }
    auto d = test::load_model("view.fm");
    const auto tree = transform(*d);
    auto c = std::get<Applied>(apply_decision(init_config(d), "View", Decision::Deselected)).config;
    const auto enabled = compute_enablement(tree, c);
    std::vector<std::string> expect_off;
    collect_disabled_expectations(tree.root(), *d, d->require("View"), false, expect_off);
    for (const auto& ref : expect_off)
        if (enabled.at(ref)) t.fail(ref + " still enabled after deselect View");
    if (!enabled.at("feature:View")) t.fail("feature:View disabled");
    return t.outcome("dialog and view goldens byte-exact; " + std::to_string(expect_off.size()) +
                     " descendant widgets disabled after deselect View");
}

/// Marker lines of an expansion, as (offset, length) of the whole line.
std::vector<std::pair<std::size_t, std::size_t>> marker_lines(const std::string& text, const std::string& prefix) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const std::string_view line(text.data() + pos, end - pos);
        for (const char* k : {" BEGIN-FRAME ", " END-FRAME ", " BEGIN-TEXT ", " END-TEXT "})
            if (line.substr(0, prefix.size()) == prefix && line.substr(prefix.size()).starts_with(k)) {
                out.emplace_back(pos, end - pos);
                break;
            }
        pos = end + 1;
    }
    return out;
}

std::string corrupt(std::mt19937_64& rng, const std::string& text, const std::string& prefix) {
    const auto lines = marker_lines(text, prefix);
    const auto [off, len] = lines[rng() % lines.size()];
    std::string line = text.substr(off, len);
    std::string out = text;
    switch (rng() % 3) {
    case 0:  // drop the marker line
        out.erase(off, len + 1);
        return out;
    case 1: {  // BEGIN <-> END
        auto b = line.find("BEGIN-");
        if (b != std::string::npos)
            line.replace(b, 6, "END-");
        else
            line.replace(line.find("END-"), 4, "BEGIN-");
        break;
    }
    default: {  // tamper with the path
        auto bracket = line.rfind('[');
        if (bracket != std::string::npos && rng() % 2) {
            line.insert(bracket + 1, "1");
        } else {
            line += "x";
        }
    }
    }
    out.replace(off, len, line);
    return out;
}

Outcome frame_round_trip() {
    std::mt19937_64 rng(1004);
    Tally t;
    int identity = 0, edits = 0, corruptions = 0;
    while (identity < 1000) {
        auto lib = oracle::random_library(rng, 1 + rng() % 5);
        auto inst = oracle::random_instance(rng, lib, 5);
        const MarkerConfig markers = identity % 2 ? MarkerConfig{} : MarkerConfig{"#", "#"};
        const std::string out = expand(inst, lib, markers);
        try {
            if (!(extract(out, lib, markers) == inst)) t.fail("extract(expand(i)) != i");
        } catch (const FrameError& e) {
            t.fail(std::string("unexpected error: ") + e.what());
        }
        ++identity;
    }
    while (edits < 500) {
        auto lib = oracle::random_library(rng, 1 + rng() % 5);
        auto inst = oracle::random_instance(rng, lib, 5);
        auto exp = expand_with_map(inst, lib);
        if (exp.literals.empty()) continue;
        const auto& span = exp.literals[rng() % exp.literals.size()];
        std::string edited = exp.text;
        edited.replace(span.offset, span.length, oracle::random_text(rng, 30));
        try {
            if (expand(extract(edited, lib), lib) != edited) t.fail("edit not preserved byte-exactly");
        } catch (const FrameError& e) {
            t.fail(std::string("edit rejected: ") + e.what());
        }
        ++edits;
    }
    while (corruptions < 500) {
        auto lib = oracle::random_library(rng, 1 + rng() % 5);
        auto inst = oracle::random_instance(rng, lib, 5);
        const std::string out = expand(inst, lib);
        const std::string bad = corrupt(rng, out, "//");
        if (bad == out) continue;
        ++corruptions;
        try {
            extract(bad, lib);
            t.fail("corruption accepted:\n" + bad);
        } catch (const FrameError&) {
        }
    }
    return t.outcome(std::to_string(identity) + " identities, " + std::to_string(edits) + " literal edits, " +
                     std::to_string(corruptions) + " corruptions rejected");
}

Outcome pipeline() {
    Tally t;
    test::TempDir tmp;
    auto d = test::load_model("view.fm");
    const auto lib = test::view_frames();
    const auto rules = test::view_rules();
    int runs = 0;
    for (auto [dec, policy] : {std::pair{"view_all.dec", FinalizePolicy::Strict},
                               {"view_zoom.dec", FinalizePolicy::DefaultOff},
                               {"view_off.dec", FinalizePolicy::Strict}}) {
        const auto c = test::load_config(d, dec, policy);
        const auto a = tmp.path() / (std::string(dec) + ".a"), b = tmp.path() / (std::string(dec) + ".b");
        generate(c, lib, rules, a);
        generate(c, lib, rules, b);
        runs += 2;
        const auto files = test::list_files(a);
        if (files != test::list_files(b)) t.fail(std::string(dec) + ": file lists differ");
        for (const auto& f : files)
            if (read_file((a / f).string()) != read_file((b / f).string())) t.fail(std::string(dec) + ": " + f + " differs");
    }

    // View=0: no region of a view-menu frame anywhere in the output.
    std::size_t view_regions = 0;
    const auto off = tmp.path() / "view_off.dec.a";
    for (const auto& f : test::list_files(off)) {
        std::istringstream in(read_file((off / f).string()));
        for (std::string line; std::getline(in, line);)
            if (line.find("BEGIN-FRAME") != std::string::npos &&
                (line.find(":ViewMenu") != std::string::npos || line.find(":ZoomMenu") != std::string::npos ||
                 line.find(":MenuItem") != std::string::npos || line.find(":ZoomItem") != std::string::npos))
                ++view_regions;
    }
    if (view_regions) t.fail(std::to_string(view_regions) + " view-menu regions with View=0");

    // Every valid configuration gates exactly its own features.
    int gated = 0;
    for (auto m : oracle::enumerate_valid(*d)) {
        const auto c = from_mask(d, m);
        const auto dir = tmp.path() / ("all" + std::to_string(gated++));
        generate(c, lib, rules, dir);
        auto why = oracle::check_view_gating(c, read_file((dir / "menu.rc").string()),
                                             read_file((dir / "src/view_actions.cpp").string()));
        if (!why.empty()) t.fail(why);
    }
    return t.outcome(std::to_string(runs) + " runs byte-identical in pairs; View=0 has " +
                     std::to_string(view_regions) + " view-menu regions; gating holds on all " + std::to_string(gated) +
                     " configurations");
}

Outcome spec_round_trip() {
    Tally t;
    int fixtures = 0, random = 0;
    auto check = [&](const Configuration& c, const std::string& what) {
        try {
            const auto xml = emit_spec(c);
            const auto back = parse_spec(xml, c.diagram_ptr());
            if (!std::ranges::equal(back.states(), c.states()) || emit_spec(back) != xml) t.fail(what);
        } catch (const Error& e) {
            t.fail(what + ": " + e.what());
        }
    };
    for (auto [model, dec, policy] : {std::tuple{"view.fm", "view_all.dec", FinalizePolicy::Strict},
                                      {"view.fm", "view_off.dec", FinalizePolicy::Strict},
                                      {"view.fm", "view_zoom.dec", FinalizePolicy::DefaultOff},
                                      {"dialog.fm", "dialog_en_ok.dec", FinalizePolicy::Strict},
                                      {"dialog_panels.fm", "dialog_en_ok.dec", FinalizePolicy::DefaultOff}}) {
        check(test::load_config(test::load_model(model), dec, policy), std::string(model) + " + " + dec);
        ++fixtures;
    }
    auto synth = test::load_model("synthetic200.fm");
    {
        // Greedy completion: select each undecided feature in order, deselect on conflict.
        auto c = init_config(synth);
        for (FeatureId f = 0; f < synth->size(); ++f) {
            if (c.state(f) != FeatureState::Undecided) continue;
            auto r = apply_decision(c, f, Decision::Selected);
            if (!std::holds_alternative<Applied>(r)) r = apply_decision(c, f, Decision::Deselected);
            c = std::get<Applied>(std::move(r)).config;
        }
        check(c, "synthetic200.fm greedy completion");
        ++fixtures;
    }

    std::mt19937_64 rng(1005);
    while (random < 200) {
        auto d = shared(oracle::random_diagram(rng, {.min_features = 1, .max_features = 14, .max_constraints = 3}));
        const auto valid = oracle::enumerate_valid(*d);
        if (valid.empty()) continue;
        check(from_mask(d, valid[rng() % valid.size()]), "random configuration of\n" + to_source(*d));
        ++random;
    }
    return t.outcome(std::to_string(fixtures) + " fixture configurations, " + std::to_string(random) +
                     " random complete configurations");
}

Outcome service_replay() {
    Tally t;
    test::TempDir tmp;
    std::size_t steps = 0, conflicts = 0;
    for (const char* name : {"view_session.json", "dialog_session.json"}) {
        const auto fixture =
            nlohmann::json::parse(read_file(std::string(FMGEN_PROTOCOL_DIR) + "/" + name));
        auto r = test::replay_protocol(fixture, tmp.path());
        for (const auto& m : r.mismatches) t.fail(std::string(name) + " " + m);
        steps += r.steps;
        conflicts += r.conflicts;
    }
    std::mt19937_64 rng(1006);
    int sequences = 0;
    for (const char* model : {"view.fm", "dialog.fm", "dialog_panels.fm"}) {
        auto d = test::load_model(model);
        for (int round = 0; round < 60; ++round, ++sequences) {
            nlohmann::json fixture = {{"steps", nlohmann::json::array()}};
            fixture["steps"].push_back(
                {{"request", {{"method", "POST"}, {"path", "/sessions"}, {"body", {{"model", test::fixture_text(model)}}}}}});
            for (int k = 0; k < 25; ++k) {
                if (rng() % 5 == 0) {
                    fixture["steps"].push_back({{"request", {{"method", "POST"}, {"path", "/sessions/s1/undo"}}}});
                } else {
                    const auto f = static_cast<FeatureId>(rng() % d->size());
                    fixture["steps"].push_back(
                        {{"request",
                          {{"method", "POST"},
                           {"path", "/sessions/s1/decisions"},
                           {"body", {{"feature", d->name_of(f)}, {"value", int(rng() % 2)}}}}}});
                }
            }
            auto r = test::replay_protocol(fixture, tmp.path());
            for (const auto& m : r.mismatches) t.fail(std::string(model) + " " + m);
            steps += r.steps;
            conflicts += r.conflicts;
        }
    }
    if (conflicts == 0) t.fail("no conflicts exercised");
    return t.outcome("2 recorded fixtures and " + std::to_string(sequences) + " random sequences, " +
                     std::to_string(steps) + " requests, " + std::to_string(conflicts) +
                     " conflicts left their sessions unchanged");
}

}  // namespace
}  // namespace fmgen

int main() {
    using namespace fmgen;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"counting oracle", counting_oracle},
        {"scale check", scale_check},
        {"fixture counts", fixture_counts},
        {"propagation soundness and confluence", propagation},
        {"transformation goldens", transform_goldens},
        {"frame round-trip", frame_round_trip},
        {"pipeline determinism and gating", pipeline},
        {"spec round-trip", spec_round_trip},
        {"service replay", service_replay},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed ? 1 : 0;
}
