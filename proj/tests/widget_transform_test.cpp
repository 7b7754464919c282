#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fmgen/widget_transform.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"

using namespace fmgen;

namespace {

// Compact one-line rendering: Kind(title)[children], validation as !Rule.
std::string shape(const WidgetNode& n) {
    std::string s = std::string(to_string(n.kind)) + "(" + n.title + ")";
    if (n.validation != Validation::None) s += "!" + std::string(to_string(n.validation));
    if (!n.children.empty()) {
        s += "[";
        for (std::size_t i = 0; i < n.children.size(); ++i) s += (i ? " " : "") + shape(n.children[i]);
        s += "]";
    }
    return s;
}

Configuration must_apply(const Configuration& c, std::string_view name, Decision v) {
    auto r = apply_decision(c, name, v);
    if (!std::holds_alternative<Applied>(r)) throw std::runtime_error("conflict on " + std::string(name));
    return std::get<Applied>(r).config;
}

void collect(const WidgetNode& n, std::vector<const WidgetNode*>& out) {
    out.push_back(&n);
    for (const auto& c : n.children) collect(c, out);
}

}  // namespace

TEST(Transform, DialogLayout) {
    auto t = transform(*test::load_model("dialog.fm"));
    EXPECT_EQ(shape(t.root()),
              "Panel(Dialog)[GroupTitle(CommonButtons) "
              "RadioGroup(Dialog)!ExactlyOne[Checkbox(English) Checkbox(German)] "
              "CheckboxGroup(Dialog)!AtLeastOne[Checkbox(Ok) Checkbox(Cancel)] Checkbox(Help)]");
    EXPECT_TRUE(t.omissions().empty());
    EXPECT_EQ(t.bindings().size(), 5u);
}

TEST(Transform, ViewLayout) {
    auto t = transform(*test::load_model("view.fm"));
    EXPECT_EQ(shape(t.root()),
              "Panel(Application)[Checkbox(View) Panel(View)["
              "CheckboxGroup(View)!AtLeastOne[Checkbox(ToolBarCheck) Checkbox(StatusBar) Checkbox(Zoom)] "
              "Panel(Zoom)[Checkbox(Zoom25) Checkbox(Zoom75) Checkbox(Zoom100) Checkbox(Zoom150)]]]");
}

TEST(Transform, SingleNodeIsBarePanel) {
    auto t = transform(parse_model("feature R { }"));
    EXPECT_EQ(shape(t.root()), "Panel(R)");
    EXPECT_TRUE(t.bindings().empty());
}

TEST(Transform, OmitChildlessMandatory) {
    auto d = test::load_model("dialog.fm");
    auto t = transform(*d, {.omit_childless_mandatory = true});
    ASSERT_EQ(t.omissions().size(), 1u);
    EXPECT_EQ(t.omissions()[0].feature, *d->find("CommonButtons"));
    EXPECT_EQ(t.find("feature:CommonButtons"), nullptr);
    EXPECT_EQ(t.panel_of(*d->find("CommonButtons")), "panel:Dialog");

    // A mandatory feature with children keeps its title either way.
    auto panels = test::load_model("dialog_panels.fm");
    auto tp = transform(*panels, {.omit_childless_mandatory = true});
    EXPECT_TRUE(tp.omissions().empty());
    EXPECT_EQ(shape(tp.root()),
              "Panel(Dialog)[GroupTitle(CommonButtons) Panel(CommonButtons)["
              "CheckboxGroup(CommonButtons)!AtLeastOne[Checkbox(Ok) Checkbox(Cancel)]] "
              "RadioGroup(Dialog)!ExactlyOne[Checkbox(English) Checkbox(German)] Checkbox(Help)]");
}

TEST(Transform, MalformedDiagramRejected) {
    DiagramBuilder b("R");
    b.add_feature(b.root(), Presence::Optional, "A");
    b.add_feature(b.root(), Presence::Optional, "A");
    auto d = std::move(b).build();
    EXPECT_THROW(transform(d), ModelError);
}

TEST(Transform, GoldensAreByteExact) {
    for (auto [model, golden] : {std::pair{"dialog.fm", "dialog.widgets.json"}, {"view.fm", "view.widgets.json"}}) {
        const std::string actual = serialize(transform(*test::load_model(model)));
        EXPECT_EQ(actual, test::golden(golden, actual)) << golden;
    }
}

TEST(Transform, SerializationShape) {
    const std::string json = serialize(transform(parse_model("feature R { optional A }")));
    EXPECT_EQ(json,
              "{\n"
              "  \"bindings\": [\n"
              "    {\n"
              "      \"condition\": \"open\",\n"
              "      \"feature\": \"A\",\n"
              "      \"widget\": \"feature:A\"\n"
              "    }\n"
              "  ],\n"
              "  \"omissions\": [],\n"
              "  \"root\": {\n"
              "    \"children\": [\n"
              "      {\n"
              "        \"children\": [],\n"
              "        \"kind\": \"Checkbox\",\n"
              "        \"ref\": \"feature:A\",\n"
              "        \"title\": \"A\",\n"
              "        \"validation\": null\n"
              "      }\n"
              "    ],\n"
              "    \"kind\": \"Panel\",\n"
              "    \"ref\": \"panel:R\",\n"
              "    \"title\": \"R\",\n"
              "    \"validation\": null\n"
              "  }\n"
              "}\n");
}

TEST(TransformProperty, EveryFeatureCoveredOnceAndDeterministic) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        auto d = oracle::random_diagram(rng, {.min_features = 1, .max_features = 40});
        const bool omit = i % 2;
        auto t = transform(d, {.omit_childless_mandatory = omit});
        EXPECT_EQ(serialize(t), serialize(transform(d, {.omit_childless_mandatory = omit})));

        std::vector<const WidgetNode*> nodes;
        collect(t.root(), nodes);
        std::set<std::string> refs;
        std::vector<int> widgets(d.size(), 0);
        for (const auto* n : nodes) {
            ASSERT_TRUE(refs.insert(n->ref).second) << "duplicate ref " << n->ref;
            if (n->kind == WidgetKind::Checkbox || n->kind == WidgetKind::GroupTitle) ++widgets[n->feature];
            if (n->kind == WidgetKind::RadioGroup) EXPECT_EQ(n->validation, Validation::ExactlyOne);
            if (n->kind == WidgetKind::CheckboxGroup) EXPECT_EQ(n->validation, Validation::AtLeastOne);
        }
        ++widgets[d.root()];
        for (const auto& o : t.omissions()) ++widgets[o.feature];
        for (FeatureId f = 0; f < d.size(); ++f) {
            EXPECT_EQ(widgets[f], 1) << d.name_of(f);
            // Features with children own exactly one panel.
            const WidgetNode* panel = t.find("panel:" + d.name_of(f));
            EXPECT_EQ(panel != nullptr, d.feature(f).has_children() || f == d.root()) << d.name_of(f);
        }
        for (const auto& b : t.bindings()) ASSERT_NE(t.find(b.widget), nullptr);
    }
}

TEST(Enablement, FreshConfigurationAllInteractiveEnabled) {
    for (auto model : {"view.fm", "dialog.fm", "dialog_panels.fm"}) {
        auto d = test::load_model(model);
        auto c = init_config(d);
        auto t = transform(*d);
        auto e = compute_enablement(t, c);
        for (const auto& b : t.bindings()) {
            EXPECT_TRUE(e.at(b.widget)) << model << " " << b.widget;
            for (auto v : {Decision::Selected, Decision::Deselected})
                EXPECT_TRUE(std::holds_alternative<Applied>(apply_decision(c, b.feature, v))) << b.widget;
        }
        if (auto title = t.find("feature:CommonButtons")) EXPECT_FALSE(e.at(title->ref));
    }
}

TEST(Enablement, DeselectViewDisablesDescendants) {
    auto d = test::load_model("view.fm");
    auto t = transform(*d);
    auto e = compute_enablement(t, must_apply(init_config(d), "View", Decision::Deselected));
    EXPECT_TRUE(e.at("feature:View"));
    EXPECT_TRUE(e.at("panel:Application"));
    for (auto ref : {"panel:View", "group:View/0", "feature:ToolBarCheck", "feature:StatusBar", "feature:Zoom",
                     "panel:Zoom", "feature:Zoom25", "feature:Zoom75", "feature:Zoom100", "feature:Zoom150"})
        EXPECT_FALSE(e.at(ref)) << ref;
}

TEST(Enablement, DeselectZoomDisablesPercentages) {
    auto d = test::load_model("view.fm");
    auto t = transform(*d);
    auto e = compute_enablement(t, must_apply(init_config(d), "Zoom", Decision::Deselected));
    for (auto ref : {"feature:Zoom25", "feature:Zoom75", "feature:Zoom100", "feature:Zoom150", "panel:Zoom"})
        EXPECT_FALSE(e.at(ref)) << ref;
    // Zoom itself stays changeable, and nothing outside its subtree is forced.
    EXPECT_TRUE(e.at("feature:Zoom"));
    EXPECT_TRUE(e.at("feature:View"));
    EXPECT_TRUE(e.at("feature:ToolBarCheck"));
}

TEST(Enablement, DiagramMismatchRejected) {
    auto t = transform(*test::load_model("view.fm"));
    EXPECT_THROW(compute_enablement(t, init_config(test::load_model("dialog.fm"))), ConfigError);
}

// Over random reachable configurations: a disabled checkbox's feature is
// forced to the same value in every valid completion of the other decisions
// and rejects the opposite decision; an enabled one accepts some decision.
TEST(EnablementProperty, ConsistentWithPropagationAndEnumeration) {
    std::mt19937_64 rng(23);
    int checked = 0;
    for (int i = 0; i < 150; ++i) {
        auto d = std::make_shared<const FeatureDiagram>(
            oracle::random_diagram(rng, {.min_features = 3, .max_features = 12, .max_constraints = 3}));
        if (count_variants(*d).is_zero()) continue;
        auto t = transform(*d);
        auto c = init_config(d);
        const auto valid = oracle::enumerate_valid(*d);
        for (int step = 0; step < 4; ++step) {
            auto e = compute_enablement(t, c);
            for (const auto& b : t.bindings()) {
                const FeatureId f = b.feature;
                const Configuration base = c.decision_on(f) ? retract_decision(c, f) : c;
                if (e.at(b.widget)) {
                    bool some = false;
                    for (auto v : {Decision::Selected, Decision::Deselected})
                        some = some || std::holds_alternative<Applied>(apply_decision(base, f, v));
                    EXPECT_TRUE(some) << b.widget;
                } else {
                    const FeatureState forced = base.state(f);
                    ASSERT_NE(forced, FeatureState::Undecided);
                    const Decision other = forced == FeatureState::Selected ? Decision::Deselected : Decision::Selected;
                    EXPECT_TRUE(std::holds_alternative<Conflict>(apply_decision(base, f, other))) << b.widget;
                    for (auto m : valid)
                        if (oracle::extends(m, base.states()))
                            EXPECT_EQ(oracle::has(m, f), forced == FeatureState::Selected);
                }
                ++checked;
            }
            // Take a random accepted step.
            if (t.bindings().empty()) break;
            const auto& b = t.bindings()[rng() % t.bindings().size()];
            auto r = apply_decision(c, b.feature, rng() % 2 ? Decision::Selected : Decision::Deselected);
            if (auto* a = std::get_if<Applied>(&r)) c = a->config;
        }
    }
    EXPECT_GT(checked, 500);
}

TEST(Notifications, RequiresAcrossPanels) {
    auto d = test::load_model("dialog_panels.fm");
    const FeatureId help = *d->find("Help"), ok = *d->find("Ok");
    // Oracle: every valid configuration with Help also has Ok.
    for (auto m : oracle::enumerate_valid(*d))
        if (oracle::has(m, help)) ASSERT_TRUE(oracle::has(m, ok));

    auto t = transform(*d);
    auto r = apply_decision(init_config(d), help, Decision::Selected);
    ASSERT_TRUE(std::holds_alternative<Applied>(r));
    auto notes = derive_notifications(t, std::get<Applied>(r).report, help, Decision::Selected);
    ASSERT_EQ(notes.size(), 1u);
    EXPECT_EQ(notes[0].panel, "panel:CommonButtons");
    EXPECT_TRUE(notes[0].cross_panel);
    EXPECT_EQ(notes[0].trigger, help);
    ASSERT_EQ(notes[0].affected.size(), 1u);
    EXPECT_EQ(notes[0].affected[0], (std::pair{ok, FeatureState::Selected}));
}

TEST(Notifications, SinglePanelConsequencesStayLocal) {
    auto d = test::load_model("view.fm");
    auto t = transform(*d);
    const FeatureId view = *d->find("View");
    auto r = apply_decision(init_config(d), view, Decision::Deselected);
    ASSERT_TRUE(std::holds_alternative<Applied>(r));
    EXPECT_TRUE(derive_notifications(t, std::get<Applied>(r).report, view, Decision::Deselected).empty());

    auto dialog = test::load_model("dialog.fm");
    auto td = transform(*dialog);
    auto rd = apply_decision(init_config(dialog), "English", Decision::Selected);
    EXPECT_TRUE(derive_notifications(td, std::get<Applied>(rd).report, *dialog->find("English"), Decision::Selected)
                    .empty());
}

TEST(Notifications, UpwardConsequenceIsCrossPanel) {
    // Selecting Zoom25 forces Zoom and View, which sit in outer panels.
    auto d = test::load_model("view.fm");
    auto t = transform(*d);
    const FeatureId z = *d->find("Zoom25");
    auto r = apply_decision(init_config(d), z, Decision::Selected);
    auto notes = derive_notifications(t, std::get<Applied>(r).report, z, Decision::Selected);
    ASSERT_EQ(notes.size(), 2u);
    EXPECT_EQ(notes[0].panel, "panel:Application");
    EXPECT_EQ(notes[1].panel, "panel:View");
    EXPECT_EQ(notes[0].affected[0].first, *d->find("View"));
    EXPECT_EQ(notes[1].affected[0].first, *d->find("Zoom"));
}

TEST(Transform, CopiesAndMovesKeepRefLookup) {
    auto d = test::load_model("view.fm");
    WidgetTree original = transform(*d);
    WidgetTree copy = original;
    WidgetTree moved = std::move(original);
    WidgetTree assigned;
    assigned = copy;
    for (const WidgetTree* t : {&copy, &moved, &assigned}) {
        EXPECT_EQ(t->find("panel:Application"), &t->root());
        EXPECT_EQ(serialize(*t), serialize(copy));
        const auto c = init_config(d);
        auto r = std::get<Applied>(apply_decision(c, "Zoom", Decision::Selected));
        const auto n = derive_notifications(*t, r.report, d->require("Zoom"), Decision::Selected);
        ASSERT_EQ(n.size(), 1u);
        EXPECT_EQ(n[0].panel, "panel:Application");
    }
}
