#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "fmgen/generator.hpp"

namespace fmgen {

namespace {

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string_view value_of(FeatureState s) {
    switch (s) {
    case FeatureState::Selected: return "1";
    case FeatureState::Deselected: return "0";
    case FeatureState::Undecided: return "?";
    }
    return "?";
}

void emit_feature(const Configuration& c, FeatureId id, std::size_t depth, std::string& out) {
    const FeatureDiagram& d = c.diagram();
    const std::string indent(2 * depth, ' ');
    out += indent + "<feature name=\"" + xml_escape(d.name_of(id)) + "\" value=\"" +
           std::string(value_of(c.state(id))) + "\"";
    std::vector<FeatureId> children;
    for (FeatureId k = id + 1; k < d.subtree_end(id); ++k)
        if (d.feature(k).parent == id) children.push_back(k);
    if (children.empty()) {
        out += "/>\n";
        return;
    }
    out += ">\n";
    for (FeatureId k : children) emit_feature(c, k, depth + 1, out);
    out += indent + "</feature>\n";
}

}  // namespace

std::string emit_spec(const Configuration& config, SpecMode mode) {
    if (mode == SpecMode::Final) {
        auto st = status(config);
        if (!st.complete) throw IncompleteConfiguration(std::move(st.obligations));
    }
    const FeatureDiagram& d = config.diagram();
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<specification model=\"" + xml_escape(d.name()) + "\">\n";
    emit_feature(config, d.root(), 1, out);
    out += "</specification>\n";
    return out;
}

Configuration parse_spec(std::string_view xml, std::shared_ptr<const FeatureDiagram> diagram) {
    namespace pt = boost::property_tree;
    const FeatureDiagram& d = *diagram;
    pt::ptree tree;
    try {
        std::istringstream in{std::string(xml)};
        pt::read_xml(in, tree, pt::xml_parser::no_comments);
    } catch (const pt::xml_parser_error& e) {
        throw GeneratorError("malformed XML at line " + std::to_string(e.line()) + ": " + e.message());
    }

    auto spec = tree.get_child_optional("specification");
    if (!spec || tree.size() != 1) throw GeneratorError("expected a single <specification> root element");
    if (auto model = spec->get_optional<std::string>("<xmlattr>.model"); model && *model != d.name())
        throw GeneratorError("specification is for model " + *model + ", not " + d.name());

    std::vector<std::optional<Decision>> values(d.size());
    auto walk = [&](auto& self, const pt::ptree& node, FeatureId parent) -> void {
        for (const auto& [key, child] : node) {
            if (key == "<xmlattr>") continue;
            if (key != "feature") throw GeneratorError("unexpected element <" + key + ">");
            auto name = child.template get_optional<std::string>("<xmlattr>.name");
            auto value = child.template get_optional<std::string>("<xmlattr>.value");
            if (!name) throw GeneratorError("<feature> element without a name attribute");
            auto id = d.find(*name);
            if (!id) throw GeneratorError("unknown feature " + *name);
            if (values[*id]) throw GeneratorError("feature " + *name + " appears more than once");
            if (d.feature(*id).parent != parent)
                throw GeneratorError("feature " + *name + " is nested under " +
                                     (parent == kNoFeature ? std::string("<specification>") : d.name_of(parent)) +
                                     " instead of " +
                                     (d.feature(*id).parent == kNoFeature ? std::string("<specification>")
                                                                          : d.name_of(d.feature(*id).parent)));
            if (!value || (*value != "0" && *value != "1"))
                throw GeneratorError("feature " + *name + " needs value=\"0\" or value=\"1\"");
            values[*id] = *value == "1" ? Decision::Selected : Decision::Deselected;
            self(self, child, *id);
        }
    };
    walk(walk, *spec, kNoFeature);

    std::string missing;
    std::vector<Decision> assignment;
    for (FeatureId f = 0; f < d.size(); ++f) {
        if (!values[f]) missing += (missing.empty() ? "" : ", ") + d.name_of(f);
        assignment.push_back(values[f].value_or(Decision::Deselected));
    }
    if (!missing.empty()) throw GeneratorError("missing feature(s): " + missing);

    Configuration c = unchecked_assignment(std::move(diagram), assignment);
    auto st = status(c);
    if (!st.complete) {
        std::string msg = "invalid configuration:";
        for (const auto& o : st.obligations) msg += "\n  " + o.message;
        throw GeneratorError(msg);
    }
    return c;
}

}  // namespace fmgen
