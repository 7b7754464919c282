#pragma once

#include <cstdlib>
#include <fstream>
#include <memory>
#include <string>

#include "fmgen/feature_model.hpp"
#include "fmgen/text.hpp"

namespace fmgen::test {

inline std::string fixture_path(const std::string& name) { return std::string(FMGEN_FIXTURES_DIR) + "/" + name; }
inline std::string golden_path(const std::string& name) { return std::string(FMGEN_GOLDEN_DIR) + "/" + name; }

inline std::string fixture_text(const std::string& name) { return read_file(fixture_path(name)); }

inline std::shared_ptr<const FeatureDiagram> load_model(const std::string& name) {
    return std::make_shared<const FeatureDiagram>(parse_model(fixture_text(name)));
}

/// Golden file contents, or the empty string when missing. With
/// FMGEN_UPDATE_GOLDENS set, `actual` is written first.
inline std::string golden(const std::string& name, const std::string& actual) {
    if (std::getenv("FMGEN_UPDATE_GOLDENS")) std::ofstream(golden_path(name), std::ios::binary) << actual;
    try {
        return read_file(golden_path(name));
    } catch (const Error&) {
        return {};
    }
}

}  // namespace fmgen::test
