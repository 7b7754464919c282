#pragma once

// From a complete configuration to files: the XML specification, rule files
// that map feature selections to frame fills, generation with a MANIFEST,
// and reading hand edits back out of generated files.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fmgen/config_engine.hpp"
#include "fmgen/frame_engine.hpp"

namespace fmgen {

enum class SpecMode {
    Final,    ///< requires a complete configuration
    Preview,  ///< any configuration; undecided features get value="?"
};

/// `<specification model="Root">` with one nested `<feature name value>`
/// element per feature in document order. Throws IncompleteConfiguration in
/// Final mode unless status(config) is complete.
std::string emit_spec(const Configuration& config, SpecMode mode = SpecMode::Final);

/// Every feature becomes a user decision. Throws GeneratorError on
/// malformed XML, unknown, missing, duplicate or misplaced features, and on
/// assignments that are not valid configurations (naming the obligations).
Configuration parse_spec(std::string_view xml, std::shared_ptr<const FeatureDiagram> diagram);

// Rule files:
//
//   output menu.rc root MainMenu markers //
//   when View = 1 : fill menus with ViewMenu
//   when Zoom25 = 1 : fill menus/ViewMenu/entries/ZoomMenu/sizes with ZoomItem(percent="25")
//   fill menus with text "literal"
//
// A slot path alternates slot names and frame names. A frame segment picks
// the most recent instance of that frame in the slot, or the i-th one
// (counting instances of that frame only) when written `Frame[i]`.

struct Guard {
    std::string feature;
    Decision value;

    friend bool operator==(const Guard&, const Guard&) = default;
};

struct FillAction {
    std::optional<Guard> guard;
    std::string slot_path;
    bool is_text = false;
    std::string text;   ///< when is_text
    std::string frame;  ///< otherwise
    std::vector<std::pair<std::string, std::string>> params;
    std::size_t line = 0;

    friend bool operator==(const FillAction& a, const FillAction& b) {
        return a.guard == b.guard && a.slot_path == b.slot_path && a.is_text == b.is_text && a.text == b.text &&
               a.frame == b.frame && a.params == b.params;
    }
};

struct OutputRule {
    std::string path;
    std::string root_frame;
    MarkerConfig markers;
    std::vector<FillAction> actions;
    std::size_t line = 0;

    friend bool operator==(const OutputRule& a, const OutputRule& b) {
        return a.path == b.path && a.root_frame == b.root_frame && a.markers.prefix == b.markers.prefix &&
               a.markers.suffix == b.markers.suffix && a.actions == b.actions;
    }
};

struct RuleSet {
    std::vector<OutputRule> outputs;

    friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

/// Syntax and output-path checks only; names are resolved by bind().
RuleSet parse_rules(std::string_view text);
std::string serialize_rules(const RuleSet& rules);

/// Resolves features, frames, slots and parameters. Throws GeneratorError.
void bind(const RuleSet& rules, const FeatureDiagram& diagram, const FrameLibrary& lib);

/// Hand edits carried from generated files into later generate runs.
struct OverlayEdit {
    std::string file;  ///< output path
    std::string path;  ///< literal marker path
    std::string text;

    friend bool operator==(const OverlayEdit&, const OverlayEdit&) = default;
};

struct Overlay {
    std::vector<OverlayEdit> edits;  ///< sorted by (file, path)

    friend bool operator==(const Overlay&, const Overlay&) = default;
};

std::string serialize_overlay(const Overlay& overlay);
Overlay parse_overlay(std::string_view json);

struct ManifestEntry {
    std::string path;
    std::size_t bytes = 0;
    std::string digest;  ///< SHA-256, lowercase hex

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
    std::string inputs_digest;
    std::vector<ManifestEntry> entries;  ///< sorted by path

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

std::string serialize_manifest(const Manifest& manifest);
Manifest parse_manifest(std::string_view text);

inline constexpr const char* kManifestFile = "MANIFEST";
inline constexpr const char* kSpecFile = "specification.xml";
inline constexpr const char* kOverlayFile = "OVERLAY";

/// Instance tree for every output, rules applied in order, then the overlay.
/// Overlay edits whose literal no longer exists are returned in `stale`.
struct BuiltOutputs {
    std::vector<std::pair<const OutputRule*, FrameInstance>> instances;
    std::vector<OverlayEdit> stale;
};
BuiltOutputs build_outputs(const Configuration& config, const FrameLibrary& lib, const RuleSet& rules,
                           const Overlay* overlay = nullptr);

struct GenerateResult {
    Manifest manifest;
    std::vector<OverlayEdit> stale_overlay;
};

/// Writes every output file, specification.xml and MANIFEST under `out`.
/// Uses `out/OVERLAY` when present. Throws IncompleteConfiguration,
/// GeneratorError or FrameError.
GenerateResult generate(const Configuration& config, const FrameLibrary& lib, const RuleSet& rules,
                        const std::filesystem::path& out);

struct LiteralChange {
    std::string file;
    std::string path;
    std::string generated;
    std::string edited;
};

struct RoundtripReport {
    std::vector<LiteralChange> changes;

    Overlay to_overlay() const;
};

/// Compares the generated files under `out` with what the last generate run
/// wrote and reports edited literals. Throws GeneratorError naming the file
/// when markers or frame text were damaged, or when the inputs changed.
RoundtripReport roundtrip_update(const std::filesystem::path& out, std::shared_ptr<const FeatureDiagram> diagram,
                                 const FrameLibrary& lib, const RuleSet& rules);

/// Merges the report into `out/OVERLAY` (new edits win) and returns the result.
Overlay export_overlay(const std::filesystem::path& out, const RoundtripReport& report);

/// Literal entries of an instance with their marker paths, in expansion order.
std::vector<std::pair<std::string, std::string>> literal_paths(const FrameInstance& instance,
                                                               const FrameLibrary& lib);

}  // namespace fmgen
