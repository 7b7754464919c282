#pragma once

// Frames are text templates with named, list-valued slots. Instances fill
// slots with literal text or nested instances; expansion wraps every nested
// instance and every literal in comment marker lines so the instance tree can
// be read back from (edited) output.
//
// Frame source format:
//
//   frame Menu (title, items) <<<END
//   menu "<<title>>" {
//   <<items>>
//   }
//   END
//
// `<<<<` in a body stands for a literal `<<`.

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fmgen/errors.hpp"

namespace fmgen {

struct BodyPart {
    bool is_slot = false;
    std::string text;  ///< literal text, or the slot name

    friend bool operator==(const BodyPart&, const BodyPart&) = default;
};

struct Frame {
    std::string name;
    std::vector<std::string> slots;  ///< declaration order
    std::vector<BodyPart> body;

    bool has_slot(std::string_view slot) const;

    friend bool operator==(const Frame&, const Frame&) = default;
};

class FrameLibrary {
public:
    /// Throws FrameError on a duplicate name or an invalid frame.
    void add(Frame frame);

    const Frame* find(std::string_view name) const;
    const Frame& require(std::string_view name) const;
    const std::vector<Frame>& frames() const noexcept { return frames_; }
    bool empty() const noexcept { return frames_.empty(); }

    friend bool operator==(const FrameLibrary& a, const FrameLibrary& b) { return a.frames_ == b.frames_; }

private:
    std::vector<Frame> frames_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

FrameLibrary parse_frames(std::string_view text);
/// Frame body from template text with `<<slot>>` placeholders.
std::vector<BodyPart> parse_body(std::string_view text);
std::string serialize_frames(const FrameLibrary& lib);

struct FrameInstance;

/// Literal text or a nested instance.
class SlotEntry {
public:
    static SlotEntry literal(std::string text);
    static SlotEntry nested(FrameInstance instance);

    bool is_literal() const noexcept { return nested_.empty(); }
    const std::string& text() const noexcept { return text_; }
    const FrameInstance& instance() const { return nested_.at(0); }
    FrameInstance& instance() { return nested_.at(0); }

    friend bool operator==(const SlotEntry& a, const SlotEntry& b);

private:
    std::string text_;
    std::vector<FrameInstance> nested_;  // zero or one
};

using Fills = std::map<std::string, std::vector<SlotEntry>>;

struct FrameInstance {
    std::string frame;
    Fills fills;  ///< slots with no entries are absent

    friend bool operator==(const FrameInstance&, const FrameInstance&) = default;
};

/// Checks frames and slots against the library, recursively; drops empty
/// fill lists.
FrameInstance instantiate(const FrameLibrary& lib, std::string_view frame, Fills fills = {});

/// Instance description with nodes named by id; fills refer to other nodes.
struct NodeRef {
    std::string id;
};
struct InstanceNode {
    std::string frame;
    std::map<std::string, std::vector<std::variant<std::string, NodeRef>>> fills;
};

/// Resolves the node graph from `root` into an instance tree. Errors on an
/// unknown node, a cycle, or a node that is used more than once.
FrameInstance instantiate_graph(const FrameLibrary& lib, const std::map<std::string, InstanceNode>& nodes,
                                std::string_view root);

/// Marker line: `<prefix> BEGIN-FRAME <path>[ <suffix>]`. Literal fills use
/// BEGIN-TEXT / END-TEXT. The root path is the frame name; nested entries
/// append `/slot[i]` and, for instances, `:Frame`.
struct MarkerConfig {
    std::string prefix = "//";
    std::string suffix;
};

struct LiteralSpan {
    std::string path;
    std::size_t offset;  ///< byte offset of the literal in the output
    std::size_t length;
};

struct Expansion {
    std::string text;
    std::vector<LiteralSpan> literals;
};

std::string expand(const FrameInstance& instance, const FrameLibrary& lib, const MarkerConfig& markers = {});
Expansion expand_with_map(const FrameInstance& instance, const FrameLibrary& lib, const MarkerConfig& markers = {});

/// Rebuilds the instance tree from expanded text. Literal content is read
/// from the text; everything else must match the library byte for byte.
FrameInstance extract(std::string_view text, const FrameLibrary& lib, const MarkerConfig& markers = {});

}  // namespace fmgen
