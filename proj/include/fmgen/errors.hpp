#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fmgen {

/// Base of every domain error thrown by the library. The CLI maps these to
/// exit code 1; anything else escaping is a bug.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Source position for text formats. Zero means "unknown".
struct SourcePos {
    std::size_t line = 0;
    std::size_t column = 0;
};

std::string format_pos(const SourcePos& pos);

class ModelError : public Error {
public:
    enum class Kind { Syntax, DuplicateName, GroupArity, UnknownConstraintTarget, Malformed };

    ModelError(Kind kind, const std::string& message, SourcePos pos = {})
        : Error(pos.line ? format_pos(pos) + ": " + message : message), kind_(kind), pos_(pos) {}

    Kind kind() const noexcept { return kind_; }
    const SourcePos& pos() const noexcept { return pos_; }

private:
    Kind kind_;
    SourcePos pos_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class FrameError : public Error {
public:
    using Error::Error;
};

class GeneratorError : public Error {
public:
    using Error::Error;
};

}  // namespace fmgen
