#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace typicalset {

// Every failure raised by the library carries a stable category string.
// The CLI prints it as a machine-parsable prefix ("shape: ...").
class Error : public std::runtime_error {
public:
    Error(std::string_view category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    std::string_view category() const noexcept { return category_; }

private:
    std::string_view category_;
};

#define TYPICALSET_DEFINE_ERROR(Name, tag)                                     \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what) : Error(tag, what) {}           \
    };

TYPICALSET_DEFINE_ERROR(ShapeError, "shape")
TYPICALSET_DEFINE_ERROR(ParameterError, "parameter")
TYPICALSET_DEFINE_ERROR(DataError, "data")
TYPICALSET_DEFINE_ERROR(StateError, "state")
TYPICALSET_DEFINE_ERROR(InsufficientDataError, "insufficient-data")
TYPICALSET_DEFINE_ERROR(FitError, "fit")
TYPICALSET_DEFINE_ERROR(FormatError, "format")
TYPICALSET_DEFINE_ERROR(UnsupportedVersionError, "unsupported-version")
TYPICALSET_DEFINE_ERROR(CorruptionError, "corruption")
TYPICALSET_DEFINE_ERROR(IoError, "io")

#undef TYPICALSET_DEFINE_ERROR

} // namespace typicalset
