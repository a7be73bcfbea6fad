#pragma once

#include <stdexcept>
#include <string>

namespace phibranch {

/// Invalid problem or run configuration (bad keys, malformed values).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure could not produce a result.
class NumericError : public std::runtime_error {
public:
    enum class Kind {
        BracketFailure,
        NonMonotone,
        NonFinite,
        OutsideDomain,
        WrongForm,
        Inadmissible,
        Degenerate,
        Undetermined,
        Unsupported,
        BadSeed,
        Tangential,
    };

    NumericError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace phibranch
