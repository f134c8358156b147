#pragma once

#include <stdexcept>
#include <string>

namespace moetrack {

// Precondition / invariant breakage inside the library (CLI exit code 2).
struct contract_error : std::logic_error {
    using std::logic_error::logic_error;
};

// Bad user configuration or malformed input files (CLI exit code 1).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A verification suite (gradcheck, oracle comparison) failed (CLI exit code 3).
struct verification_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define MTK_REQUIRE(cond, msg)                                         \
    do {                                                               \
        if (!(cond)) throw ::moetrack::contract_error(std::string(msg)); \
    } while (0)

#define MTK_CONFIG_REQUIRE(cond, msg)                                  \
    do {                                                               \
        if (!(cond)) throw ::moetrack::config_error(std::string(msg));   \
    } while (0)

} // namespace moetrack
