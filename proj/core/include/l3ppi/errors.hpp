#pragma once

#include <stdexcept>
#include <string>

namespace l3ppi {

// Failure classes; the CLI maps them onto exit codes (config=2, data=3, compute=4).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ComputeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace l3ppi
