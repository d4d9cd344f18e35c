#pragma once
#include <stdexcept>
#include <string>

namespace roughvol {

// Error taxonomy mapped to CLI exit codes: data = 2, numeric = 3, config = 4.
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace roughvol
