#pragma once
#include <string>
#include <vector>

#include "roughvol/errors.hpp"

namespace roughvol {

// Uniformly sampled log prices with step delta; the sole observable input.
struct PriceSeries {
    std::vector<double> samples; // log price at t_i = i * delta
    double delta = 0.0;          // sampling interval, in units of the horizon
    std::string label;

    double horizon() const { return (static_cast<double>(samples.size()) - 1.0) * delta; }

    void validate() const;
};

} // namespace roughvol
