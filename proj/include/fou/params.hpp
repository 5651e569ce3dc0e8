#pragma once

#include <stdexcept>
#include <string>

namespace fou {

// Mean reversion rate theta > 0, volatility sigma > 0, Hurst index in (0,1).
struct FouParams {
    double theta = 1.0;
    double sigma = 1.0;
    double hurst = 0.5;

    FouParams() = default;
    FouParams(double th, double sg, double h) : theta(th), sigma(sg), hurst(h) { validate(); }

    void validate() const {
        if (!(hurst > 0.0 && hurst < 1.0))
            throw std::invalid_argument("hurst must lie in (0,1)");
        if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
        if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    }
};

inline void check_hurst(double h) {
    if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("hurst must lie in (0,1)");
}

}  // namespace fou
