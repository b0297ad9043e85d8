#pragma once

#include <vector>

#include "layoutkit/model.hpp"

namespace layoutkit {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Plain Adam over a Parameters set. Moments are kept per parameter in item
// order; step() consumes the accumulated grads and zeroes them.
class Adam {
public:
    Adam(Parameters& params, const AdamConfig& cfg);

    void step();
    int64_t steps_taken() const { return t_; }

private:
    Parameters& params_;
    AdamConfig cfg_;
    int64_t t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace layoutkit
