#include "layoutkit/optim.hpp"

#include <cmath>

namespace layoutkit {

Adam::Adam(Parameters& params, const AdamConfig& cfg) : params_(params), cfg_(cfg) {
    for (const auto& [name, t] : params_.items()) {
        m_.emplace_back(t.data().size(), 0.0);
        v_.emplace_back(t.data().size(), 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t pi = 0; pi < params_.items().size(); ++pi) {
        auto& t = params_.items()[pi].second;
        if (!t.has_grad()) continue;
        auto& data = t.data();
        auto& grad = t.grad();
        auto& m = m_[pi];
        auto& v = v_[pi];
        for (size_t i = 0; i < data.size(); ++i) {
            const double g = grad[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            data[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
        t.zero_grad();
    }
}

}  // namespace layoutkit
