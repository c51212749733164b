#pragma once

#include "sovdebt/model.hpp"

namespace sovdebt::testing {

inline Model base_model() {
    ModelParams p;  // r 0.05, lambda 0.2, mu 0.02, sigma 0.3, B 5, x* 1.5, v_max 0.5
    return Model{p, CostSpec::barrier(0.5, 0.1, 0.5), RiskSpec::power(1.0, 0.5, 1.5),
                 SalvageSpec::linear(0.4, 1.5)};
}

inline Model regime1_model() {
    ModelParams p{0.1, 0.2, 0.02, 0.1, 100.0, 1.5, 0.1};
    return Model{p, CostSpec::barrier(0.1, 0.1, 0.1), RiskSpec::power(0.2, 0.5, 1.5),
                 SalvageSpec::linear(0.2, 1.5)};
}

inline Model regime2_model() {
    ModelParams p{0.05, 0.2, 0.02, 0.3, 5.0, 8.0, 0.5};
    return Model{p, CostSpec::barrier(0.5, 0.1, 0.5), RiskSpec::power(1.0, 3.0, 8.0),
                 SalvageSpec::linear(0.4, 8.0)};
}

}  // namespace sovdebt::testing
