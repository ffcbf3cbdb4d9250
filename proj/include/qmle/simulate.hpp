#pragma once

#include <cstdint>

#include "qmle/innovations.hpp"
#include "qmle/model.hpp"

namespace qmle {

struct SimConfig {
    long n = 0;
    long burn_in = -1;         // -1: 2 * lag_truncation
    long lag_truncation = -1;  // -1: model's suggested truncation
    std::uint64_t seed = 0;
    bool override_region_check = false;
};

/// `count` i.i.d. innovation vectors as rows; reproducible given seed.
MatrixXd draw_innovations(const InnovationSpec& innov, int p, long count, std::uint64_t seed);

/// Iterates X_t = M(past) xi_t + f(past) from a zero past for burn_in + n
/// steps and returns the last n. Requires theta inside the r = 2 stationarity
/// region unless the override flag is set.
Series simulate_path(const Model& model, const ParamVector& theta, const InnovationSpec& innov,
                     const SimConfig& cfg);

}  // namespace qmle
