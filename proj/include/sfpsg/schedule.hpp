#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "sfpsg/errors.hpp"

namespace sfpsg {

// Power-law step sizes 1/(k+1)^e. The two roles carry different admissible
// exponent ranges: the belief step must be square-summable but not summable
// (e in (0.5, 1]); the Q step only needs to vanish and not be summable
// (e in (0, 1]), since the model-based Q update carries no sampling noise.
class StepSchedule {
public:
    enum class Role { Alpha, Beta };

    static StepSchedule alpha(double exponent) { return StepSchedule(Role::Alpha, exponent); }
    static StepSchedule beta(double exponent) { return StepSchedule(Role::Beta, exponent); }

    double value(std::int64_t k) const {
        return 1.0 / std::pow(static_cast<double>(k) + 1.0, exponent_);
    }

    double exponent() const { return exponent_; }
    Role role() const { return role_; }

private:
    StepSchedule(Role role, double exponent) : role_(role), exponent_(exponent) {
        if (role == Role::Alpha && !(exponent > 0.5 && exponent <= 1.0))
            throw DomainError("alpha exponent must lie in (0.5, 1], got " +
                              std::to_string(exponent));
        if (role == Role::Beta && !(exponent > 0.0 && exponent <= 1.0))
            throw DomainError("beta exponent must lie in (0, 1], got " +
                              std::to_string(exponent));
    }

    Role role_;
    double exponent_;
};

}  // namespace sfpsg
