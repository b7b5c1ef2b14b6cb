#include "hadam/rng.hpp"

#include <cmath>

namespace hadam {

double Rng::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
}

double Rng::exponential()
{
    // 1 - uniform() lies in (0, 1], so the log is finite.
    return -std::log(1.0 - uniform());
}

} // namespace hadam
