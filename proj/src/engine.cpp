#include "polymer/engine.hpp"

namespace polymer {

DirectedPath geodesic_backtrace(const DpTable& fwd) {
    if (fwd.direction != Direction::Forward || fwd.mode != Mode::ZeroTemperature)
        throw PreconditionViolated("geodesic_backtrace: needs a zero-temperature forward table");
    if (fwd.value() == kNegInf)
        throw PreconditionViolated("geodesic_backtrace: no admissible path");
    const int len = fwd.v.t - fwd.u.t;
    std::vector<int> positions(static_cast<size_t>(len) + 1);
    positions[static_cast<size_t>(len)] = fwd.v.x;
    int x = fwd.v.x;
    for (int t = fwd.v.t; t > fwd.u.t; --t) {
        const double left = fwd.get(x - 1, t - 1);
        const double right = fwd.get(x + 1, t - 1);
        // left >= right keeps the leftmost geodesic total, not almost-sure.
        x = left >= right ? x - 1 : x + 1;
        positions[static_cast<size_t>(t - 1 - fwd.u.t)] = x;
    }
    return DirectedPath::from_positions(fwd.u.t, positions);
}

} // namespace polymer
