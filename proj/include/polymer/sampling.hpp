#pragma once

#include <optional>

#include "polymer/engine.hpp"
#include "polymer/rng.hpp"

namespace polymer {

// An exact draw from the quenched polymer measure Q, with its log-probability
// log Q({path}) = H(path) - F(u;v).
struct PolymerSample {
    DirectedPath path;
    double log_density = 0.0;
};

// Exact backward sampling from a cached positive-temperature forward table:
// stepping down from v, each predecessor is chosen with probability
// proportional to exp(forward value). One table amortizes any number of
// draws on the same environment.
PolymerSample sample_polymer(const DpTable& fwd, CounterRng& rng);

template <class Field>
PolymerSample sample_polymer(Point u, Point v, const Field& field, CounterRng& rng) {
    const DpTable fwd = forward_table(Query{.u = u, .v = v, .mode = Mode::PositiveTemperature}, field);
    return sample_polymer(fwd, rng);
}

inline DirectedPath leftmost_geodesic(const DpTable& fwd) { return geodesic_backtrace(fwd); }

template <class Field>
DirectedPath leftmost_geodesic(Point u, Point v, const Field& field) {
    const DpTable fwd = forward_table(Query{.u = u, .v = v, .mode = Mode::ZeroTemperature}, field);
    return geodesic_backtrace(fwd);
}

// Monotone coupling of Q^{u;v} and Q^{u2;v2} for ordered endpoint pairs:
// the left path stays weakly left of the right path at every shared height,
// and the set of heights where they coincide is an interval.
struct CoupledPair {
    DirectedPath left;
    DirectedPath right;
    std::optional<Point> meet_low;  // lowest common point, when any
    std::optional<Point> meet_high; // highest common point, when any
};

// Caches the DP tables for repeated coupled draws. Stage 1 couples
// (u -> v, u2 -> v) by independent sampling until the first meeting height,
// then swaps suffixes; stage 2 couples the v-versus-v2 endpoints by the
// time-reversed construction. At zero temperature the pair is the two
// leftmost geodesics and the coupling is trivial.
class CoupledSampler {
public:
    template <class Field>
    CoupledSampler(Point u, Point v, Point u2, Point v2, const Field& field,
                   Mode mode = Mode::PositiveTemperature)
        : u_(u), v_(v), u2_(u2), v2_(v2), mode_(mode) {
        validate_endpoints();
        if (mode == Mode::ZeroTemperature) {
            table_uv_ = forward_table(Query{.u = u, .v = v, .mode = mode}, field);
            table_u2v2_ = forward_table(Query{.u = u2, .v = v2, .mode = mode}, field);
            return;
        }
        table_uv_ = forward_table(Query{.u = u, .v = v, .mode = mode}, field);
        table_u2v2_ = forward_table(Query{.u = u2, .v = v2, .mode = mode}, field);
        if (feasible(u2, v))
            table_u2v_ = forward_table(Query{.u = u2, .v = v, .mode = mode}, field);
        // When u2 -> v is infeasible the two cones are disjoint: the paths
        // can never meet and independent draws already satisfy the coupling.
    }

    CoupledPair draw(CounterRng& rng) const;

private:
    void validate_endpoints() const;

    Point u_, v_, u2_, v2_;
    Mode mode_;
    std::optional<DpTable> table_uv_;
    std::optional<DpTable> table_u2v_;
    std::optional<DpTable> table_u2v2_;
};

template <class Field>
CoupledPair coupled_pair(Point u, Point v, Point u2, Point v2, const Field& field,
                         CounterRng& rng, Mode mode = Mode::PositiveTemperature) {
    return CoupledSampler(u, v, u2, v2, field, mode).draw(rng);
}

// The maximal interval of heights where the two coupled paths coincide;
// empty with length 0 when they are disjoint.
struct CoalescenceSummary {
    std::optional<std::pair<int, int>> overlap_interval; // inclusive heights
    int overlap_length = 0;                              // number of shared heights
};

CoalescenceSummary coalescence_summary(const CoupledPair& pair);

} // namespace polymer
