#pragma once

#include <bit>
#include <functional>
#include <optional>

#include "polymer/engine.hpp"

namespace polymer {

// Quenched path events: finite boolean combinations of two primitive kinds,
// "the path avoids segment S" and "the path position at height h lies in
// [lo, hi]". Probabilities are exact ratios of masked to unmasked partition
// functions. A pure conjunction of primitives compiles to a single mask (any
// primitive count); other combinations are resolved by inclusion-exclusion
// over at most 8 primitives.
struct EventSpec {
    struct Primitive {
        enum class Kind { AvoidsSegment, PositionIn };
        Kind kind = Kind::AvoidsSegment;
        Segment seg;
        int height = 0;
        int lo = 0;
        int hi = 0;

        static Primitive avoids(Segment s) { return Primitive{Kind::AvoidsSegment, s, 0, 0, 0}; }
        static Primitive position_in(int height, int lo, int hi) {
            return Primitive{Kind::PositionIn, Segment{}, height, lo, hi};
        }
    };

    std::vector<Primitive> primitives;
    bool pure_conjunction = false;
    std::vector<uint16_t> satisfying; // assignments (bit i <=> primitive i holds);
                                      // unused when pure_conjunction

    static EventSpec avoids(Segment s);
    static EventSpec hits(Segment s);
    static EventSpec position_in(int height, int lo, int hi);
    // Event that every primitive holds; maskable directly, any count.
    static EventSpec all_of(std::vector<Primitive> prims);
    // General boolean combination given by a truth function over assignments.
    static EventSpec from_formula(std::vector<Primitive> prims,
                                  const std::function<bool(uint16_t)>& truth);
};

namespace detail {

inline void apply_primitive_mask(Mask& mask, const EventSpec::Primitive& p) {
    if (p.kind == EventSpec::Primitive::Kind::AvoidsSegment)
        mask.excluded.push_back(p.seg);
    else
        mask.windows.push_back(Mask::Window{p.height, p.lo, p.hi});
}

inline bool path_satisfies(const std::vector<int>& positions, int t0,
                           const EventSpec::Primitive& p) {
    const int t1 = t0 + static_cast<int>(positions.size()) - 1;
    if (p.kind == EventSpec::Primitive::Kind::PositionIn) {
        if (p.height < t0 || p.height > t1)
            return false;
        const int x = positions[static_cast<size_t>(p.height - t0)];
        return x >= p.lo && x <= p.hi;
    }
    if (p.seg.axis == Segment::Axis::Vertical) {
        const int a = std::max(p.seg.lo, t0);
        const int b = std::min(p.seg.hi, t1);
        for (int t = a; t <= b; ++t)
            if (positions[static_cast<size_t>(t - t0)] == p.seg.fixed)
                return false;
        return true;
    }
    if (p.seg.fixed < t0 || p.seg.fixed > t1)
        return true;
    const int x = positions[static_cast<size_t>(p.seg.fixed - t0)];
    return x < p.seg.lo || x > p.seg.hi;
}

} // namespace detail

// Exact quenched probability Q(event) = exp(F_event - F) at positive
// temperature; at zero temperature, the indicator that the leftmost geodesic
// satisfies the event. The overload taking base_free_energy reuses a
// previously computed F for the unmasked query.
template <class Field>
double event_probability(const Query& q, const Field& field, const EventSpec& ev,
                         std::optional<double> base_free_energy) {
    validate_query(q);
    const size_t k = ev.primitives.size();
    if (!ev.pure_conjunction && ev.satisfying.empty())
        return 0.0;

    if (q.mode == Mode::ZeroTemperature) {
        const DpTable table = forward_table(q, field);
        if (table.value() == kNegInf)
            throw PreconditionViolated("event_probability: no admissible path");
        const std::vector<int> positions = geodesic_backtrace(table).positions();
        if (ev.pure_conjunction) {
            for (const auto& p : ev.primitives)
                if (!detail::path_satisfies(positions, q.u.t, p))
                    return 0.0;
            return 1.0;
        }
        uint16_t assignment = 0;
        for (size_t i = 0; i < k; ++i)
            if (detail::path_satisfies(positions, q.u.t, ev.primitives[i]))
                assignment |= static_cast<uint16_t>(1u << i);
        for (uint16_t s : ev.satisfying)
            if (s == assignment)
                return 1.0;
        return 0.0;
    }

    const double base = base_free_energy ? *base_free_energy : free_energy(q, field);
    if (base == kNegInf)
        throw PreconditionViolated("event_probability: no admissible path");

    if (ev.pure_conjunction) {
        Query masked = q;
        for (const auto& p : ev.primitives)
            detail::apply_primitive_mask(masked.mask, p);
        const double fe = free_energy(masked, field);
        return fe == kNegInf ? 0.0 : std::min(1.0, std::exp(fe - base));
    }

    if (k > 8)
        throw UnsupportedEvent("event_probability: more than 8 primitives in a "
                               "non-conjunctive combination");
    if (ev.satisfying.size() == (size_t{1} << k))
        return 1.0;

    auto prob_of_conjunction = [&](uint16_t subset) {
        if (subset == 0)
            return 1.0;
        Query masked = q;
        for (size_t i = 0; i < k; ++i)
            if (subset & (1u << i))
                detail::apply_primitive_mask(masked.mask, ev.primitives[i]);
        const double fe = free_energy(masked, field);
        return fe == kNegInf ? 0.0 : std::exp(fe - base);
    };

    std::vector<double> w(size_t{1} << k, -1.0); // memoized conjunction probabilities
    auto w_of = [&](uint16_t subset) {
        double& slot = w[subset];
        if (slot < 0.0)
            slot = prob_of_conjunction(subset);
        return slot;
    };

    // P(exact assignment tau) = sum_{U subset of zeros(tau)} (-1)^|U| w(ones(tau) | U).
    double total = 0.0;
    const uint16_t full = static_cast<uint16_t>((1u << k) - 1);
    for (uint16_t tau : ev.satisfying) {
        const uint16_t zeros = static_cast<uint16_t>(full & ~tau);
        uint16_t sub = zeros;
        for (;;) {
            const double sign = (std::popcount(sub) % 2 == 0) ? 1.0 : -1.0;
            total += sign * w_of(static_cast<uint16_t>(tau | sub));
            if (sub == 0)
                break;
            sub = static_cast<uint16_t>((sub - 1) & zeros);
        }
    }
    return std::clamp(total, 0.0, 1.0);
}

template <class Field>
double event_probability(const Query& q, const Field& field, const EventSpec& ev) {
    return event_probability(q, field, ev, std::nullopt);
}

} // namespace polymer
