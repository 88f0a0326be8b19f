#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "polymer/environment.hpp"
#include "polymer/errors.hpp"
#include "polymer/lattice.hpp"

namespace polymer {

// One dynamic program serves both temperatures through the semiring
// dictionary: (log-sum-exp, +) computes the free energy F, (max, +) the last
// passage time L. Unreachable or masked cells carry -inf, which composes with
// both semirings without special cases.

enum class Mode { PositiveTemperature, ZeroTemperature };
enum class Geometry { HalfSpace, FullSpace };
enum class Direction { Forward, Backward };

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double logaddexp(double a, double b) {
    if (a == kNegInf)
        return b;
    if (b == kNegInf)
        return a;
    const double m = a > b ? a : b;
    return m + std::log1p(std::exp(a > b ? b - a : a - b));
}

inline double combine(Mode mode, double a, double b) {
    return mode == Mode::PositiveTemperature ? logaddexp(a, b) : std::max(a, b);
}

// Admissibility predicate over lattice points: a finite list of excluded
// segments plus per-height windows (at `height`, x must lie in [lo, hi]).
struct Mask {
    struct Window {
        int height = 0;
        int lo = 0;
        int hi = 0;
    };

    std::vector<Segment> excluded;
    std::vector<Window> windows;

    bool empty() const { return excluded.empty() && windows.empty(); }

    bool allows(int x, int t) const {
        for (const Segment& s : excluded)
            if (s.contains(x, t))
                return false;
        for (const Window& w : windows)
            if (t == w.height && (x < w.lo || x > w.hi))
                return false;
        return true;
    }
};

// The single entry point for all free-energy variants: endpoints, temperature
// mode, half/full-space geometry, and an optional admissibility mask.
struct Query {
    Point u;
    Point v;
    Mode mode = Mode::PositiveTemperature;
    Geometry geometry = Geometry::HalfSpace;
    Mask mask;
};

inline void validate_query(const Query& q) {
    if (!in_half_space(q.u) || !in_half_space(q.v))
        throw PreconditionViolated("query: endpoints must lie in the half-space");
    if (!feasible(q.u, q.v))
        throw PreconditionViolated("query: endpoint pair is infeasible");
    if (!q.mask.allows(q.u.x, q.u.t) || !q.mask.allows(q.v.x, q.v.t))
        throw PreconditionViolated("query: mask may not exclude an endpoint");
}

// Reachable x-range at one height: an inclusive interval whose points all
// share the parity of the row.
struct RowSpan {
    int lo = 0;
    int hi = -1;

    bool empty() const { return lo > hi; }
    int count() const { return empty() ? 0 : (hi - lo) / 2 + 1; }
    bool contains(int x) const { return x >= lo && x <= hi && ((x - lo) & 1) == 0; }
    int index(int x) const { return (x - lo) / 2; }
    int x_at(int i) const { return lo + 2 * i; }
};

namespace detail {

inline int floor_to_parity(int x, int parity) {
    const int p = ((x % 2) + 2) % 2;
    return p == parity ? x : x - 1;
}

inline int ceil_to_parity(int x, int parity) {
    const int p = ((x % 2) + 2) % 2;
    return p == parity ? x : x + 1;
}

// Intersection of the upward cone of `below`, the downward cone of `above`
// (either may be absent, not both) and the geometry, snapped to the row
// parity.
inline RowSpan row_span_cones(const std::optional<Point>& below,
                              const std::optional<Point>& above, int t, Geometry geom) {
    const Point anchor = below ? *below : *above;
    const int parity = ((anchor.x + (t - anchor.t)) % 2 + 2) % 2;
    int lo = std::numeric_limits<int>::min() / 2;
    int hi = std::numeric_limits<int>::max() / 2;
    if (below) {
        lo = std::max(lo, below->x - (t - below->t));
        hi = std::min(hi, below->x + (t - below->t));
    }
    if (above) {
        lo = std::max(lo, above->x - (above->t - t));
        hi = std::min(hi, above->x + (above->t - t));
    }
    if (geom == Geometry::HalfSpace)
        lo = std::max(lo, 0);
    return RowSpan{ceil_to_parity(lo, parity), floor_to_parity(hi, parity)};
}

inline RowSpan row_span(Point u, const std::optional<Point>& v, int top, int t, Geometry geom) {
    return row_span_cones(u, v ? std::optional<Point>(Point{v->x, top}) : std::nullopt, t, geom);
}

inline void ensure_covers(const Region& have, const Region& need) {
    if (!have.contains(need))
        throw RegionTooSmall("environment does not cover the reachable cone");
}

// Runs the forward recursion from u up to `top` (bounded by the backward cone
// of v when v is present). on_row(t, span, values) sees every row, base
// included; `values` is indexed by span.index(x).
template <class Field, class OnRow>
void forward_sweep(const Field& field, Point u, const std::optional<Point>& v, int top,
                   Mode mode, Geometry geom, const Mask& mask, OnRow&& on_row) {
    std::vector<double> cur;
    std::vector<double> next;
    RowSpan span = row_span(u, v, top, u.t, geom);
    cur.assign(1, mask.allows(u.x, u.t) ? field.weight(u.x, u.t) : kNegInf);
    on_row(u.t, span, cur.data());
    const bool positive = mode == Mode::PositiveTemperature;
    for (int t = u.t + 1; t <= top; ++t) {
        const RowSpan prev = span;
        span = row_span(u, v, top, t, geom);
        next.assign(static_cast<size_t>(span.count()), kNegInf);
        for (int i = 0; i < span.count(); ++i) {
            const int x = span.x_at(i);
            if (!mask.allows(x, t))
                continue;
            const double a = prev.contains(x - 1) ? cur[static_cast<size_t>(prev.index(x - 1))] : kNegInf;
            const double b = prev.contains(x + 1) ? cur[static_cast<size_t>(prev.index(x + 1))] : kNegInf;
            const double c = positive ? logaddexp(a, b) : std::max(a, b);
            if (c != kNegInf)
                next[static_cast<size_t>(i)] = c + field.weight(x, t);
        }
        cur.swap(next);
        on_row(t, span, cur.data());
    }
}

// Mirror image of forward_sweep: runs from v down to `bottom`, clipped to the
// upward cone of u when u is present.
template <class Field, class OnRow>
void backward_sweep(const Field& field, const std::optional<Point>& u, Point v, int bottom,
                    Mode mode, Geometry geom, const Mask& mask, OnRow&& on_row) {
    std::vector<double> cur;
    std::vector<double> next;
    RowSpan span = row_span_cones(u, v, v.t, geom);
    cur.assign(1, mask.allows(v.x, v.t) ? field.weight(v.x, v.t) : kNegInf);
    on_row(v.t, span, cur.data());
    const bool positive = mode == Mode::PositiveTemperature;
    for (int t = v.t - 1; t >= bottom; --t) {
        const RowSpan prev = span;
        span = row_span_cones(u, v, t, geom);
        next.assign(static_cast<size_t>(span.count()), kNegInf);
        for (int i = 0; i < span.count(); ++i) {
            const int x = span.x_at(i);
            if (!mask.allows(x, t))
                continue;
            const double a = prev.contains(x - 1) ? cur[static_cast<size_t>(prev.index(x - 1))] : kNegInf;
            const double b = prev.contains(x + 1) ? cur[static_cast<size_t>(prev.index(x + 1))] : kNegInf;
            const double c = positive ? logaddexp(a, b) : std::max(a, b);
            if (c != kNegInf)
                next[static_cast<size_t>(i)] = c + field.weight(x, t);
        }
        cur.swap(next);
        on_row(t, span, cur.data());
    }
}

} // namespace detail

// G(u;v): F = log sum_pi e^{H(pi)} over mask-admissible paths at positive
// temperature, L = max_pi H(pi) at zero temperature; -inf when no admissible
// path exists.
template <class Field>
double free_energy(const Query& q, const Field& field) {
    validate_query(q);
    detail::ensure_covers(field.region(), Region::cone(q.u, q.v, q.geometry == Geometry::HalfSpace));
    double result = kNegInf;
    detail::forward_sweep(field, q.u, q.v, q.v.t, q.mode, q.geometry, q.mask,
                          [&](int t, const RowSpan& span, const double* row) {
                              if (t == q.v.t && span.contains(q.v.x))
                                  result = row[span.index(q.v.x)];
                          });
    return result;
}

// Both temperatures in one sweep over the same weights.
template <class Field>
std::pair<double, double> free_energy_both(Point u, Point v, Geometry geom, const Mask& mask,
                                           const Field& field) {
    Query q{u, v, Mode::PositiveTemperature, geom, mask};
    validate_query(q);
    detail::ensure_covers(field.region(), Region::cone(u, v, geom == Geometry::HalfSpace));
    std::vector<double> curF(1, mask.allows(u.x, u.t) ? field.weight(u.x, u.t) : kNegInf);
    std::vector<double> curL = curF;
    std::vector<double> nextF;
    std::vector<double> nextL;
    const std::optional<Point> vo = v;
    RowSpan span = detail::row_span(u, vo, v.t, u.t, geom);
    for (int t = u.t + 1; t <= v.t; ++t) {
        const RowSpan prev = span;
        span = detail::row_span(u, vo, v.t, t, geom);
        nextF.assign(static_cast<size_t>(span.count()), kNegInf);
        nextL.assign(static_cast<size_t>(span.count()), kNegInf);
        for (int i = 0; i < span.count(); ++i) {
            const int x = span.x_at(i);
            if (!mask.allows(x, t))
                continue;
            const bool has_a = prev.contains(x - 1);
            const bool has_b = prev.contains(x + 1);
            const double fa = has_a ? curF[static_cast<size_t>(prev.index(x - 1))] : kNegInf;
            const double fb = has_b ? curF[static_cast<size_t>(prev.index(x + 1))] : kNegInf;
            const double la = has_a ? curL[static_cast<size_t>(prev.index(x - 1))] : kNegInf;
            const double lb = has_b ? curL[static_cast<size_t>(prev.index(x + 1))] : kNegInf;
            const double cf = logaddexp(fa, fb);
            if (cf == kNegInf)
                continue;
            const double w = field.weight(x, t);
            nextF[static_cast<size_t>(i)] = cf + w;
            nextL[static_cast<size_t>(i)] = std::max(la, lb) + w;
        }
        curF.swap(nextF);
        curL.swap(nextL);
    }
    if (!span.contains(v.x))
        return {kNegInf, kNegInf};
    return {curF[static_cast<size_t>(span.index(v.x))], curL[static_cast<size_t>(span.index(v.x))]};
}

// Partial free-energy slice at one height. Forward profiles map x to
// G(u -> (x, height)), backward ones to G((x, height) -> v); the shared
// weight at (x, height) is included in both.
struct Profile {
    Point anchor;
    int height = 0;
    RowSpan span;
    std::vector<double> values;

    double value(int x) const {
        return span.contains(x) ? values[static_cast<size_t>(span.index(x))] : kNegInf;
    }
};

// The one-sided sweep is not clipped to the opposite endpoint's cone: a
// forward profile holds G(u -> (x, height)) for every reachable x, including
// positions that cannot continue on to v.
template <class Field>
Profile profile(const Query& q, const Field& field, int height, Direction dir) {
    validate_query(q);
    if (height <= q.u.t || height >= q.v.t)
        throw PreconditionViolated("profile: height must lie strictly between the endpoints");
    Profile out;
    out.anchor = dir == Direction::Forward ? q.u : q.v;
    out.height = height;
    auto capture = [&](int t, const RowSpan& span, const double* row) {
        if (t == height) {
            out.span = span;
            out.values.assign(row, row + span.count());
        }
    };
    const bool half = q.geometry == Geometry::HalfSpace;
    if (dir == Direction::Forward) {
        const int s = height - q.u.t;
        detail::ensure_covers(field.region(), Region{half ? std::max(0, q.u.x - s) : q.u.x - s,
                                                     q.u.x + s, q.u.t, height});
        detail::forward_sweep(field, q.u, std::nullopt, height, q.mode, q.geometry, q.mask,
                              capture);
    } else {
        const int s = q.v.t - height;
        detail::ensure_covers(field.region(), Region{half ? std::max(0, q.v.x - s) : q.v.x - s,
                                                     q.v.x + s, height, q.v.t});
        detail::backward_sweep(field, std::nullopt, q.v, height, q.mode, q.geometry, q.mask,
                               capture);
    }
    return out;
}

// Recombines a forward/backward profile pair at their common height; equals
// free_energy(u -> v) up to floating-point roundoff. The shared weight at
// (x, height) appears in both profiles and is subtracted once.
inline double recombine(const Profile& fwd, const Profile& bwd, Mode mode, auto&& weight_at) {
    if (fwd.height != bwd.height)
        throw PreconditionViolated("recombine: profiles at different heights");
    double acc = kNegInf;
    for (int i = 0; i < fwd.span.count(); ++i) {
        const int x = fwd.span.x_at(i);
        const double a = fwd.values[static_cast<size_t>(i)];
        const double b = bwd.value(x);
        if (a == kNegInf || b == kNegInf)
            continue;
        acc = combine(mode, acc, a + b - weight_at(x, fwd.height));
    }
    return acc;
}

// Free energy from u to the whole line at target_height, plus the terminal
// distribution (positive temperature) or the leftmost argmax terminal (zero
// temperature).
struct PointToLineResult {
    double value = kNegInf;
    Profile terminal;              // x -> G(u -> (x, target_height))
    std::vector<double> masses;    // aligned with terminal.span (positive mode)
    int argmax_x = 0;              // zero mode: leftmost maximizer
};

template <class Field>
PointToLineResult point_to_line_free_energy(Point u, int target_height, Mode mode,
                                            const Field& field,
                                            Geometry geom = Geometry::HalfSpace,
                                            const Mask& mask = {}) {
    if (!in_half_space(u))
        throw PreconditionViolated("point_to_line: start must lie in the half-space");
    if (target_height <= u.t)
        throw PreconditionViolated("point_to_line: target height must exceed start height");
    const int s = target_height - u.t;
    Region need{geom == Geometry::HalfSpace ? std::max(0, u.x - s) : u.x - s, u.x + s, u.t,
                target_height};
    detail::ensure_covers(field.region(), need);

    PointToLineResult out;
    detail::forward_sweep(field, u, std::nullopt, target_height, mode, geom, mask,
                          [&](int t, const RowSpan& span, const double* row) {
                              if (t == target_height) {
                                  out.terminal.anchor = u;
                                  out.terminal.height = t;
                                  out.terminal.span = span;
                                  out.terminal.values.assign(row, row + span.count());
                              }
                          });
    const auto& vals = out.terminal.values;
    if (mode == Mode::PositiveTemperature) {
        double m = kNegInf;
        for (double v : vals)
            m = std::max(m, v);
        if (m == kNegInf) {
            out.value = kNegInf;
            return out;
        }
        double sum = 0.0;
        for (double v : vals)
            if (v != kNegInf)
                sum += std::exp(v - m);
        out.value = m + std::log(sum);
        out.masses.resize(vals.size(), 0.0);
        for (size_t i = 0; i < vals.size(); ++i)
            if (vals[i] != kNegInf)
                out.masses[i] = std::exp(vals[i] - out.value);
    } else {
        double best = kNegInf;
        int best_x = 0;
        for (int i = 0; i < out.terminal.span.count(); ++i) {
            const double v = vals[static_cast<size_t>(i)];
            if (v > best) { // strictly greater keeps the leftmost maximizer
                best = v;
                best_x = out.terminal.span.x_at(i);
            }
        }
        out.value = best;
        out.argmax_x = best_x;
    }
    return out;
}

// Full DP slice table: every row of a forward or backward sweep, cached for
// exact path sampling, geodesic extraction and single-row recomputation.
struct DpTable {
    Point u;
    Point v;
    Mode mode = Mode::PositiveTemperature;
    Geometry geometry = Geometry::HalfSpace;
    Direction direction = Direction::Forward;
    Mask mask;
    std::vector<RowSpan> spans;              // index t - u.t
    std::vector<std::vector<double>> rows;

    double get(int x, int t) const {
        const int i = t - u.t;
        if (i < 0 || i >= static_cast<int>(spans.size()))
            return kNegInf;
        const RowSpan& s = spans[static_cast<size_t>(i)];
        return s.contains(x) ? rows[static_cast<size_t>(i)][static_cast<size_t>(s.index(x))]
                             : kNegInf;
    }
    const RowSpan& span_at(int t) const { return spans[static_cast<size_t>(t - u.t)]; }
    double value() const {
        return direction == Direction::Forward ? get(v.x, v.t) : get(u.x, u.t);
    }
};

template <class Field>
DpTable forward_table(const Query& q, const Field& field) {
    validate_query(q);
    detail::ensure_covers(field.region(), Region::cone(q.u, q.v, q.geometry == Geometry::HalfSpace));
    DpTable table;
    table.u = q.u;
    table.v = q.v;
    table.mode = q.mode;
    table.geometry = q.geometry;
    table.direction = Direction::Forward;
    table.mask = q.mask;
    table.spans.reserve(static_cast<size_t>(q.v.t - q.u.t) + 1);
    table.rows.reserve(table.spans.capacity());
    detail::forward_sweep(field, q.u, q.v, q.v.t, q.mode, q.geometry, q.mask,
                          [&](int, const RowSpan& span, const double* row) {
                              table.spans.push_back(span);
                              table.rows.emplace_back(row, row + span.count());
                          });
    return table;
}

template <class Field>
DpTable backward_table(const Query& q, const Field& field) {
    validate_query(q);
    detail::ensure_covers(field.region(), Region::cone(q.u, q.v, q.geometry == Geometry::HalfSpace));
    DpTable table;
    table.u = q.u;
    table.v = q.v;
    table.mode = q.mode;
    table.geometry = q.geometry;
    table.direction = Direction::Backward;
    table.mask = q.mask;
    table.spans.assign(static_cast<size_t>(q.v.t - q.u.t) + 1, RowSpan{});
    table.rows.assign(table.spans.size(), {});
    detail::backward_sweep(field, q.u, q.v, q.u.t, q.mode, q.geometry, q.mask,
                           [&](int t, const RowSpan& span, const double* row) {
                               table.spans[static_cast<size_t>(t - q.u.t)] = span;
                               table.rows[static_cast<size_t>(t - q.u.t)].assign(row, row + span.count());
                           });
    return table;
}

// Extracts the leftmost geodesic from a zero-temperature forward table by
// backward argmax with ties broken toward the wall. The result is the
// pointwise-minimal maximizer of the Hamiltonian.
DirectedPath geodesic_backtrace(const DpTable& fwd);

// Recomputes G with row j's weights overridden by row_weight(x), splicing
// cached forward rows below j against backward rows above j. O(row width)
// instead of a full sweep; the tables must not depend on row j for this to be
// exact, which holds because each stores sums up to (and including) its own
// side's copy of the row.
template <class RowWeight>
double splice_row(const DpTable& fwd, const DpTable& bwd, int j, RowWeight&& row_weight) {
    if (fwd.direction != Direction::Forward || bwd.direction != Direction::Backward)
        throw PreconditionViolated("splice_row: needs one forward and one backward table");
    if (fwd.mode != bwd.mode)
        throw PreconditionViolated("splice_row: mode mismatch");
    const Mode mode = fwd.mode;
    const Point u = fwd.u;
    const Point v = fwd.v;
    if (j < u.t || j > v.t)
        throw PreconditionViolated("splice_row: row outside the strip");

    auto below = [&](int x) { // combine of forward values at height j-1
        return j == u.t ? 0.0 : combine(mode, fwd.get(x - 1, j - 1), fwd.get(x + 1, j - 1));
    };
    auto above = [&](int x) { // combine of backward values at height j+1
        return j == v.t ? 0.0 : combine(mode, bwd.get(x - 1, j + 1), bwd.get(x + 1, j + 1));
    };

    if (j == u.t) {
        if (!fwd.mask.allows(u.x, j))
            return kNegInf;
        const double a = above(u.x);
        return a == kNegInf ? kNegInf : row_weight(u.x) + a;
    }
    if (j == v.t) {
        if (!fwd.mask.allows(v.x, j))
            return kNegInf;
        const double b = below(v.x);
        return b == kNegInf ? kNegInf : b + row_weight(v.x);
    }
    const RowSpan& span = fwd.span_at(j);
    double acc = kNegInf;
    for (int i = 0; i < span.count(); ++i) {
        const int x = span.x_at(i);
        if (!fwd.mask.allows(x, j))
            continue;
        const double b = below(x);
        const double a = above(x);
        if (b == kNegInf || a == kNegInf)
            continue;
        acc = combine(mode, acc, b + row_weight(x) + a);
    }
    return acc;
}

} // namespace polymer
