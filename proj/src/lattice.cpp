#include "polymer/lattice.hpp"

#include <algorithm>
#include <string>

namespace polymer {

DirectedPath::DirectedPath(Point start, std::vector<Step> steps) : start_(start) {
    step_count_ = steps.size();
    packed_.assign((step_count_ + 63) / 64, 0);
    for (size_t i = 0; i < steps.size(); ++i)
        if (steps[i] == Step::RightUp)
            packed_[i / 64] |= uint64_t{1} << (i % 64);
    validate();
}

DirectedPath DirectedPath::from_positions(int start_t, const std::vector<int>& positions) {
    if (positions.empty())
        throw PreconditionViolated("DirectedPath: empty position sequence");
    DirectedPath p;
    p.start_ = Point{positions.front(), start_t};
    p.step_count_ = positions.size() - 1;
    p.packed_.assign((p.step_count_ + 63) / 64, 0);
    for (size_t i = 0; i + 1 < positions.size(); ++i) {
        int d = positions[i + 1] - positions[i];
        if (d != 1 && d != -1)
            throw PreconditionViolated("DirectedPath: consecutive positions must differ by 1");
        if (d == 1)
            p.packed_[i / 64] |= uint64_t{1} << (i % 64);
    }
    p.validate();
    return p;
}

void DirectedPath::validate() const {
    int x = start_.x;
    if (x < 0)
        throw PreconditionViolated("DirectedPath: start outside half-space");
    for (size_t i = 0; i < step_count_; ++i) {
        x += (packed_[i / 64] >> (i % 64)) & 1 ? 1 : -1;
        if (x < 0)
            throw PreconditionViolated("DirectedPath: path leaves half-space");
    }
}

Point DirectedPath::end() const {
    return Point{position(start_.t + size()), start_.t + size()};
}

Step DirectedPath::step(int i) const {
    return (packed_[static_cast<size_t>(i) / 64] >> (static_cast<size_t>(i) % 64)) & 1
               ? Step::RightUp
               : Step::LeftUp;
}

int DirectedPath::position(int t) const {
    int x = start_.x;
    for (int i = 0; i < t - start_.t; ++i)
        x += step(i) == Step::RightUp ? 1 : -1;
    return x;
}

std::vector<int> DirectedPath::positions() const {
    std::vector<int> xs(static_cast<size_t>(size()) + 1);
    int x = start_.x;
    xs[0] = x;
    for (int i = 0; i < size(); ++i) {
        x += step(i) == Step::RightUp ? 1 : -1;
        xs[static_cast<size_t>(i) + 1] = x;
    }
    return xs;
}

std::string DirectedPath::step_string() const {
    std::string s;
    s.reserve(static_cast<size_t>(size()));
    for (int i = 0; i < size(); ++i)
        s.push_back(step(i) == Step::RightUp ? 'R' : 'L');
    return s;
}

bool DirectedPath::touches(int x, int t) const {
    if (t < start_.t || t > start_.t + size())
        return false;
    return position(t) == x;
}

Segment Segment::vertical(int x, int t_lo, int t_hi) {
    if (t_lo > t_hi)
        throw PreconditionViolated("Segment: empty range");
    return Segment{Axis::Vertical, x, t_lo, t_hi};
}

Segment Segment::horizontal(int t, int x_lo, int x_hi) {
    if (x_lo > x_hi)
        throw PreconditionViolated("Segment: empty range");
    return Segment{Axis::Horizontal, t, x_lo, x_hi};
}

bool feasible(Point u, Point v) {
    if (u.x < 0 || v.x < 0)
        return false;
    const int dt = v.t - u.t;
    const int dx = v.x - u.x;
    return dt > 0 && std::abs(dx) <= dt && ((dx - dt) % 2 == 0);
}

bigint count_paths(Point u, Point v) {
    if (!feasible(u, v))
        return 0;
    // Counting DP over the cone, one row per height, reachable x only.
    const int dt = v.t - u.t;
    std::vector<bigint> row(static_cast<size_t>(u.x + dt) + 1, 0);
    row[static_cast<size_t>(u.x)] = 1;
    for (int s = 1; s <= dt; ++s) {
        const int lo = std::max(0, std::max(u.x - s, v.x - (dt - s)));
        const int hi = std::min(u.x + s, v.x + (dt - s));
        std::vector<bigint> next(row.size(), 0);
        for (int x = lo; x <= hi; ++x) {
            if ((x - u.x - s) % 2 != 0)
                continue;
            bigint c = 0;
            if (x - 1 >= 0)
                c += row[static_cast<size_t>(x - 1)];
            if (x + 1 < static_cast<int>(row.size()))
                c += row[static_cast<size_t>(x + 1)];
            next[static_cast<size_t>(x)] = std::move(c);
        }
        row = std::move(next);
    }
    return row[static_cast<size_t>(v.x)];
}

bigint catalan(int m) {
    // C_m = binom(2m, m) / (m+1), computed exactly.
    bigint c = 1;
    for (int i = 0; i < m; ++i) {
        c *= 2 * (2 * i + 1);
        c /= i + 2;
    }
    return c;
}

namespace {

bool can_continue(Point w, Point v) { return w.x >= 0 && (w == v || feasible(w, v)); }

void enumerate_rec(Point u, Point v, int x, int t, std::vector<Step>& prefix,
                   std::vector<DirectedPath>& out) {
    if (t == v.t) {
        out.emplace_back(u, prefix);
        return;
    }
    // LeftUp first: lexicographic order with LeftUp < RightUp.
    if (can_continue(Point{x - 1, t + 1}, v)) {
        prefix.push_back(Step::LeftUp);
        enumerate_rec(u, v, x - 1, t + 1, prefix, out);
        prefix.pop_back();
    }
    if (can_continue(Point{x + 1, t + 1}, v)) {
        prefix.push_back(Step::RightUp);
        enumerate_rec(u, v, x + 1, t + 1, prefix, out);
        prefix.pop_back();
    }
}

} // namespace

std::vector<DirectedPath> enumerate_paths(Point u, Point v, int64_t cap) {
    if (!feasible(u, v))
        throw PreconditionViolated("enumerate_paths: infeasible endpoint pair");
    if (count_paths(u, v) > cap)
        throw CapExceeded("enumerate_paths: path count exceeds cap");
    std::vector<DirectedPath> out;
    std::vector<Step> prefix;
    prefix.reserve(static_cast<size_t>(v.t - u.t));
    enumerate_rec(u, v, u.x, u.t, prefix, out);
    return out;
}

} // namespace polymer
