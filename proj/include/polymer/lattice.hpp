#pragma once

#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "polymer/errors.hpp"

namespace polymer {

using bigint = boost::multiprecision::cpp_int;

// Lattice site. The half-space H is {(x,t) : x >= 0}; its left boundary
// V = {x = 0} is the wall. Directed paths move by (-1,+1) or (+1,+1).
struct Point {
    int x = 0;
    int t = 0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline bool in_half_space(Point p) { return p.x >= 0; }

enum class Step : uint8_t {
    LeftUp = 0, // (-1, +1); sorts before RightUp in lexicographic path order
    RightUp = 1 // (+1, +1)
};

// An up-left/up-right path confined to the half-space, stored as its start
// point plus a packed step sequence (1 bit per step). Identified with the
// function t -> position(t) on [start.t, start.t + size()].
class DirectedPath {
public:
    DirectedPath(Point start, std::vector<Step> steps);

    // Builds a path from the height-indexed position function
    // positions[i] = x at height start_t + i.
    static DirectedPath from_positions(int start_t, const std::vector<int>& positions);

    Point start() const { return start_; }
    Point end() const;
    int size() const { return static_cast<int>(step_count_); } // number of steps
    Step step(int i) const;

    // x-coordinate at absolute height t, start.t <= t <= end.t. O(t - start.t).
    int position(int t) const;

    // All positions by height, index i corresponds to height start.t + i.
    std::vector<int> positions() const;

    // Step string over {'L','R'}, e.g. "LRRL".
    std::string step_string() const;

    bool touches(int x, int t) const;

    friend bool operator==(const DirectedPath&, const DirectedPath&) = default;

private:
    DirectedPath() = default;
    void validate() const;

    Point start_{};
    std::vector<uint64_t> packed_;
    size_t step_count_ = 0;
};

// Axis-aligned segment of lattice sites: a vertical segment {x=fixed} x [lo,hi]
// or a horizontal one [lo,hi] x {t=fixed}. Used for wall segments V_[s1,s2]
// and for horizontal crossing windows.
struct Segment {
    enum class Axis { Vertical, Horizontal };
    Axis axis = Axis::Vertical;
    int fixed = 0; // x for vertical, t for horizontal
    int lo = 0;
    int hi = 0; // inclusive; must satisfy lo <= hi

    static Segment vertical(int x, int t_lo, int t_hi);
    static Segment horizontal(int t, int x_lo, int x_hi);

    bool contains(int x, int t) const {
        if (axis == Axis::Vertical)
            return x == fixed && t >= lo && t <= hi;
        return t == fixed && x >= lo && x <= hi;
    }
};

// True iff the set of directed half-space paths u -> v is nonempty:
// t must strictly increase, |dx| <= dt, and dx = dt (mod 2).
bool feasible(Point u, Point v);

// |Pi(u;v)| as an exact integer; 0 when infeasible. Paths (0,0) -> (0,2m)
// are counted by the m-th Catalan number.
bigint count_paths(Point u, Point v);

bigint catalan(int m);

inline constexpr int64_t kDefaultEnumerationCap = 1'000'000;

// Every path u -> v exactly once, in lexicographic step order with
// LeftUp < RightUp. Throws CapExceeded when the count exceeds cap.
std::vector<DirectedPath> enumerate_paths(Point u, Point v, int64_t cap = kDefaultEnumerationCap);

// Energy of a path: the sum of the environment weights over every visited
// point, both endpoints included. Works for any weight field exposing
// weight(x,t) and covers(x,t).
template <class Field>
double hamiltonian(const DirectedPath& path, const Field& field) {
    int x = path.start().x;
    int t = path.start().t;
    if (!field.covers(x, t))
        throw OutOfRegion("hamiltonian: path start outside realized region");
    double h = field.weight(x, t);
    for (int i = 0; i < path.size(); ++i) {
        x += path.step(i) == Step::RightUp ? 1 : -1;
        ++t;
        if (!field.covers(x, t))
            throw OutOfRegion("hamiltonian: visited point outside realized region");
        h += field.weight(x, t);
    }
    return h;
}

} // namespace polymer
