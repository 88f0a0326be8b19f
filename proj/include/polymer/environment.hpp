#pragma once

#include <limits>
#include <string>

#include "polymer/errors.hpp"
#include "polymer/lattice.hpp"
#include "polymer/rng.hpp"

namespace polymer {

// Weight distribution families. All have support in (0, inf); Exponential and
// Gamma additionally have finite exponential moments and unbounded support.
// Constant violates the latter two and is admitted for closed-form
// diagnostics only.
struct DistributionSpec {
    enum class Family { Exponential, Gamma, Constant };

    Family family = Family::Exponential;
    double p1 = 1.0; // Exponential: rate. Gamma: shape. Constant: value.
    double p2 = 0.0; // Gamma: rate. Unused otherwise.

    static DistributionSpec exponential(double rate) {
        return DistributionSpec{Family::Exponential, rate, 0.0};
    }
    static DistributionSpec gamma(double shape, double rate) {
        return DistributionSpec{Family::Gamma, shape, rate};
    }
    static DistributionSpec constant(double c) {
        return DistributionSpec{Family::Constant, c, 0.0};
    }

    void validate() const;
    double mean() const;
    bool degenerate() const { return family == Family::Constant; }
    bool unbounded_support() const { return family != Family::Constant; }

    double sample(CounterRng& rng) const {
        switch (family) {
        case Family::Exponential:
            return rng.next_exponential(p1);
        case Family::Gamma:
            return rng.next_gamma(p1, p2);
        case Family::Constant:
        default:
            return p1;
        }
    }

    friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;
};

struct WeightSpec {
    DistributionSpec bulk;
    DistributionSpec vertical;

    void validate() const {
        bulk.validate();
        vertical.validate();
    }

    friend bool operator==(const WeightSpec&, const WeightSpec&) = default;
};

// Rectangular bounding region of realized lattice sites. x_min may be
// negative to support full-space queries on bulk views.
struct Region {
    int x_min = 0;
    int x_max = 0;
    int t_min = 0;
    int t_max = 0;

    bool contains(int x, int t) const {
        return x >= x_min && x <= x_max && t >= t_min && t <= t_max;
    }
    bool contains(const Region& r) const {
        return r.x_min >= x_min && r.x_max <= x_max && r.t_min >= t_min && r.t_max <= t_max;
    }
    int64_t cells() const {
        return static_cast<int64_t>(x_max - x_min + 1) * (t_max - t_min + 1);
    }

    // Bounding box of the reachability cone between two endpoints.
    static Region cone(Point u, Point v, bool half_space);

    friend bool operator==(const Region&, const Region&) = default;
};

// A realized random weight field. Weights are pure functions of
// (seed, x, t) via the counter-based generator, so regeneration from
// (spec, region, seed) is bit-exact and enlarging the region never changes
// existing values. Column x = 0 draws from the vertical law, columns x != 0
// from the bulk law.
class Environment {
public:
    static Environment sample(const WeightSpec& spec, Region region, uint64_t seed);

    double weight(int x, int t) const {
        double w;
        if (x == 0) {
            CounterRng rng(hash_words({seed_, rng_tag::kWeight, 1, static_cast<uint64_t>(static_cast<int64_t>(t))}));
            w = spec_.vertical.sample(rng);
        } else {
            CounterRng rng(hash_words({seed_, rng_tag::kWeight, 0,
                                       static_cast<uint64_t>(static_cast<int64_t>(x)),
                                       static_cast<uint64_t>(static_cast<int64_t>(t))}));
            w = spec_.bulk.sample(rng);
        }
        return w < cutoff_ ? w : cutoff_;
    }

    bool covers(int x, int t) const { return region_.contains(x, t); }
    const Region& region() const { return region_; }
    uint64_t seed() const { return seed_; }
    const WeightSpec& spec() const { return spec_; }
    double cutoff() const { return cutoff_; }

private:
    friend Environment truncate(const Environment&, double);

    WeightSpec spec_;
    Region region_{};
    uint64_t seed_ = 0;
    double cutoff_ = std::numeric_limits<double>::infinity();
};

// Pointwise min(weight, cutoff); cutoff = +inf is the identity.
Environment truncate(const Environment& env, double cutoff);

// The bulk-modified field: equal to the base
// environment off the wall (the same realized values, not merely equal in
// distribution), with the column x = 0 resampled from the bulk law under an
// auxiliary seed. Covers x < 0 with bulk draws so full-space queries are
// well defined on it.
class BulkView {
public:
    BulkView(Environment base, uint64_t aux_seed) : base_(std::move(base)), aux_seed_(aux_seed) {
        region_ = base_.region();
        region_.x_min = -region_.x_max;
    }

    double weight(int x, int t) const {
        if (x > 0)
            return base_.weight(x, t);
        uint64_t key;
        if (x == 0)
            key = hash_words({base_.seed(), rng_tag::kBulkColumn, aux_seed_,
                              static_cast<uint64_t>(static_cast<int64_t>(t))});
        else
            key = hash_words({base_.seed(), rng_tag::kWeight, 0,
                              static_cast<uint64_t>(static_cast<int64_t>(x)),
                              static_cast<uint64_t>(static_cast<int64_t>(t))});
        CounterRng rng(key);
        const double w = base_.spec().bulk.sample(rng);
        return w < base_.cutoff() ? w : base_.cutoff();
    }

    bool covers(int x, int t) const { return region_.contains(x, t); }
    const Region& region() const { return region_; }
    const Environment& base() const { return base_; }

private:
    Environment base_;
    uint64_t aux_seed_ = 0;
    Region region_{};
};

inline BulkView bulk_view(const Environment& env, uint64_t aux_seed) {
    return BulkView(env, aux_seed);
}

// View with one row overwritten by a constant on the window [0, x_max]:
// weight(x, row) = value for 0 <= x <= x_max, all other weights unchanged.
template <class Field>
struct RowPerturbed {
    Field base;
    int row = 0;
    int x_max = 0;
    double value = 0.0;

    double weight(int x, int t) const {
        if (t == row && x >= 0 && x <= x_max)
            return value;
        return base.weight(x, t);
    }
    bool covers(int x, int t) const { return base.covers(x, t); }
    const Region& region() const { return base.region(); }
};

template <class Field>
RowPerturbed<Field> perturb_row(const Field& field, int row, int x_max, double value) {
    if (row < field.region().t_min || row > field.region().t_max)
        throw PreconditionViolated("perturb_row: row does not intersect region");
    if (value <= 0.0)
        throw InvalidSpec("perturb_row: value must be positive");
    return RowPerturbed<Field>{field, row, x_max, value};
}

// View with one row redrawn independently (same per-column laws), keyed by a
// salt so distinct resamples are independent.
struct RowResampled {
    Environment base;
    int row = 0;
    uint64_t salt = 0;

    double weight(int x, int t) const {
        if (t != row)
            return base.weight(x, t);
        uint64_t key = hash_words({base.seed(), rng_tag::kRowResample, salt,
                                   static_cast<uint64_t>(static_cast<int64_t>(x)),
                                   static_cast<uint64_t>(static_cast<int64_t>(t))});
        CounterRng rng(key);
        const double w =
            x == 0 ? base.spec().vertical.sample(rng) : base.spec().bulk.sample(rng);
        return w < base.cutoff() ? w : base.cutoff();
    }
    bool covers(int x, int t) const { return base.covers(x, t); }
    const Region& region() const { return base.region(); }
};

// View translated by (dx, dt): weight(x,t) = base.weight(x+dx, t+dt). Used by
// the excursion bijection, which maps excursions (0,0)->(0,n) onto plain
// paths (0,0)->(0,n-2) read through the shift (+1,+1).
template <class Field>
struct Shifted {
    Field base;
    int dx = 0;
    int dt = 0;

    double weight(int x, int t) const { return base.weight(x + dx, t + dt); }
    bool covers(int x, int t) const { return base.covers(x + dx, t + dt); }
    Region region() const {
        Region r = base.region();
        return Region{r.x_min - dx, r.x_max - dx, r.t_min - dt, r.t_max - dt};
    }
};

// Explicit grid field for tests and snapshot replay.
struct DenseField {
    Region grid{};
    std::vector<double> values; // row-major: (t - t_min) * width + (x - x_min)
    double fill = 1.0;

    static DenseField filled(Region r, double value);

    double& at(int x, int t) {
        return values[static_cast<size_t>(t - grid.t_min) * (grid.x_max - grid.x_min + 1) +
                      (x - grid.x_min)];
    }
    double weight(int x, int t) const {
        return values[static_cast<size_t>(t - grid.t_min) * (grid.x_max - grid.x_min + 1) +
                      (x - grid.x_min)];
    }
    bool covers(int x, int t) const { return grid.contains(x, t); }
    const Region& region() const { return grid; }
};

// Binary snapshot (magic "HSPE1"): header with region bounds, seed and the
// weight spec, then row-major little-endian IEEE doubles.
struct Snapshot {
    WeightSpec spec;
    Region region{};
    uint64_t seed = 0;
    DenseField field;
};

void save_snapshot(const Environment& env, const std::string& path);
Snapshot load_snapshot(const std::string& path);

} // namespace polymer
