#include "polymer/sampling.hpp"

#include <cmath>

namespace polymer {

PolymerSample sample_polymer(const DpTable& fwd, CounterRng& rng) {
    if (fwd.direction != Direction::Forward || fwd.mode != Mode::PositiveTemperature)
        throw PreconditionViolated("sample_polymer: needs a positive-temperature forward table");
    if (fwd.value() == kNegInf)
        throw PreconditionViolated("sample_polymer: no admissible path");
    const int len = fwd.v.t - fwd.u.t;
    std::vector<int> positions(static_cast<size_t>(len) + 1);
    positions[static_cast<size_t>(len)] = fwd.v.x;
    double log_density = 0.0;
    int x = fwd.v.x;
    for (int t = fwd.v.t; t > fwd.u.t; --t) {
        const double a = fwd.get(x - 1, t - 1);
        const double b = fwd.get(x + 1, t - 1);
        bool go_left;
        double log_p;
        if (a == kNegInf) {
            go_left = false;
            log_p = 0.0;
        } else if (b == kNegInf) {
            go_left = true;
            log_p = 0.0;
        } else {
            const double d = b - a; // log P(left) = -log1p(e^d)
            const double p_left = 1.0 / (1.0 + std::exp(d));
            go_left = rng.next_unit() < p_left;
            log_p = go_left ? -std::log1p(std::exp(d)) : -std::log1p(std::exp(-d));
        }
        x = go_left ? x - 1 : x + 1;
        log_density += log_p;
        positions[static_cast<size_t>(t - 1 - fwd.u.t)] = x;
    }
    return PolymerSample{DirectedPath::from_positions(fwd.u.t, positions), log_density};
}

void CoupledSampler::validate_endpoints() const {
    if (u_.t != u2_.t || v_.t != v2_.t)
        throw PreconditionViolated("coupled_pair: endpoints must share heights");
    if (u_.x > u2_.x || v_.x > v2_.x)
        throw PreconditionViolated("coupled_pair: endpoints must be ordered left-to-right");
    if (!feasible(u_, v_) || !feasible(u2_, v2_))
        throw PreconditionViolated("coupled_pair: both endpoint pairs must be feasible");
    if ((u2_.x - u_.x) % 2 != 0)
        throw PreconditionViolated("coupled_pair: endpoint pairs on different parity classes "
                                   "cannot be ordered");
}

namespace {

// Joins prefix (up to and including height tau) with suffix above tau.
DirectedPath splice_paths(const DirectedPath& prefix, const DirectedPath& suffix, int tau) {
    const std::vector<int> a = prefix.positions();
    const std::vector<int> b = suffix.positions();
    const int t0 = prefix.start().t;
    std::vector<int> joined(a.begin(), a.begin() + (tau - t0 + 1));
    joined.insert(joined.end(), b.begin() + (tau - t0 + 1), b.end());
    return DirectedPath::from_positions(t0, joined);
}

} // namespace

CoupledPair CoupledSampler::draw(CounterRng& rng) const {
    std::optional<DirectedPath> left;
    std::optional<DirectedPath> right;
    if (mode_ == Mode::ZeroTemperature) {
        left = geodesic_backtrace(*table_uv_);
        right = geodesic_backtrace(*table_u2v2_);
    } else {
        const DirectedPath pi1 = sample_polymer(*table_uv_, rng).path;
        if (!table_u2v_) {
            left = pi1;
            right = sample_polymer(*table_u2v2_, rng).path;
        } else {
            const DirectedPath pi2 = sample_polymer(*table_u2v_, rng).path;
            const DirectedPath pi3 = sample_polymer(*table_u2v2_, rng).path;
            const std::vector<int> p1 = pi1.positions();
            const std::vector<int> p2 = pi2.positions();
            const std::vector<int> p3 = pi3.positions();

            // Stage 1: first meeting height of pi1 and pi2, suffix swap.
            int tau = -1;
            for (size_t i = 0; i < p1.size(); ++i)
                if (p1[i] == p2[i]) {
                    tau = u_.t + static_cast<int>(i);
                    break;
                }
            left = tau < 0 ? pi1 : splice_paths(pi1, pi2, tau);

            // Stage 2: last meeting height of pi2 and pi3, prefix swap
            // (the first meeting in reversed time).
            int sigma = -1;
            for (size_t i = p2.size(); i-- > 0;)
                if (p2[i] == p3[i]) {
                    sigma = u_.t + static_cast<int>(i);
                    break;
                }
            right = sigma < 0 ? pi3 : splice_paths(pi2, pi3, sigma);
        }
    }

    CoupledPair out{std::move(*left), std::move(*right), std::nullopt, std::nullopt};
    const std::vector<int> l = out.left.positions();
    const std::vector<int> r = out.right.positions();
    for (size_t i = 0; i < l.size(); ++i) {
        if (l[i] == r[i]) {
            const Point p{l[i], u_.t + static_cast<int>(i)};
            if (!out.meet_low)
                out.meet_low = p;
            out.meet_high = p;
        }
    }
    return out;
}

CoalescenceSummary coalescence_summary(const CoupledPair& pair) {
    const std::vector<int> l = pair.left.positions();
    const std::vector<int> r = pair.right.positions();
    const int t0 = pair.left.start().t;
    CoalescenceSummary out;
    int run_start = -1;
    int best_len = 0;
    std::pair<int, int> best{0, 0};
    const size_t m = std::min(l.size(), r.size());
    for (size_t i = 0; i <= m; ++i) {
        const bool same = i < m && l[i] == r[i];
        if (same && run_start < 0)
            run_start = static_cast<int>(i);
        if (!same && run_start >= 0) {
            const int len = static_cast<int>(i) - run_start;
            if (len > best_len) {
                best_len = len;
                best = {t0 + run_start, t0 + static_cast<int>(i) - 1};
            }
            run_start = -1;
        }
    }
    if (best_len > 0) {
        out.overlap_interval = best;
        out.overlap_length = best_len;
    }
    return out;
}

} // namespace polymer
