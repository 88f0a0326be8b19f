#include "polymer/events.hpp"

namespace polymer {

namespace {

std::vector<uint16_t> enumerate_satisfying(size_t k, const std::function<bool(uint16_t)>& truth) {
    if (k > 8)
        throw UnsupportedEvent("EventSpec: at most 8 primitives in a general combination");
    std::vector<uint16_t> out;
    for (uint32_t a = 0; a < (1u << k); ++a)
        if (truth(static_cast<uint16_t>(a)))
            out.push_back(static_cast<uint16_t>(a));
    return out;
}

} // namespace

EventSpec EventSpec::avoids(Segment s) {
    EventSpec ev;
    ev.primitives = {Primitive::avoids(s)};
    ev.pure_conjunction = true;
    return ev;
}

EventSpec EventSpec::hits(Segment s) {
    EventSpec ev;
    ev.primitives = {Primitive::avoids(s)};
    ev.satisfying = {0};
    return ev;
}

EventSpec EventSpec::position_in(int height, int lo, int hi) {
    EventSpec ev;
    ev.primitives = {Primitive::position_in(height, lo, hi)};
    ev.pure_conjunction = true;
    return ev;
}

EventSpec EventSpec::all_of(std::vector<Primitive> prims) {
    EventSpec ev;
    ev.primitives = std::move(prims);
    ev.pure_conjunction = true;
    return ev;
}

EventSpec EventSpec::from_formula(std::vector<Primitive> prims,
                                  const std::function<bool(uint16_t)>& truth) {
    EventSpec ev;
    ev.satisfying = enumerate_satisfying(prims.size(), truth);
    ev.primitives = std::move(prims);
    return ev;
}

} // namespace polymer
