#include "polymer/environment.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <vector>

namespace polymer {

void DistributionSpec::validate() const {
    switch (family) {
    case Family::Exponential:
        if (!(p1 > 0.0))
            throw InvalidSpec("Exponential rate must be positive");
        break;
    case Family::Gamma:
        if (!(p1 > 0.0) || !(p2 > 0.0))
            throw InvalidSpec("Gamma shape and rate must be positive");
        break;
    case Family::Constant:
        if (!(p1 > 0.0))
            throw InvalidSpec("Constant value must be positive");
        break;
    }
}

double DistributionSpec::mean() const {
    switch (family) {
    case Family::Exponential:
        return 1.0 / p1;
    case Family::Gamma:
        return p1 / p2;
    case Family::Constant:
    default:
        return p1;
    }
}

Region Region::cone(Point u, Point v, bool half_space) {
    // Extremal reachable x lies where the forward and backward cones cross;
    // u.x + v.x +- dt is even whenever the pair is feasible.
    const int dt = v.t - u.t;
    int lo = (u.x + v.x - dt) / 2;
    if (half_space)
        lo = std::max(lo, 0);
    const int hi = (u.x + v.x + dt) / 2;
    return Region{lo, hi, std::min(u.t, v.t), std::max(u.t, v.t)};
}

Environment Environment::sample(const WeightSpec& spec, Region region, uint64_t seed) {
    spec.validate();
    if (region.x_min > region.x_max || region.t_min > region.t_max)
        throw InvalidSpec("Environment: empty region");
    Environment env;
    env.spec_ = spec;
    env.region_ = region;
    env.seed_ = seed;
    return env;
}

Environment truncate(const Environment& env, double cutoff) {
    if (!(cutoff > 0.0))
        throw InvalidSpec("truncate: cutoff must be positive");
    Environment out = env;
    out.cutoff_ = std::min(env.cutoff_, cutoff);
    return out;
}

DenseField DenseField::filled(Region r, double value) {
    DenseField f;
    f.grid = r;
    f.values.assign(static_cast<size_t>(r.cells()), value);
    f.fill = value;
    return f;
}

namespace {

void put_u64(std::vector<unsigned char>& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i)
        buf.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::vector<unsigned char>& buf, double d) {
    put_u64(buf, std::bit_cast<uint64_t>(d));
}

uint64_t get_u64(const unsigned char* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<uint64_t>(p[i]) << (8 * i);
    return v;
}

double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_u64(p)); }

void put_dist(std::vector<unsigned char>& buf, const DistributionSpec& d) {
    buf.push_back(static_cast<unsigned char>(d.family));
    put_f64(buf, d.p1);
    put_f64(buf, d.p2);
}

DistributionSpec get_dist(const unsigned char* p) {
    DistributionSpec d;
    d.family = static_cast<DistributionSpec::Family>(p[0]);
    d.p1 = get_f64(p + 1);
    d.p2 = get_f64(p + 9);
    return d;
}

constexpr char kMagic[5] = {'H', 'S', 'P', 'E', '1'};
constexpr size_t kHeaderSize = 5 + 1 + 4 * 8 + 8 + 2 * 17;

} // namespace

void save_snapshot(const Environment& env, const std::string& path) {
    const Region r = env.region();
    std::vector<unsigned char> buf;
    buf.reserve(kHeaderSize + static_cast<size_t>(r.cells()) * 8);
    buf.insert(buf.end(), kMagic, kMagic + 5);
    buf.push_back(0);
    put_u64(buf, static_cast<uint64_t>(static_cast<int64_t>(r.x_min)));
    put_u64(buf, static_cast<uint64_t>(static_cast<int64_t>(r.x_max)));
    put_u64(buf, static_cast<uint64_t>(static_cast<int64_t>(r.t_min)));
    put_u64(buf, static_cast<uint64_t>(static_cast<int64_t>(r.t_max)));
    put_u64(buf, env.seed());
    put_dist(buf, env.spec().bulk);
    put_dist(buf, env.spec().vertical);
    for (int t = r.t_min; t <= r.t_max; ++t)
        for (int x = r.x_min; x <= r.x_max; ++x)
            put_f64(buf, env.weight(x, t));

    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f)
        throw IoError("save_snapshot: cannot open " + path);
    const size_t written = std::fwrite(buf.data(), 1, buf.size(), f);
    std::fclose(f);
    if (written != buf.size())
        throw IoError("save_snapshot: short write to " + path);
}

Snapshot load_snapshot(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f)
        throw IoError("load_snapshot: cannot open " + path);
    std::fseek(f, 0, SEEK_END);
    const long size = std::ftell(f);
    std::fseek(f, 0, SEEK_SET);
    std::vector<unsigned char> buf(static_cast<size_t>(size));
    const size_t read = std::fread(buf.data(), 1, buf.size(), f);
    std::fclose(f);
    if (read != buf.size() || buf.size() < kHeaderSize)
        throw IoError("load_snapshot: truncated file " + path);
    if (std::memcmp(buf.data(), kMagic, 5) != 0)
        throw IoError("load_snapshot: bad magic in " + path);

    Snapshot snap;
    const unsigned char* p = buf.data() + 6;
    snap.region.x_min = static_cast<int>(static_cast<int64_t>(get_u64(p)));
    snap.region.x_max = static_cast<int>(static_cast<int64_t>(get_u64(p + 8)));
    snap.region.t_min = static_cast<int>(static_cast<int64_t>(get_u64(p + 16)));
    snap.region.t_max = static_cast<int>(static_cast<int64_t>(get_u64(p + 24)));
    snap.seed = get_u64(p + 32);
    snap.spec.bulk = get_dist(p + 40);
    snap.spec.vertical = get_dist(p + 57);
    const size_t cells = static_cast<size_t>(snap.region.cells());
    if (buf.size() != kHeaderSize + cells * 8)
        throw IoError("load_snapshot: size mismatch in " + path);
    snap.field.grid = snap.region;
    snap.field.values.resize(cells);
    const unsigned char* w = buf.data() + kHeaderSize;
    for (size_t i = 0; i < cells; ++i)
        snap.field.values[i] = get_f64(w + 8 * i);
    return snap;
}

} // namespace polymer
