#include "rvmret/field_table.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rvmret/errors.hpp"

namespace rvmret {

namespace {

constexpr char kMagic[8] = {'R', 'V', 'M', 'F', 'T', 'A', 'B', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::string& path) {
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T)))
        throw std::runtime_error("truncated field table: " + path);
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

struct Loc {
    std::size_t i0;
    double fr;
};

// fractional position on the axis; snaps to nodes within 1e-12 of a cell
bool locate(const Axis& a, double v, Loc& out) {
    const double n1 = static_cast<double>(a.count - 1);
    double u = (v - a.min) / a.step();
    if (!(u >= -1e-9 && u <= n1 + 1e-9)) return false;
    u = std::clamp(u, 0.0, n1);
    double fl = std::floor(u);
    double fr = u - fl;
    if (fr < 1e-12) {
        fr = 0.0;
    } else if (fr > 1.0 - 1e-12) {
        fl += 1.0;
        fr = 0.0;
    }
    if (fl >= n1) {
        fl = n1;
        fr = 0.0;
    }
    out.i0 = static_cast<std::size_t>(fl);
    out.fr = fr;
    return true;
}

}  // namespace

FieldTable::FieldTable(const Axis& t, const Axis& x1, const Axis& x2, const Axis& x3)
    : axes_{t, x1, x2, x3} {
    for (const Axis& a : axes_) {
        if (a.count < 2 || !(a.max > a.min))
            throw std::invalid_argument("FieldTable: each axis needs count >= 2 and max > min");
    }
    values_.assign(t.count * x1.count * x2.count * x3.count * kComponents, 0.0);
}

FieldTable FieldTable::from_spec(const QuadratureSpec& q) {
    const Axis xa{-q.half_width, q.half_width, static_cast<std::uint64_t>(q.n_x)};
    return FieldTable({q.t_min, q.t_max, static_cast<std::uint64_t>(q.n_t)}, xa, xa, xa);
}

std::array<std::size_t, 4> FieldTable::unravel(std::size_t node) const {
    std::array<std::size_t, 4> r{};
    r[3] = node % axes_[3].count;
    node /= axes_[3].count;
    r[2] = node % axes_[2].count;
    node /= axes_[2].count;
    r[1] = node % axes_[1].count;
    r[0] = node / axes_[1].count;
    return r;
}

FieldValue FieldTable::at(std::size_t node) const {
    const double* v = &values_[node * kComponents];
    return {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
}

void FieldTable::set(std::size_t node, const FieldValue& f) {
    double* v = &values_[node * kComponents];
    v[0] = f.E.x;
    v[1] = f.E.y;
    v[2] = f.E.z;
    v[3] = f.B.x;
    v[4] = f.B.y;
    v[5] = f.B.z;
}

Vec3 FieldTable::node_x(std::size_t node) const {
    const auto ix = unravel(node);
    return {axes_[1].node(ix[1]), axes_[2].node(ix[2]), axes_[3].node(ix[3])};
}

bool FieldTable::contains(double t, const Vec3& x) const {
    Loc l;
    return locate(axes_[0], t, l) && locate(axes_[1], x.x, l) && locate(axes_[2], x.y, l) &&
           locate(axes_[3], x.z, l);
}

FieldValue FieldTable::interpolate(double t, const Vec3& x) const {
    Loc L[4];
    if (!locate(axes_[0], t, L[0]) || !locate(axes_[1], x.x, L[1]) ||
        !locate(axes_[2], x.y, L[2]) || !locate(axes_[3], x.z, L[3]))
        return {};
    double acc[kComponents] = {0, 0, 0, 0, 0, 0};
    for (int a = 0; a < 2; ++a) {
        const double wa = a ? L[0].fr : 1.0 - L[0].fr;
        if (wa == 0.0) continue;
        for (int b = 0; b < 2; ++b) {
            const double wb = wa * (b ? L[1].fr : 1.0 - L[1].fr);
            if (wb == 0.0) continue;
            for (int c = 0; c < 2; ++c) {
                const double wc = wb * (c ? L[2].fr : 1.0 - L[2].fr);
                if (wc == 0.0) continue;
                for (int d = 0; d < 2; ++d) {
                    const double w = wc * (d ? L[3].fr : 1.0 - L[3].fr);
                    if (w == 0.0) continue;
                    const double* v =
                        &values_[index(L[0].i0 + a, L[1].i0 + b, L[2].i0 + c, L[3].i0 + d) *
                                 kComponents];
                    for (int k = 0; k < kComponents; ++k) acc[k] += w * v[k];
                }
            }
        }
    }
    return {{acc[0], acc[1], acc[2]}, {acc[3], acc[4], acc[5]}};
}

void FieldTable::write(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, kVersion);
    for (const Axis& a : axes_) {
        put<double>(os, a.min);
        put<double>(os, a.max);
        put<std::uint64_t>(os, a.count);
    }
    put<std::uint64_t>(os, kComponents);
    for (double v : values_) put<double>(os, v);
    if (!os) throw std::runtime_error("write failed: " + path);
}

FieldTable FieldTable::read(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open field table: " + path);
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a field table (bad magic): " + path);
    const auto version = get<std::uint32_t>(is, path);
    if (version != kVersion) {
        std::ostringstream os;
        os << "unsupported field table version " << version << ": " << path;
        throw std::runtime_error(os.str());
    }
    std::array<Axis, 4> ax;
    for (Axis& a : ax) {
        a.min = get<double>(is, path);
        a.max = get<double>(is, path);
        a.count = get<std::uint64_t>(is, path);
    }
    const auto ncomp = get<std::uint64_t>(is, path);
    if (ncomp != kComponents) throw std::runtime_error("unexpected component count in " + path);
    FieldTable t(ax[0], ax[1], ax[2], ax[3]);
    for (double& v : t.values_) v = get<double>(is, path);
    return t;
}

FieldTable difference(const FieldTable& a, const FieldTable& b) {
    if (!a.same_grid(b)) throw std::invalid_argument("difference: tables on different grids");
    FieldTable d = a;
    auto& dv = d.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] -= bv[i];
    return d;
}

void fill_table(FieldTable& table, const std::function<FieldValue(double, const Vec3&)>& fn) {
    for (std::size_t n = 0; n < table.node_count(); ++n)
        table.set(n, fn(table.node_t(n), table.node_x(n)));
}

FieldDomain TableField::domain() const {
    FieldDomain d;
    d.t_min = table_->axis(0).min;
    d.t_max = table_->axis(0).max;
    d.half_width = std::max({std::abs(table_->axis(1).min), std::abs(table_->axis(1).max),
                             std::abs(table_->axis(2).min), std::abs(table_->axis(2).max),
                             std::abs(table_->axis(3).min), std::abs(table_->axis(3).max)});
    d.zero_outside = true;
    return d;
}

}  // namespace rvmret
