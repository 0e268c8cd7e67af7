#include "s2lab/masks.hpp"

#include <cmath>
#include <queue>

#include "s2lab/fd.hpp"

namespace s2lab {

IntegralResult integrate(const ScalarField& f, const RegionMask& mask) {
    require_same_layout(f.grid, mask.grid, "integrate");
    IntegralResult r;
    double sum = 0.0;
    Index active = 0;
    for (Index i = 0; i < f.size(); ++i) {
        if (mask.m[i]) {
            sum += f.v[i];
            ++active;
        }
    }
    double cell = 1.0;
    for (int a = 0; a < f.grid.dim; ++a) cell *= f.grid.spacing;
    r.value = sum * cell;
    r.empty_mask = (active == 0);
    return r;
}

RegionMask ball_mask(const Grid& grid, double radius) {
    return ball_mask(grid, radius, std::vector<double>(grid.dim, 0.0));
}

RegionMask ball_mask(const Grid& grid, double radius, const std::vector<double>& center) {
    if (static_cast<int>(center.size()) != grid.dim)
        throw std::invalid_argument("ball_mask: center dimension mismatch");
    const double r2 = radius * radius * (1.0 + 1e-12);
    RegionMask out(grid);
    double x[kMaxDim];
    for (GridWalker w(grid); !w.done(); w.advance()) {
        grid.node_coords(w.idx(), x);
        double d2 = 0.0;
        for (int a = 0; a < grid.dim; ++a) {
            const double d = x[a] - center[a];
            d2 += d * d;
        }
        out.m[w.flat()] = (d2 <= r2) ? 1 : 0;
    }
    return out;
}

RegionMask box_interior_mask(const Grid& grid, int margin) {
    if (margin < 0) throw std::invalid_argument("box_interior_mask: margin must be >= 0");
    RegionMask out(grid);
    for (GridWalker w(grid); !w.done(); w.advance()) {
        bool in = true;
        for (int a = 0; a < grid.dim && in; ++a)
            in = (w.idx()[a] >= margin) && (w.idx()[a] < grid.shape[a] - margin);
        out.m[w.flat()] = in ? 1 : 0;
    }
    return out;
}

RegionMask mask_from_predicate(const Grid& grid, const std::function<bool(const double*)>& fn) {
    RegionMask out(grid);
    double x[kMaxDim];
    for (GridWalker w(grid); !w.done(); w.advance()) {
        grid.node_coords(w.idx(), x);
        out.m[w.flat()] = fn(x) ? 1 : 0;
    }
    return out;
}

RegionMask mask_and(const RegionMask& a, const RegionMask& b) {
    require_same_layout(a.grid, b.grid, "mask_and");
    RegionMask out(a.grid);
    for (Index i = 0; i < a.grid.size(); ++i) out.m[i] = a.m[i] & b.m[i];
    return out;
}

RegionMask mask_or(const RegionMask& a, const RegionMask& b) {
    require_same_layout(a.grid, b.grid, "mask_or");
    RegionMask out(a.grid);
    for (Index i = 0; i < a.grid.size(); ++i) out.m[i] = a.m[i] | b.m[i];
    return out;
}

bool mask_subset(const RegionMask& inner, const RegionMask& outer) {
    require_same_layout(inner.grid, outer.grid, "mask_subset");
    for (Index i = 0; i < inner.grid.size(); ++i)
        if (inner.m[i] && !outer.m[i]) return false;
    return true;
}

RegionMask connected_component(const RegionMask& mask, Index seed) {
    if (seed < 0 || seed >= mask.grid.size())
        throw std::invalid_argument("connected_component: seed out of range");
    if (!mask.m[seed]) throw std::invalid_argument("connected_component: seed not inside mask");

    const Grid& g = mask.grid;
    RegionMask out(g);
    std::vector<int> idx(g.dim);
    std::queue<Index> frontier;
    out.m[seed] = 1;
    frontier.push(seed);
    while (!frontier.empty()) {
        const Index cur = frontier.front();
        frontier.pop();
        g.unflatten(cur, idx.data());
        for (int a = 0; a < g.dim; ++a) {
            for (int dir = -1; dir <= 1; dir += 2) {
                const int ni = idx[a] + dir;
                if (ni < 0 || ni >= g.shape[a]) continue;
                const Index nb = cur + dir * g.stride[a];
                if (mask.m[nb] && !out.m[nb]) {
                    out.m[nb] = 1;
                    frontier.push(nb);
                }
            }
        }
    }
    return out;
}

LipschitzReport lipschitz_norm(const ScalarField& f, const RegionMask& mask) {
    require_same_layout(f.grid, mask.grid, "lipschitz_norm");
    LipschitzReport rep;
    const VectorField grad = fd_gradient(f);
    const int dim = f.grid.dim;
    for (Index i = 0; i < f.size(); ++i) {
        if (!mask.m[i]) continue;
        rep.sup = std::max(rep.sup, std::abs(f.v[i]));
        double g2 = 0.0;
        for (int a = 0; a < dim; ++a) g2 += grad.v[i * dim + a] * grad.v[i * dim + a];
        rep.lip = std::max(rep.lip, std::sqrt(g2));
    }
    return rep;
}

}  // namespace s2lab
