#include "loosectl/footprint.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include <Eigen/Eigenvalues>

#include "loosectl/error.hpp"

namespace lc {

namespace {

class Grid {
public:
    Grid(int nx, int nz) : nx_(nx), nz_(nz), cells_(static_cast<std::size_t>(nx) * nz, 0) {}

    int nx() const { return nx_; }
    int nz() const { return nz_; }
    bool inside(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < nz_; }
    bool get(int i, int j) const { return inside(i, j) && cells_[idx(i, j)] != 0; }
    void set(int i, int j, bool v = true) {
        if (inside(i, j)) cells_[idx(i, j)] = v ? 1 : 0;
    }

private:
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }

    int nx_;
    int nz_;
    std::vector<std::uint8_t> cells_;
};

struct GridFrame {
    double x0 = 0.0;
    double z0 = 0.0;
    double cell = 1.0;

    Vec2 to_cell_coords(const Vec2& p) const { return {(p.x() - x0) / cell, (p.y() - z0) / cell}; }
    Vec2 corner(int i, int j) const { return {x0 + i * cell, z0 + j * cell}; }
};

// Marks every cell crossed by the segment a -> b (cell coordinates).
void mark_segment(Grid& grid, const Vec2& a, const Vec2& b) {
    int i = static_cast<int>(std::floor(a.x()));
    int j = static_cast<int>(std::floor(a.y()));
    const int ie = static_cast<int>(std::floor(b.x()));
    const int je = static_cast<int>(std::floor(b.y()));
    const Vec2 d = b - a;
    const int si = d.x() > 0 ? 1 : (d.x() < 0 ? -1 : 0);
    const int sj = d.y() > 0 ? 1 : (d.y() < 0 ? -1 : 0);
    const double inf = std::numeric_limits<double>::infinity();
    double t_max_x = si != 0 ? ((si > 0 ? (i + 1) - a.x() : a.x() - i) / std::abs(d.x())) : inf;
    double t_max_z = sj != 0 ? ((sj > 0 ? (j + 1) - a.y() : a.y() - j) / std::abs(d.y())) : inf;
    const double t_dx = si != 0 ? 1.0 / std::abs(d.x()) : inf;
    const double t_dz = sj != 0 ? 1.0 / std::abs(d.y()) : inf;
    grid.set(i, j);
    const int max_steps = std::abs(ie - i) + std::abs(je - j) + 2;
    for (int step = 0; step < max_steps && (i != ie || j != je); ++step) {
        if (t_max_x < t_max_z) {
            i += si;
            t_max_x += t_dx;
        } else {
            j += sj;
            t_max_z += t_dz;
        }
        grid.set(i, j);
    }
}

Grid close_radius1(const Grid& g) {
    Grid dil(g.nx(), g.nz());
    for (int j = 0; j < g.nz(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            if (!g.get(i, j)) continue;
            for (int dj = -1; dj <= 1; ++dj)
                for (int di = -1; di <= 1; ++di) dil.set(i + di, j + dj);
        }
    Grid ero(g.nx(), g.nz());
    for (int j = 0; j < g.nz(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            bool all = true;
            for (int dj = -1; dj <= 1 && all; ++dj)
                for (int di = -1; di <= 1 && all; ++di) all = dil.get(i + di, j + dj);
            if (all) ero.set(i, j);
        }
    return ero;
}

// Largest 8-connected component; ties go to the component whose
// lexicographically smallest (x, z) cell comes first.
Grid largest_component(const Grid& g) {
    std::vector<int> label(static_cast<std::size_t>(g.nx()) * g.nz(), -1);
    auto at = [&](int i, int j) -> int& { return label[static_cast<std::size_t>(j) * g.nx() + i]; };
    int best = -1;
    std::size_t best_count = 0;
    int next = 0;
    std::deque<std::pair<int, int>> queue;
    for (int i = 0; i < g.nx(); ++i) {
        for (int j = 0; j < g.nz(); ++j) {
            if (!g.get(i, j) || at(i, j) >= 0) continue;
            const int id = next++;
            std::size_t count = 0;
            at(i, j) = id;
            queue.emplace_back(i, j);
            while (!queue.empty()) {
                const auto [ci, cj] = queue.front();
                queue.pop_front();
                ++count;
                for (int dj = -1; dj <= 1; ++dj)
                    for (int di = -1; di <= 1; ++di) {
                        const int ni = ci + di;
                        const int nj = cj + dj;
                        if (g.get(ni, nj) && at(ni, nj) < 0) {
                            at(ni, nj) = id;
                            queue.emplace_back(ni, nj);
                        }
                    }
            }
            if (count > best_count) {
                best_count = count;
                best = id;
            }
        }
    }
    Grid out(g.nx(), g.nz());
    for (int j = 0; j < g.nz(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            if (at(i, j) == best && best >= 0) out.set(i, j);
    return out;
}

// Diagonal-only contacts become edge contacts so the traced outline of the
// 8-connected component is a simple ring.
void fill_pinches(Grid& g) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (int j = 0; j + 1 < g.nz(); ++j)
            for (int i = 0; i + 1 < g.nx(); ++i) {
                const bool a = g.get(i, j), b = g.get(i + 1, j);
                const bool c = g.get(i, j + 1), d = g.get(i + 1, j + 1);
                if (a && d && !b && !c) {
                    g.set(i + 1, j);
                    changed = true;
                } else if (b && c && !a && !d) {
                    g.set(i, j);
                    changed = true;
                }
            }
    }
}

// Outer boundary along cell edges, counter-clockwise (interior on the left),
// as lattice corners with collinear runs collapsed.
std::vector<std::pair<int, int>> trace_outer(const Grid& g) {
    int si = -1, sj = -1;
    for (int i = 0; i < g.nx() && si < 0; ++i)
        for (int j = 0; j < g.nz(); ++j)
            if (g.get(i, j)) {
                si = i;
                sj = j;
                break;
            }
    if (si < 0) return {};

    // Cell on the left/right of a directed unit edge starting at corner (x, y).
    auto cell_ahead_left = [&](int x, int y, int dx, int dy) {
        // Ahead cell whose corner is (x, y) on the left side of direction (dx, dy).
        const int lx = -dy, ly = dx;
        const int ci = x + std::min(0, dx) + std::min(0, lx);
        const int cj = y + std::min(0, dy) + std::min(0, ly);
        return g.get(ci, cj);
    };
    auto cell_ahead_right = [&](int x, int y, int dx, int dy) {
        const int rx = dy, ry = -dx;
        const int ci = x + std::min(0, dx) + std::min(0, rx);
        const int cj = y + std::min(0, dy) + std::min(0, ry);
        return g.get(ci, cj);
    };

    std::vector<std::pair<int, int>> ring;
    int x = si, y = sj, dx = 1, dy = 0;
    const int sx = x, sy = y, sdx = dx, sdy = dy;
    const std::size_t limit = 4u * static_cast<std::size_t>(g.nx() + 1) * (g.nz() + 1);
    for (std::size_t steps = 0; steps < limit; ++steps) {
        x += dx;
        y += dy;
        const bool al = cell_ahead_left(x, y, dx, dy);
        const bool ar = cell_ahead_right(x, y, dx, dy);
        int ndx = dx, ndy = dy;
        if (al && ar) {
            ndx = dy;
            ndy = -dx;  // right turn
        } else if (!al) {
            ndx = -dy;
            ndy = dx;  // left turn
        }
        if (ndx != dx || ndy != dy) ring.emplace_back(x, y);
        dx = ndx;
        dy = ndy;
        if (x == sx && y == sy && dx == sdx && dy == sdy) break;
    }
    // Rotate so the ring starts at the start corner.
    auto it = std::find(ring.begin(), ring.end(), std::make_pair(sx, sy));
    if (it != ring.end()) std::rotate(ring.begin(), it, ring.end());
    return ring;
}

double point_line_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len = ab.norm();
    if (len == 0.0) return (p - a).norm();
    return std::abs(ab.x() * (p.y() - a.y()) - ab.y() * (p.x() - a.x())) / len;
}

void douglas_peucker(const std::vector<Vec2>& pts, std::size_t first, std::size_t last, double eps,
                     std::vector<bool>& keep) {
    if (last <= first + 1) return;
    double dmax = -1.0;
    std::size_t index = first;
    for (std::size_t k = first + 1; k < last; ++k) {
        const double d = point_line_distance(pts[k], pts[first], pts[last]);
        if (d > dmax) {
            dmax = d;
            index = k;
        }
    }
    if (dmax > eps) {
        keep[index] = true;
        douglas_peucker(pts, first, index, eps, keep);
        douglas_peucker(pts, index, last, eps, keep);
    }
}

struct Line {
    Vec2 n;      // unit outward normal
    double c;    // n . p <= c inside
    bool supported;
};

std::optional<Vec2> intersect(const Line& a, const Line& b) {
    const double det = a.n.x() * b.n.y() - a.n.y() * b.n.x();
    if (std::abs(det) < 0.05) return std::nullopt;
    return Vec2((a.c * b.n.y() - b.c * a.n.y()) / det, (a.n.x() * b.c - b.n.x() * a.c) / det);
}

// Outermost-layer line fit for one simplified edge.
Line refine_edge(const Vec2& a, const Vec2& b, const std::vector<Vec2>& pts, double cell, double end_margin) {
    const Vec2 t = (b - a).normalized();
    const Vec2 n0(t.y(), -t.x());
    Line line{n0, -std::numeric_limits<double>::infinity(), false};
    for (const auto& p : pts) line.c = std::max(line.c, n0.dot(p));
    if (pts.empty()) {
        line.c = std::max(n0.dot(a), n0.dot(b));
        return line;
    }
    const double length = (b - a).norm();
    // Points near the ends may belong to the neighbouring wall.
    std::vector<Vec2> core;
    for (const auto& p : pts) {
        const double s = (p - a).dot(t);
        const double m = std::min(0.25 * length, end_margin);
        if (s >= m && s <= length - m) core.push_back(p);
    }
    const std::vector<Vec2>& use = core.size() >= 2 ? core : pts;
    Vec2 n = n0;
    for (double tol : {2.0 * cell, 0.5 * cell, 0.1 * cell, 0.02 * cell}) {
        double cmax = -std::numeric_limits<double>::infinity();
        for (const auto& p : use) cmax = std::max(cmax, n.dot(p));
        std::vector<Vec2> layer;
        for (const auto& p : use)
            if (n.dot(p) >= cmax - tol) layer.push_back(p);
        if (layer.size() < 2) break;
        Vec2 mean = Vec2::Zero();
        for (const auto& p : layer) mean += p;
        mean /= static_cast<double>(layer.size());
        Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
        for (const auto& p : layer) cov += (p - mean) * (p - mean).transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
        const Vec2 dir = eig.eigenvectors().col(1);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& p : layer) {
            lo = std::min(lo, dir.dot(p));
            hi = std::max(hi, dir.dot(p));
        }
        if (hi - lo < 0.2 * length) break;
        Vec2 cand(dir.y(), -dir.x());
        if (cand.dot(n0) < 0) cand = -cand;
        if (cand.dot(n0) < std::cos(30.0 * std::numbers::pi / 180.0)) break;
        n = cand;
        line.supported = true;
    }
    line.n = n;
    line.c = -std::numeric_limits<double>::infinity();
    for (const auto& p : line.supported ? use : pts) line.c = std::max(line.c, n.dot(p));
    line.c += 1e-6;
    return line;
}

std::vector<Vec2> refine_polygon(const std::vector<Vec2>& poly, const std::vector<Vec2>& pts,
                                 double cell, double eps) {
    const std::size_t m = poly.size();
    const double band = eps + 3.0 * cell;
    std::vector<std::vector<Vec2>> assigned(m);
    for (const auto& p : pts) {
        double best = band;
        std::size_t best_edge = m;
        for (std::size_t k = 0; k < m; ++k) {
            const Vec2& a = poly[k];
            const Vec2& b = poly[(k + 1) % m];
            const Vec2 ab = b - a;
            const double s = (p - a).dot(ab) / ab.squaredNorm();
            if (s < 0.0 || s > 1.0) continue;
            const double d = point_line_distance(p, a, b);
            if (d <= best) {
                best = d;
                best_edge = k;
            }
        }
        if (best_edge < m) assigned[best_edge].push_back(p);
    }
    std::vector<Line> lines(m);
    for (std::size_t k = 0; k < m; ++k)
        lines[k] = refine_edge(poly[k], poly[(k + 1) % m], assigned[k], cell, band);

    // Unsupported short edges between supported neighbours collapse into
    // the neighbours' intersection.
    std::vector<std::size_t> keep;
    std::size_t dropped = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const double len = (poly[(k + 1) % m] - poly[k]).norm();
        if (!lines[k].supported && len < 2.0 * eps + 2.0 * cell && m - dropped > 3) {
            const Line& prev = lines[(k + m - 1) % m];
            const Line& next = lines[(k + 1) % m];
            if (prev.supported && next.supported) {
                const auto x = intersect(prev, next);
                if (x && (*x - poly[k]).norm() < band && (*x - poly[(k + 1) % m]).norm() < band) {
                    ++dropped;
                    continue;
                }
            }
        }
        keep.push_back(k);
    }
    // Merge consecutive edges that refined onto the same line.
    std::vector<std::size_t> merged;
    for (std::size_t idx = 0; idx < keep.size(); ++idx) {
        const Line& cur = lines[keep[idx]];
        if (!merged.empty()) {
            const Line& prev = lines[merged.back()];
            if (prev.supported && cur.supported && prev.n.dot(cur.n) > std::cos(0.02) &&
                std::abs(prev.c - cur.c) < cell)
                continue;
        }
        merged.push_back(keep[idx]);
    }
    if (merged.size() >= 2) {
        const Line& first = lines[merged.front()];
        const Line& last = lines[merged.back()];
        if (first.supported && last.supported && first.n.dot(last.n) > std::cos(0.02) &&
            std::abs(first.c - last.c) < cell)
            merged.erase(merged.begin());
    }
    if (merged.size() < 3) return poly;

    std::vector<Vec2> out;
    const std::size_t q = merged.size();
    for (std::size_t idx = 0; idx < q; ++idx) {
        const std::size_t k_prev = merged[(idx + q - 1) % q];
        const std::size_t k = merged[idx];
        const Vec2& original = poly[k];
        const auto x = intersect(lines[k_prev], lines[k]);
        if (x && (*x - original).norm() <= band + eps) {
            out.push_back(*x);
        } else {
            // Near-parallel neighbours: average of the projections.
            const Vec2 pa = original - (lines[k_prev].n.dot(original) - lines[k_prev].c) * lines[k_prev].n;
            const Vec2 pb = original - (lines[k].n.dot(original) - lines[k].c) * lines[k].n;
            out.push_back(0.5 * (pa + pb));
        }
    }
    return out;
}

// The fan apex lands near the viewpoint; move it to sit just behind the
// viewpoint so the viewpoint is strictly interior.
void tuck_viewpoint(Polygon2D& poly, const Vec2& viewpoint, double radius, double cell) {
    auto& v = poly.vertices;
    const std::size_t m = v.size();
    if (m < 3) return;
    std::size_t k = 0;
    for (std::size_t i = 1; i < m; ++i)
        if ((v[i] - viewpoint).norm() < (v[k] - viewpoint).norm()) k = i;
    if ((v[k] - viewpoint).norm() > radius) return;
    const Vec2 a = (v[(k + m - 1) % m] - v[k]).normalized();
    const Vec2 b = (v[(k + 1) % m] - v[k]).normalized();
    Vec2 inward = a + b;
    if (inward.norm() < 1e-9) return;
    inward.normalize();
    // Reflex apex: the bisector points outward.
    if (a.x() * b.y() - a.y() * b.x() > 0.0) inward = -inward;
    v[k] = viewpoint - 0.5 * cell * inward;
    // Slide the fan's far ends a cell outward along their walls so the
    // outermost view rays land on the wall rather than the fan side.
    const std::size_t ip = (k + m - 1) % m, in = (k + 1) % m;
    const Vec2 vp = v[ip], vn = v[in];
    v[ip] = vp + cell * (vp - v[(k + m - 2) % m]).normalized();
    v[in] = vn + cell * (vn - v[(k + 2) % m]).normalized();
}

}  // namespace

std::vector<Vec2> simplify_closed_ring(const std::vector<Vec2>& ring, double eps) {
    const std::size_t n = ring.size();
    if (n <= 3 || eps <= 0.0) return ring;
    // Split the ring at vertex 0 and the vertex farthest from it.
    std::size_t far = 0;
    double dmax = -1.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double d = (ring[k] - ring[0]).norm();
        if (d > dmax) {
            dmax = d;
            far = k;
        }
    }
    std::vector<Vec2> pts(ring);
    pts.push_back(ring[0]);
    std::vector<bool> keep(pts.size(), false);
    keep[0] = keep[far] = keep[n] = true;
    douglas_peucker(pts, 0, far, eps, keep);
    douglas_peucker(pts, far, n, eps, keep);
    std::vector<Vec2> out;
    for (std::size_t k = 0; k < n; ++k)
        if (keep[k]) out.push_back(ring[k]);
    return out;
}

Polygon2D extract_footprint_polygon(const PointCloud& cloud, const FootprintOptions& opts) {
    if (cloud.empty()) throw DegenerateInput("footprint extraction needs a non-empty cloud");
    if (!(opts.cell_m > 0.0)) throw InvalidArgument("cell_m must be positive");
    if (!(opts.simplify_eps_cells >= 0.0)) throw InvalidArgument("simplify_eps_cells must be >= 0");

    std::vector<Vec2> plan;
    plan.reserve(cloud.size() + 1);
    for (const auto& p : cloud.points) plan.emplace_back(p.x(), p.z());

    Vec2 lo = plan.front(), hi = plan.front();
    for (const auto& p : plan) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    if (opts.viewpoint) {
        lo = lo.cwiseMin(*opts.viewpoint);
        hi = hi.cwiseMax(*opts.viewpoint);
    }
    constexpr int kMargin = 3;
    const double cell = opts.cell_m;
    GridFrame frame{lo.x() - kMargin * cell, lo.y() - kMargin * cell, cell};
    const double nx_d = std::ceil((hi.x() - frame.x0) / cell) + kMargin + 1;
    const double nz_d = std::ceil((hi.y() - frame.z0) / cell) + kMargin + 1;
    if (nx_d * nz_d > 2.5e8) throw InvalidArgument("footprint grid too large for cell_m");
    Grid grid(static_cast<int>(nx_d), static_cast<int>(nz_d));

    std::vector<std::pair<int, int>> occupied;
    for (const auto& p : plan) {
        const Vec2 c = frame.to_cell_coords(p);
        const int i = static_cast<int>(std::floor(c.x()));
        const int j = static_cast<int>(std::floor(c.y()));
        if (!grid.get(i, j)) {
            grid.set(i, j);
            occupied.emplace_back(i, j);
        }
    }
    if (occupied.size() < 3)
        throw DegenerateInput("cloud projects to fewer than 3 distinct footprint cells");

    if (opts.viewpoint) {
        const Vec2 from = frame.to_cell_coords(*opts.viewpoint);
        for (const auto& [i, j] : occupied) mark_segment(grid, from, Vec2(i + 0.5, j + 0.5));
    }

    Grid region = largest_component(close_radius1(grid));
    fill_pinches(region);
    const auto corners = trace_outer(region);
    std::vector<Vec2> ring;
    ring.reserve(corners.size());
    for (const auto& [i, j] : corners) ring.push_back(frame.corner(i, j));
    if (ring.size() < 3) throw DegenerateInput("footprint outline is degenerate");

    const double eps = opts.simplify_eps_cells * cell;
    Polygon2D poly;
    for (double e = eps;; e *= 0.5) {
        poly.vertices = simplify_closed_ring(ring, e);
        if (poly.vertices.size() >= 3 && poly.is_simple() && poly.signed_area() > 0.0) break;
        if (e < 1e-3 * cell) {
            poly.vertices = ring;
            break;
        }
    }

    if (opts.refine_edges) {
        std::vector<Vec2> support = plan;
        if (opts.viewpoint) support.push_back(*opts.viewpoint);
        Polygon2D refined{refine_polygon(poly.vertices, support, cell, eps)};
        if (opts.viewpoint) tuck_viewpoint(refined, *opts.viewpoint, eps + 3.0 * cell, cell);
        if (refined.vertices.size() >= 3 && refined.is_simple() && refined.signed_area() > 0.0)
            return refined;
    }
    if (opts.viewpoint) tuck_viewpoint(poly, *opts.viewpoint, eps + 3.0 * cell, cell);
    return poly;
}

}  // namespace lc
