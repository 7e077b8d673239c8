#include "pflux/meshing.hpp"

#include "pflux/error.hpp"
#include "pflux/predicates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <ostream>
#include <unordered_map>

namespace pflux {

namespace {

using predicates::incircle;
using predicates::orient2d;

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// Ray-casting point location against a fixed polygon, with edges bucketed in y.
class PolygonLocator {
 public:
  explicit PolygonLocator(const std::vector<Point>& poly) : poly_(poly) {
    ymin_ = ymax_ = poly.front().y();
    for (const Point& p : poly) {
      ymin_ = std::min(ymin_, p.y());
      ymax_ = std::max(ymax_, p.y());
    }
    nbins_ = std::max<int>(1, static_cast<int>(poly.size()));
    bins_.resize(nbins_);
    const int n = static_cast<int>(poly.size());
    for (int j = 0; j < n; ++j) {
      const Point& a = poly[j];
      const Point& b = poly[(j + 1) % n];
      const int lo = bin(std::min(a.y(), b.y())), hi = bin(std::max(a.y(), b.y()));
      for (int q = lo; q <= hi; ++q) bins_[q].push_back(j);
    }
  }

  bool contains(const Point& x) const {
    if (x.y() < ymin_ || x.y() > ymax_) return false;
    const int n = static_cast<int>(poly_.size());
    bool inside = false;
    for (int j : bins_[bin(x.y())]) {
      const Point& a = poly_[j];
      const Point& b = poly_[(j + 1) % n];
      if ((a.y() > x.y()) != (b.y() > x.y())) {
        const double xc = a.x() + (x.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
        if (x.x() < xc) inside = !inside;
      }
    }
    return inside;
  }

 private:
  int bin(double y) const {
    const double r = (y - ymin_) / std::max(ymax_ - ymin_, 1e-300);
    return std::clamp(static_cast<int>(r * nbins_), 0, nbins_ - 1);
  }

  const std::vector<Point>& poly_;
  double ymin_, ymax_;
  int nbins_;
  std::vector<std::vector<int>> bins_;
};

struct Tri {
  std::array<int, 3> v;
  std::array<int, 3> n;  // n[i]: neighbour across the edge opposite v[i]
  bool alive = true;
};

struct Segment {
  int a, b;
  bool boundary;
  BoundaryTag tag;
  int outlet;  // -1 unless the segment lies on a snapped section
  int snap;
  bool alive = true;
};

class Triangulator {
 public:
  Triangulator(const CutDomain& cd, double h, const MeshOptions& opt)
      : cd_(cd), h_(h), opt_(opt), locator_(cd.boundary) {
    double xmin = cd.boundary[0].x(), xmax = xmin, ymin = cd.boundary[0].y(), ymax = ymin;
    for (const Point& p : cd.boundary) {
      xmin = std::min(xmin, p.x());
      xmax = std::max(xmax, p.x());
      ymin = std::min(ymin, p.y());
      ymax = std::max(ymax, p.y());
    }
    const Point c(0.5 * (xmin + xmax), 0.5 * (ymin + ymax));
    const double L = std::max(xmax - xmin, ymax - ymin) + h;
    pts_ = {c + Point(-40 * L, -30 * L), c + Point(40 * L, -30 * L), c + Point(0, 40 * L)};
    tris_.push_back({{0, 1, 2}, {-1, -1, -1}});
    gen_.push_back(0);
    interior_.push_back(0);
    mark_.push_back(0);
    vert_tri_ = {0, 0, 0};
    const double angle = opt.min_angle_deg * std::numbers::pi / 180.0;
    sin2_min_ = std::sin(angle) * std::sin(angle);
  }

  void build() {
    add_boundary();
    add_sections();
    recover_segments();
    refine();
  }

  Mesh extract() const;

 private:
  // -- basic triangulation --------------------------------------------------

  int locate(const Point& p) {
    int t = (last_ >= 0 && tris_[last_].alive) ? last_ : -1;
    if (t < 0)
      for (int q = 0; q < static_cast<int>(tris_.size()); ++q)
        if (tris_[q].alive) {
          t = q;
          break;
        }
    const int limit = 4 * static_cast<int>(tris_.size()) + 100;
    for (int step = 0; step < limit; ++step) {
      const Tri& tr = tris_[t];
      bool moved = false;
      for (int k = 0; k < 3; ++k) {
        const int i = (k + step) % 3;
        if (orient2d(pts_[tr.v[(i + 1) % 3]], pts_[tr.v[(i + 2) % 3]], p) < 0) {
          t = tr.n[i];
          moved = true;
          break;
        }
      }
      if (!moved) return t;
      if (t < 0) break;
    }
    for (int q = 0; q < static_cast<int>(tris_.size()); ++q) {
      const Tri& tr = tris_[q];
      if (!tr.alive) continue;
      if (orient2d(pts_[tr.v[0]], pts_[tr.v[1]], p) >= 0 && orient2d(pts_[tr.v[1]], pts_[tr.v[2]], p) >= 0 &&
          orient2d(pts_[tr.v[2]], pts_[tr.v[0]], p) >= 0)
        return q;
    }
    throw Error(ErrorCode::InvalidGeometry, "point location failed");
  }

  bool in_circumcircle(int t, const Point& p) const {
    const Tri& tr = tris_[t];
    return incircle(pts_[tr.v[0]], pts_[tr.v[1]], pts_[tr.v[2]], p) > 0;
  }

  int new_slot() {
    if (!free_.empty()) {
      const int s = free_.back();
      free_.pop_back();
      ++gen_[s];
      return s;
    }
    tris_.push_back({});
    gen_.push_back(0);
    interior_.push_back(0);
    mark_.push_back(0);
    return static_cast<int>(tris_.size()) - 1;
  }

  // Inserts p; returns the vertex id (an existing one if p duplicates a vertex).
  int insert(const Point& p) {
    const int t0 = locate(p);
    for (int v : tris_[t0].v)
      if (pts_[v] == p) return v;
    if (static_cast<int>(pts_.size()) >= opt_.max_vertices + 3)
      throw Error(ErrorCode::MeshTooCoarse, "vertex budget exhausted during refinement");
    const int vid = static_cast<int>(pts_.size());
    pts_.push_back(p);
    vert_tri_.push_back(-1);

    struct BEdge {
      int a, b, nb;
    };
    std::vector<int> cavity{t0};
    std::vector<BEdge> bnd;
    ++stamp_;
    mark_[t0] = stamp_;
    for (;;) {
      bnd.clear();
      for (std::size_t q = 0; q < cavity.size(); ++q) {
        const Tri& tr = tris_[cavity[q]];
        for (int i = 0; i < 3; ++i) {
          const int nb = tr.n[i];
          if (nb >= 0 && mark_[nb] == stamp_) continue;
          if (nb >= 0 && in_circumcircle(nb, p)) {
            mark_[nb] = stamp_;
            cavity.push_back(nb);
            continue;
          }
          bnd.push_back({tr.v[(i + 1) % 3], tr.v[(i + 2) % 3], nb});
        }
      }
      bool star = true;
      for (const BEdge& e : bnd)
        if (orient2d(pts_[e.a], pts_[e.b], p) <= 0 && e.nb >= 0) {
          mark_[e.nb] = stamp_;
          cavity.push_back(e.nb);
          star = false;
        }
      if (star) break;
    }

    for (int t : cavity) {
      const Tri& tr = tris_[t];
      for (int i = 0; i < 3; ++i) {
        auto it = seg_of_edge_.find(edge_key(tr.v[i], tr.v[(i + 1) % 3]));
        if (it != seg_of_edge_.end()) seg_queue_.push_back(it->second);
      }
      tris_[t].alive = false;
      free_.push_back(t);
    }
    std::sort(free_.begin(), free_.end(), std::greater<>());
    std::vector<int> created;
    created.reserve(bnd.size());
    for (const BEdge& e : bnd) {
      const int s = new_slot();
      tris_[s] = Tri{{vid, e.a, e.b}, {e.nb, -1, -1}, true};
      if (e.nb >= 0) {
        Tri& o = tris_[e.nb];
        for (int j = 0; j < 3; ++j)
          if (o.v[j] != e.a && o.v[j] != e.b) o.n[j] = s;
      }
      created.push_back(s);
    }
    const int m = static_cast<int>(created.size());
    for (int x = 0; x < m; ++x) {
      Tri& tr = tris_[created[x]];
      for (int y = 0; y < m; ++y) {
        const Tri& other = tris_[created[y]];
        if (other.v[1] == tr.v[2]) tr.n[1] = created[y];  // shares edge (p, b)
        if (other.v[2] == tr.v[1]) tr.n[2] = created[y];  // shares edge (p, a)
      }
      for (int v : tr.v) vert_tri_[v] = created[x];
      interior_[created[x]] = classify(created[x]);
    }
    last_ = created.front();
    for (int s : created) bad_queue_.push_back({s, gen_[s]});
    return vid;
  }

  char classify(int t) const {
    const Tri& tr = tris_[t];
    for (int v : tr.v)
      if (v < 3) return 0;
    const Point c = (pts_[tr.v[0]] + pts_[tr.v[1]] + pts_[tr.v[2]]) / 3.0;
    return locator_.contains(c) ? 1 : 0;
  }

  // Triangle containing the edge (a, b) with its local index of a; -1 if absent.
  std::pair<int, int> find_edge(int a, int b) const {
    const int start = vert_tri_[a];
    int t = start;
    for (int guard = 0; guard < 10000; ++guard) {
      const Tri& tr = tris_[t];
      int i = 0;
      while (tr.v[i] != a) ++i;
      if (tr.v[(i + 1) % 3] == b || tr.v[(i + 2) % 3] == b) return {t, i};
      t = tr.n[(i + 2) % 3];  // across edge (a, v[i+1])
      if (t < 0 || t == start) break;
    }
    return {-1, -1};
  }

  // -- segments -------------------------------------------------------------

  int add_segment(int a, int b, bool boundary, BoundaryTag tag, int outlet, int snap) {
    const int id = static_cast<int>(segs_.size());
    segs_.push_back({a, b, boundary, tag, outlet, snap, true});
    seg_of_edge_[edge_key(a, b)] = id;
    const Point mid = 0.5 * (pts_[a] + pts_[b]);
    grid_[cell_key(mid)].push_back(id);
    seg_queue_.push_back(id);
    return id;
  }

  std::int64_t cell_key(const Point& p) const {
    const auto ix = static_cast<std::int64_t>(std::floor(p.x() / h_));
    const auto iy = static_cast<std::int64_t>(std::floor(p.y() / h_));
    return ix * 4'000'003 + iy;
  }

  std::vector<int> chain(const Point& a, const Point& b) {
    const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / h_ - 1e-9)));
    std::vector<int> ids;
    for (int m = 0; m <= n; ++m) {
      const Point p = m == 0 ? a : m == n ? b : Point(a + (b - a) * (static_cast<double>(m) / n));
      ids.push_back(insert(p));
    }
    return ids;
  }

  void add_boundary() {
    const auto& bd = cd_.boundary;
    const int n = static_cast<int>(bd.size());
    for (int j = 0; j < n; ++j) {
      const BoundaryTag tag = cd_.tags[j];
      int outlet = -1, snap = -1;
      if (tag.kind == BoundaryKind::Cut) {
        outlet = tag.outlet;
        snap = static_cast<int>(cd_.outlets[outlet].snaps.size()) - 1;
      }
      const auto ids = chain(bd[j], bd[(j + 1) % n]);
      for (std::size_t m = 0; m + 1 < ids.size(); ++m) add_segment(ids[m], ids[m + 1], true, tag, outlet, snap);
    }
  }

  void add_sections() {
    for (int i = 0; i < static_cast<int>(cd_.outlets.size()); ++i) {
      const auto& smp = cd_.outlets[i];
      for (int j = 0; j + 1 < static_cast<int>(smp.snaps.size()); ++j) {
        const int q = smp.snap_sample[j];
        const auto ids = chain(smp.right[q], smp.left[q]);
        for (std::size_t m = 0; m + 1 < ids.size(); ++m) add_segment(ids[m], ids[m + 1], false, {}, i, j);
      }
    }
  }

  void split_segment(int id) {
    const Segment s = segs_[id];
    segs_[id].alive = false;
    seg_of_edge_.erase(edge_key(s.a, s.b));
    const int m = insert(0.5 * (pts_[s.a] + pts_[s.b]));
    if (m == s.a || m == s.b) throw Error(ErrorCode::InvalidGeometry, "segment cannot be split further");
    add_segment(s.a, m, s.boundary, s.tag, s.outlet, s.snap);
    add_segment(m, s.b, s.boundary, s.tag, s.outlet, s.snap);
  }

  bool encroaches(const Point& c, const Segment& s) const {
    const Point& a = pts_[s.a];
    const Point& b = pts_[s.b];
    return (c - a).dot(c - b) < -1e-12 * (b - a).squaredNorm();
  }

  bool needs_split(int id) const {
    const Segment& s = segs_[id];
    const auto [t, i] = find_edge(s.a, s.b);
    if (t < 0) return true;
    const Tri& tr = tris_[t];
    const int j = tr.v[(i + 1) % 3] == s.b ? (i + 1) % 3 : (i + 2) % 3;
    const int k = 3 - i - j;
    const int apex = tr.v[k];
    if (apex >= 3 && encroaches(pts_[apex], s)) return true;
    const int nb = tr.n[k];
    if (nb >= 0)
      for (int v : tris_[nb].v)
        if (v != s.a && v != s.b && v >= 3 && encroaches(pts_[v], s)) return true;
    return false;
  }

  void process_segments() {
    while (!seg_queue_.empty()) {
      const int id = seg_queue_.front();
      seg_queue_.pop_front();
      if (!segs_[id].alive) continue;
      if (needs_split(id)) split_segment(id);
    }
  }

  void recover_segments() { process_segments(); }

  // -- refinement -----------------------------------------------------------

  bool is_bad(int t) const {
    const Tri& tr = tris_[t];
    const Point& a = pts_[tr.v[0]];
    const Point& b = pts_[tr.v[1]];
    const Point& c = pts_[tr.v[2]];
    const double la = (b - c).squaredNorm(), lb = (c - a).squaredNorm(), lc = (a - b).squaredNorm();
    const double lmax = std::max({la, lb, lc});
    const double hmax = opt_.size_factor * h_;
    if (lmax > hmax * hmax * (1.0 + 1e-9)) return true;
    // smallest angle is opposite the shortest edge: sin^2 = (2A)^2 / (product of adjacent edges)
    const double area2 = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    const double lmin = std::min({la, lb, lc});
    const double prod = la * lb * lc / lmin;
    return area2 * area2 / prod < sin2_min_;
  }

  Point circumcenter(int t) const {
    const Tri& tr = tris_[t];
    const Point& a = pts_[tr.v[0]];
    const Point b = pts_[tr.v[1]] - a;
    const Point c = pts_[tr.v[2]] - a;
    const double d = 2.0 * (b.x() * c.y() - b.y() * c.x());
    const double bb = b.squaredNorm(), cc = c.squaredNorm();
    return a + Point((c.y() * bb - b.y() * cc) / d, (b.x() * cc - c.x() * bb) / d);
  }

  std::vector<int> encroached_by(const Point& c) const {
    std::vector<int> out;
    const auto ix = static_cast<std::int64_t>(std::floor(c.x() / h_));
    const auto iy = static_cast<std::int64_t>(std::floor(c.y() / h_));
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid_.find((ix + dx) * 4'000'003 + (iy + dy));
        if (it == grid_.end()) continue;
        for (int id : it->second)
          if (segs_[id].alive && encroaches(c, segs_[id])) out.push_back(id);
      }
    std::sort(out.begin(), out.end());
    return out;
  }

  void refine() {
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t)
      if (tris_[t].alive) bad_queue_.push_back({t, gen_[t]});
    const double min_seg = 1e-6 * h_;
    while (!bad_queue_.empty()) {
      const auto [t, g] = bad_queue_.front();
      bad_queue_.pop_front();
      if (!tris_[t].alive || gen_[t] != g || !interior_[t] || !is_bad(t)) continue;
      const Point c = circumcenter(t);
      const auto enc = encroached_by(c);
      if (!enc.empty()) {
        bool split_any = false;
        for (int id : enc) {
          if (!segs_[id].alive) continue;
          if ((pts_[segs_[id].a] - pts_[segs_[id].b]).norm() < min_seg) continue;
          split_segment(id);
          split_any = true;
        }
        process_segments();
        if (split_any && tris_[t].alive && gen_[t] == g) bad_queue_.push_back({t, g});
        continue;
      }
      if (!locator_.contains(c)) continue;
      insert(c);
      process_segments();
    }
  }

  const CutDomain& cd_;
  double h_;
  MeshOptions opt_;
  PolygonLocator locator_;
  double sin2_min_;

  std::vector<Point> pts_;
  std::vector<Tri> tris_;
  std::vector<unsigned> gen_;
  std::vector<char> interior_;
  std::vector<unsigned> mark_;
  unsigned stamp_ = 0;
  std::vector<int> free_;
  std::vector<int> vert_tri_;
  int last_ = 0;

  std::vector<Segment> segs_;
  std::unordered_map<std::uint64_t, int> seg_of_edge_;
  std::unordered_map<std::int64_t, std::vector<int>> grid_;
  std::deque<int> seg_queue_;
  std::deque<std::pair<int, unsigned>> bad_queue_;
};

std::vector<Point> block_polygon(const OutletSampling& smp, int j) {
  std::vector<Point> poly;
  const int a = smp.snap_sample[j], b = smp.snap_sample[j + 1];
  for (int q = a; q <= b; ++q) poly.push_back(smp.right[q]);
  for (int q = b; q >= a; --q) poly.push_back(smp.left[q]);
  return poly;
}

Mesh Triangulator::extract() const {
  Mesh mesh;
  mesh.h = h_;
  mesh.t = cd_.t;
  mesh.domain = cd_.parent;

  std::vector<int> keep;
  for (int t = 0; t < static_cast<int>(tris_.size()); ++t)
    if (tris_[t].alive && interior_[t]) keep.push_back(t);
  std::vector<int> vmap(pts_.size(), -1);
  std::vector<char> used(pts_.size(), 0);
  for (int t : keep)
    for (int v : tris_[t].v) used[v] = 1;
  for (std::size_t v = 3; v < pts_.size(); ++v)
    if (used[v]) {
      vmap[v] = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(pts_[v]);
    }
  std::vector<int> tmap(tris_.size(), -1);
  for (int t : keep) {
    tmap[t] = static_cast<int>(mesh.triangles.size());
    const auto& v = tris_[t].v;
    mesh.triangles.push_back({vmap[v[0]], vmap[v[1]], vmap[v[2]]});
  }
  mesh.global_vertex.resize(mesh.vertices.size());
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) mesh.global_vertex[v] = static_cast<int>(v);

  // sections and boundary
  const int k = static_cast<int>(cd_.outlets.size());
  mesh.snaps.resize(k);
  mesh.section_edges.resize(k);
  for (int i = 0; i < k; ++i) {
    mesh.snaps[i] = cd_.outlets[i].snaps;
    mesh.section_edges[i].resize(mesh.snaps[i].size());
  }
  for (const Segment& s : segs_) {
    if (!s.alive) continue;
    const Edge e{vmap[s.a], vmap[s.b]};
    if (e[0] < 0 || e[1] < 0) throw Error(ErrorCode::InvalidGeometry, "segment outside the triangulated region");
    if (find_edge(s.a, s.b).first < 0) throw Error(ErrorCode::InvalidGeometry, "constrained segment lost during refinement");
    if (s.boundary) mesh.boundary_edges.push_back({e, s.tag});
    if (s.outlet >= 0) mesh.section_edges[s.outlet][s.snap].push_back(e);
  }
  // order section edges from the right wall to the left wall
  for (int i = 0; i < k; ++i)
    for (std::size_t j = 0; j < mesh.section_edges[i].size(); ++j) {
      auto& sec = mesh.section_edges[i][j];
      const Point r = cd_.outlets[i].right[cd_.outlets[i].snap_sample[j]];
      std::sort(sec.begin(), sec.end(), [&](const Edge& x, const Edge& y) {
        return (mesh.vertices[x[0]] - r).squaredNorm() < (mesh.vertices[y[0]] - r).squaredNorm();
      });
    }

  // regions: flood fill across edges that are not segments
  mesh.regions.push_back({-1, 0.0, 0.0});
  std::vector<std::vector<Point>> polys;
  std::vector<int> poly_region;
  for (int i = 0; i < k; ++i) {
    const auto& smp = cd_.outlets[i];
    for (int j = 0; j + 1 < static_cast<int>(smp.snaps.size()); ++j) {
      poly_region.push_back(static_cast<int>(mesh.regions.size()));
      mesh.regions.push_back({i, smp.snaps[j], smp.snaps[j + 1]});
      polys.push_back(block_polygon(smp, j));
    }
  }
  const auto& core = cd_.parent->core();
  mesh.triangle_region.assign(keep.size(), -1);
  for (std::size_t start = 0; start < keep.size(); ++start) {
    if (mesh.triangle_region[start] >= 0) continue;
    const auto& v = tris_[keep[start]].v;
    const Point c = (pts_[v[0]] + pts_[v[1]] + pts_[v[2]]) / 3.0;
    int region = -1;
    if (polys.empty() || point_in_polygon(core, c)) region = 0;
    for (std::size_t q = 0; q < polys.size() && region < 0; ++q)
      if (point_in_polygon(polys[q], c)) region = poly_region[q];
    if (region < 0) throw Error(ErrorCode::InvalidGeometry, "triangle outside every block");
    std::vector<int> stack{keep[start]};
    mesh.triangle_region[start] = region;
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      const Tri& tr = tris_[t];
      for (int i = 0; i < 3; ++i) {
        const int nb = tr.n[i];
        if (nb < 0 || tmap[nb] < 0 || mesh.triangle_region[tmap[nb]] >= 0) continue;
        if (seg_of_edge_.count(edge_key(tr.v[(i + 1) % 3], tr.v[(i + 2) % 3]))) continue;
        mesh.triangle_region[tmap[nb]] = region;
        stack.push_back(nb);
      }
    }
  }
  return mesh;
}

bool segments_cross(const Point& a, const Point& b, const Point& c, const Point& d) {
  const int o1 = orient2d(a, b, c), o2 = orient2d(a, b, d);
  const int o3 = orient2d(c, d, a), o4 = orient2d(c, d, b);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  auto on = [](const Point& p, const Point& q, const Point& r) {
    return std::min(p.x(), q.x()) <= r.x() && r.x() <= std::max(p.x(), q.x()) && std::min(p.y(), q.y()) <= r.y() &&
           r.y() <= std::max(p.y(), q.y());
  };
  if (o1 == 0 && on(a, b, c)) return true;
  if (o2 == 0 && on(a, b, d)) return true;
  if (o3 == 0 && on(c, d, a)) return true;
  if (o4 == 0 && on(c, d, b)) return true;
  return false;
}

void check_simple(const std::vector<Point>& poly) {
  const int n = static_cast<int>(poly.size());
  if (n < 3) throw Error(ErrorCode::InvalidGeometry, "boundary has fewer than 3 vertices");
  for (int i = 0; i < n; ++i)
    if (poly[i] == poly[(i + 1) % n]) throw Error(ErrorCode::InvalidGeometry, "repeated boundary vertex");
  for (int i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    const Point lo = a.cwiseMin(b), hi = a.cwiseMax(b);
    for (int j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      const Point& c = poly[j];
      const Point& d = poly[(j + 1) % n];
      if (std::max(c.x(), d.x()) < lo.x() || std::min(c.x(), d.x()) > hi.x() || std::max(c.y(), d.y()) < lo.y() ||
          std::min(c.y(), d.y()) > hi.y())
        continue;
      if (segments_cross(a, b, c, d))
        throw Error(ErrorCode::InvalidGeometry, "boundary self-intersects at segments " + std::to_string(i) + " and " +
                                                    std::to_string(j));
    }
  }
  if (polygon_area(poly) <= 0.0) throw Error(ErrorCode::InvalidGeometry, "boundary is not counter-clockwise");
}

}  // namespace

double Mesh::triangle_area(int tri) const {
  const auto& v = triangles[tri];
  const Point b = vertices[v[1]] - vertices[v[0]];
  const Point c = vertices[v[2]] - vertices[v[0]];
  return 0.5 * (b.x() * c.y() - b.y() * c.x());
}

double Mesh::area() const {
  double a = 0.0;
  for (int t = 0; t < num_triangles(); ++t) a += triangle_area(t);
  return a;
}

int Mesh::snap_index(int outlet, double s) const {
  if (outlet < 0 || outlet >= static_cast<int>(snaps.size())) throw Error(ErrorCode::UnknownOutlet, "outlet index");
  const auto& sn = snaps[outlet];
  for (std::size_t j = 0; j < sn.size(); ++j)
    if (std::abs(sn[j] - s) <= 1e-9) return static_cast<int>(j);
  return -1;
}

const std::vector<Edge>& Mesh::section(int outlet, double s) const {
  const int j = snap_index(outlet, s);
  if (j < 0) throw Error(ErrorCode::SectionNotAligned, "section s = " + std::to_string(s) + " is not a mesh line");
  return section_edges[outlet][j];
}

Mesh mesh_cut_domain(const CutDomain& cd, double h, const MeshOptions& options) {
  if (!(h > 0.0)) throw Error(ErrorCode::MeshTooCoarse, "mesh size must be positive");
  const double wmin = cd.parent->w_min();
  if (h > 0.5 * wmin * (1.0 + 1e-12))
    throw Error(ErrorCode::MeshTooCoarse, "h = " + std::to_string(h) + " exceeds w_min/2 = " + std::to_string(0.5 * wmin));
  check_simple(cd.boundary);
  Triangulator tri(cd, h, options);
  tri.build();
  return tri.extract();
}

Mesh submesh(const Mesh& mesh, double tau) {
  if (tau < mesh.domain->t_min() - 1e-12) throw Error(ErrorCode::DomainTooSmall, "tau below t_min");
  if (tau > mesh.t + 1e-9) throw Error(ErrorCode::SectionNotAligned, "tau beyond the meshed domain");
  const int k = static_cast<int>(mesh.snaps.size());
  std::vector<int> jtau(k);
  for (int i = 0; i < k; ++i) {
    jtau[i] = mesh.snap_index(i, tau);
    if (jtau[i] < 0) throw Error(ErrorCode::SectionNotAligned, "tau = " + std::to_string(tau) + " is not a snap value");
  }
  if (std::abs(tau - mesh.t) <= 1e-9) return mesh;

  Mesh sub;
  sub.h = mesh.h;
  sub.t = tau;
  sub.domain = mesh.domain;
  sub.regions = mesh.regions;
  std::vector<int> vmap(mesh.vertices.size(), -1);
  std::vector<int> kept;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const MeshRegion& r = mesh.regions[mesh.triangle_region[t]];
    if (r.outlet < 0 || r.s_hi <= tau + 1e-9) kept.push_back(t);
  }
  for (int t : kept)
    for (int v : mesh.triangles[t]) vmap[v] = 0;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    if (vmap[v] == 0) {
      vmap[v] = static_cast<int>(sub.vertices.size());
      sub.vertices.push_back(mesh.vertices[v]);
      sub.global_vertex.push_back(mesh.global_vertex[v]);
    }
  for (int t : kept) {
    const auto& v = mesh.triangles[t];
    sub.triangles.push_back({vmap[v[0]], vmap[v[1]], vmap[v[2]]});
    sub.triangle_region.push_back(mesh.triangle_region[t]);
  }
  auto mapped = [&](const Edge& e) { return Edge{vmap[e[0]], vmap[e[1]]}; };
  for (const BoundaryEdge& be : mesh.boundary_edges) {
    if (be.tag.kind == BoundaryKind::Cut) continue;
    const Edge e = mapped(be.v);
    if (e[0] < 0 || e[1] < 0) continue;
    sub.boundary_edges.push_back({e, be.tag});
  }
  sub.snaps.resize(k);
  sub.section_edges.resize(k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j <= jtau[i]; ++j) {
      sub.snaps[i].push_back(mesh.snaps[i][j]);
      std::vector<Edge> sec;
      for (const Edge& e : mesh.section_edges[i][j]) sec.push_back(mapped(e));
      sub.section_edges[i].push_back(sec);
    }
    for (const Edge& e : sub.section_edges[i].back()) sub.boundary_edges.push_back({e, {BoundaryKind::Cut, i}});
  }
  return sub;
}

MeshQuality mesh_quality(const Mesh& mesh) {
  MeshQuality q;
  q.min_angle_deg = 180.0;
  q.min_signed_area = std::numeric_limits<double>::infinity();
  q.min_edge = std::numeric_limits<double>::infinity();
  q.max_edge = 0.0;
  std::unordered_map<std::uint64_t, int> count;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& v = mesh.triangles[t];
    q.min_signed_area = std::min(q.min_signed_area, mesh.triangle_area(t));
    for (int i = 0; i < 3; ++i) {
      const Point& a = mesh.vertices[v[i]];
      const Point& b = mesh.vertices[v[(i + 1) % 3]];
      const Point& c = mesh.vertices[v[(i + 2) % 3]];
      const double len = (b - a).norm();
      q.min_edge = std::min(q.min_edge, len);
      q.max_edge = std::max(q.max_edge, len);
      const Point u = b - a, w = c - a;
      const double ang = std::atan2(std::abs(u.x() * w.y() - u.y() * w.x()), u.dot(w)) * 180.0 / std::numbers::pi;
      q.min_angle_deg = std::min(q.min_angle_deg, ang);
      ++count[edge_key(v[i], v[(i + 1) % 3])];
    }
  }
  std::unordered_map<std::uint64_t, int> tagged;
  for (const BoundaryEdge& e : mesh.boundary_edges) ++tagged[edge_key(e.v[0], e.v[1])];
  q.conforming = true;
  q.boundary_tagged = true;
  for (const auto& [key, c] : count) {
    if (c > 2) q.conforming = false;
    if (c == 1 && tagged[key] != 1) q.boundary_tagged = false;
    if (c == 2 && tagged.count(key) && tagged[key] != 0) q.conforming = false;
  }
  for (const auto& [key, c] : tagged)
    if (!count.count(key) || count[key] != 1) q.conforming = false;
  std::vector<char> cut(mesh.snaps.size(), 0);
  for (const BoundaryEdge& e : mesh.boundary_edges)
    if (e.tag.kind == BoundaryKind::Cut && e.tag.outlet >= 0 && e.tag.outlet < static_cast<int>(cut.size()))
      cut[e.tag.outlet] = 1;
  q.cut_groups = static_cast<int>(std::count(cut.begin(), cut.end(), 1));
  return q;
}

void write_vtk(const Mesh& mesh, std::ostream& out) {
  out << "# vtk DataFile Version 3.0\npflux mesh t=" << mesh.t << " h=" << mesh.h << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out.precision(17);
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const Point& p : mesh.vertices) out << p.x() << ' ' << p.y() << " 0\n";
  out << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << mesh.num_triangles() << '\n';
  for (int t = 0; t < mesh.num_triangles(); ++t) out << "5\n";
  out << "CELL_DATA " << mesh.num_triangles() << "\nSCALARS region int 1\nLOOKUP_TABLE default\n";
  for (int r : mesh.triangle_region) out << r << '\n';
}

void write_node_ele(const Mesh& mesh, std::ostream& out) {
  out.precision(17);
  out << "vertices " << mesh.num_vertices() << '\n';
  for (int v = 0; v < mesh.num_vertices(); ++v) out << v << ' ' << mesh.vertices[v].x() << ' ' << mesh.vertices[v].y() << '\n';
  out << "triangles " << mesh.num_triangles() << '\n';
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tr = mesh.triangles[t];
    out << t << ' ' << tr[0] << ' ' << tr[1] << ' ' << tr[2] << ' ' << mesh.triangle_region[t] << '\n';
  }
  out << "boundary_edges " << mesh.boundary_edges.size() << '\n';
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
    const auto& be = mesh.boundary_edges[e];
    out << e << ' ' << be.v[0] << ' ' << be.v[1] << ' ' << (be.tag.kind == BoundaryKind::Cut ? "cut" : "wall") << ' '
        << be.tag.outlet << '\n';
  }
}

}  // namespace pflux
