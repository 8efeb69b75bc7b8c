#include "maptrix/leader_refiner.hpp"

#include "maptrix/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace maptrix {

void validate(const RefinementConfig& config) {
  if (!(config.w >= 0.0)) throw ValidationError("separation weight w must be >= 0");
  if (!(config.d_b > 0.0 && config.d_lc > 0.0 && config.epsilon_order > 0.0)) {
    throw ValidationError("refinement distances must be > 0");
  }
  if (!(config.rect_tol > 0.0 && config.solver_tol > 0.0)) throw ValidationError("tolerances must be > 0");
  if (!(config.inset >= 0.0)) throw ValidationError("rectangle inset must be >= 0");
}

// ---------------------------------------------------------------------------
// Rectangles

namespace {

Box centred(const Point& c, double hx, double hy) { return Box(c - Point(hx, hy), c + Point(hx, hy)); }

template <typename Fits>
double search_largest(double lo, double hi, double tol, Fits fits) {
  if (hi <= lo || fits(hi)) return std::max(lo, hi);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (fits(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

Box grow_rectangle(const Region& region, const Point& anchor, double tol) {
  if (!(tol > 0.0)) throw ValidationError("rectangle growth tolerance must be > 0");
  if (!point_in_polygon(anchor, region.boundary)) {
    throw GeometryError("anchor of region '" + region.id + "' is not inside its boundary");
  }
  const Box extent = bounding_box(region.boundary);
  const double hx_max = std::max(anchor.x() - extent.min().x(), extent.max().x() - anchor.x());
  const double hy_max = std::max(anchor.y() - extent.min().y(), extent.max().y() - anchor.y());
  auto fits = [&](double hx, double hy) { return box_inside_polygon(centred(anchor, hx, hy), region.boundary); };

  double side = search_largest(0.0, std::min(hx_max, hy_max), tol, [&](double s) { return fits(s, s); });
  double hx = side;
  double hy = side;
  for (;;) {
    const double wider = search_largest(hx, hx_max, tol, [&](double v) { return fits(v, hy); });
    const double taller = search_largest(hy, hy_max, tol, [&](double v) { return fits(wider, v); });
    const bool grew = (wider - hx) > tol || (taller - hy) > tol;
    hx = wider;
    hy = taller;
    if (!grew) break;
  }
  return centred(anchor, hx, hy);
}

namespace {

struct Extent {
  bool empty = true;
  double lo = 0.0;
  double hi = 0.0;
};

/// Range of y (axis = 1) or x (axis = 0) over the part of segment a-b whose
/// other coordinate lies inside [from, to].
Extent clipped_extent(const Point& a, const Point& b, int slab_axis, double from, double to) {
  const int other = 1 - slab_axis;
  double t0 = 0.0;
  double t1 = 1.0;
  const double da = b[slab_axis] - a[slab_axis];
  if (da == 0.0) {
    if (a[slab_axis] < from || a[slab_axis] > to) return {};
  } else {
    double ta = (from - a[slab_axis]) / da;
    double tb = (to - a[slab_axis]) / da;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return {};
  }
  const double v0 = a[other] + t0 * (b[other] - a[other]);
  const double v1 = a[other] + t1 * (b[other] - a[other]);
  return {false, std::min(v0, v1), std::max(v0, v1)};
}

double segment_box_distance(const Segment& s, const Box& box) {
  const Point lo = box.min();
  const Point hi = box.max();
  if (box.contains(s.a) || box.contains(s.b)) return 0.0;
  const Point c[4] = {lo, Point(hi.x(), lo.y()), hi, Point(lo.x(), hi.y())};
  double best = INFINITY;
  for (int i = 0; i < 4; ++i) best = std::min(best, segment_distance(s.a, s.b, c[i], c[(i + 1) % 4]));
  return best;
}

double box_score(const Box& b) { return b.volume() + 1e-9 * (b.sizes().sum()); }

}  // namespace

SiteRect prune_rectangle(const Box& rect, const LeaderRoute& own_route, std::span<const LeaderRoute> foreign_routes,
                         double d_b) {
  SiteRect out;
  out.box = rect;
  out.anchor = own_route.site;
  out.margin = d_b;
  const Point& anchor = own_route.site;

  for (const auto& route : foreign_routes) {
    for (const Segment& seg : {route.diagonal(), route.horizontal()}) {
      if (out.degenerate) break;
      if (segment_box_distance(seg, out.box) >= d_b) continue;
      const Box& cur = out.box;
      Box best;
      double best_score = -1.0;
      int best_kind = -1;
      double cut_value = 0.0;

      const Extent ys = clipped_extent(seg.a, seg.b, 0, cur.min().x() - d_b, cur.max().x() + d_b);
      const Extent xs = clipped_extent(seg.a, seg.b, 1, cur.min().y() - d_b, cur.max().y() + d_b);
      auto consider = [&](Box candidate, int kind, double value) {
        if (candidate.isEmpty() || !candidate.contains(anchor)) return;
        const double score = box_score(candidate);
        if (score > best_score) {
          best_score = score;
          best = candidate;
          best_kind = kind;
          cut_value = value;
        }
      };
      if (!ys.empty) {
        Box above = cur;  // segment at larger y: lower the top bound
        above.max().y() = std::min(cur.max().y(), ys.lo - d_b);
        consider(above, 0, ys.lo);
        Box below = cur;
        below.min().y() = std::max(cur.min().y(), ys.hi + d_b);
        consider(below, 1, ys.hi);
      }
      if (!xs.empty) {
        Box right = cur;
        right.max().x() = std::min(cur.max().x(), xs.lo - d_b);
        consider(right, 2, xs.lo);
        Box left = cur;
        left.min().x() = std::max(cur.min().x(), xs.hi + d_b);
        consider(left, 3, xs.hi);
      }
      if (best_kind < 0) {
        out.degenerate = true;
        out.box = Box(anchor, anchor);
        break;
      }
      out.box = best;
      if (best_kind == 0) out.y_hi = std::min(out.y_hi, cut_value);
      if (best_kind == 1) out.y_lo = std::max(out.y_lo, cut_value);
    }
    if (out.degenerate) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Program

double diagonal_separation(const Point& lower_site, const Point& upper_site, GradientSign sign, double k) {
  const double s = sign == GradientSign::up ? -k : k;
  const double lower = lower_site.y() + s * lower_site.x();
  const double upper = upper_site.y() + s * upper_site.x();
  return (upper - lower) / std::sqrt(k * k + 1.0);
}

namespace {

class RowBuilder {
 public:
  explicit RowBuilder(Eigen::Index n) : n_(n) {}

  /// Adds sum(coef * var) <= rhs.
  void add(std::initializer_list<std::pair<Eigen::Index, double>> terms, double rhs, std::string label) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n_);
    for (const auto& [var, coef] : terms) row(var) += coef;
    rows_.push_back(std::move(row));
    rhs_.push_back(rhs);
    labels_.push_back(std::move(label));
  }

  void finish(qp::Problem<double>& problem, std::vector<std::string>& labels) {
    problem.A.resize(static_cast<Eigen::Index>(rows_.size()), n_);
    problem.b.resize(static_cast<Eigen::Index>(rows_.size()));
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      problem.A.row(static_cast<Eigen::Index>(i)) = rows_[i].transpose();
      problem.b(static_cast<Eigen::Index>(i)) = rhs_[i];
    }
    labels = std::move(labels_);
  }

 private:
  Eigen::Index n_;
  std::vector<Eigen::VectorXd> rows_;
  std::vector<double> rhs_;
  std::vector<std::string> labels_;
};

bool vertically_disjoint(const LeaderRoute& lower, const LeaderRoute& upper) {
  // Ports: lower.port.y < upper.port.y, both leaders in the same direction.
  if (lower.gradient_sign == GradientSign::up) return upper.site.y() > lower.port.position.y();
  return lower.site.y() < upper.port.position.y();
}

}  // namespace

RefinementProgram build_program(std::span<const LeaderRoute> routes, std::span<const SiteRect> rects,
                                const BandPartition& bands, const RefinementConfig& config,
                                const LabellingConfig& labelling, std::span<const PairwiseOrder> extra) {
  validate(config);
  validate(labelling);
  if (routes.empty()) throw ValidationError("build_program needs at least one route");
  if (rects.size() != routes.size()) throw ValidationError("build_program needs one rectangle per route");

  const double k = labelling.k;
  const double X = labelling.port_line_x;
  const double norm = std::sqrt(k * k + 1.0);
  RefinementProgram prog;
  prog.site_count = routes.size();

  // Adjacent same-band pairs whose diagonals are already ordered get a
  // separation variable; the rest are vertically disjoint and stay that way.
  std::vector<SeparationPair> pairs;
  std::vector<std::pair<std::size_t, std::size_t>> disjoint;
  for (const auto& band : bands.bands) {
    for (std::size_t i = 0; i + 1 < band.routes.size(); ++i) {
      const std::size_t lo = band.routes[i];
      const std::size_t hi = band.routes[i + 1];
      const double d0 = diagonal_separation(routes[lo].site, routes[hi].site, band.sign, k);
      if (d0 > 0.0) {
        pairs.push_back(SeparationPair{lo, hi, band.sign, d0, std::min(config.epsilon_order, d0), -1});
      } else {
        disjoint.emplace_back(lo, hi);
      }
    }
  }
  const Eigen::Index n_sites = static_cast<Eigen::Index>(2 * routes.size());
  const Eigen::Index n = n_sites + static_cast<Eigen::Index>(pairs.size());
  for (std::size_t j = 0; j < pairs.size(); ++j) pairs[j].variable = n_sites + static_cast<Eigen::Index>(j);
  double D = 0.0;
  for (const auto& p : pairs) D = std::max(D, p.initial);
  prog.target_separation = D;

  auto& qp = prog.problem;
  qp.Q = Eigen::MatrixXd::Zero(n, n);
  qp.c = Eigen::VectorXd::Zero(n);
  qp.x0 = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < routes.size(); ++i) {
    const Point& c = routes[i].site;
    for (int axis = 0; axis < 2; ++axis) {
      const Eigen::Index v = static_cast<Eigen::Index>(2 * i) + axis;
      qp.Q(v, v) = 2.0;
      qp.c(v) = -2.0 * c[axis];
      qp.x0(v) = c[axis];
    }
  }
  for (const auto& p : pairs) {
    qp.Q(p.variable, p.variable) = 2.0 * config.w;
    qp.c(p.variable) = -2.0 * config.w * D;
    qp.x0(p.variable) = p.initial;
  }

  RowBuilder rows(n);
  for (std::size_t i = 0; i < routes.size(); ++i) {
    const auto& r = routes[i];
    const auto& rect = rects[i];
    const Eigen::Index x = prog.x_var(i);
    const Eigen::Index y = prog.y_var(i);
    const std::string tag = rect.region_id.empty() ? std::to_string(i) : rect.region_id;
    rows.add({{x, -1.0}}, -rect.box.min().x(), "rect-left:" + tag);
    rows.add({{x, 1.0}}, rect.box.max().x(), "rect-right:" + tag);
    rows.add({{y, -1.0}}, -std::min(rect.y_min(), r.site.y()), "rect-top:" + tag);
    rows.add({{y, 1.0}}, std::max(rect.y_max(), r.site.y()), "rect-bottom:" + tag);
    const double port_y = r.port.position.y();
    if (r.gradient_sign == GradientSign::up) {
      rows.add({{y, 1.0}}, port_y, "direction:" + tag);
      rows.add({{x, k}, {y, -1.0}}, k * X - port_y, "gradient:" + tag);
    } else {
      rows.add({{y, -1.0}}, -port_y, "direction:" + tag);
      rows.add({{x, k}, {y, 1.0}}, k * X + port_y, "gradient:" + tag);
    }
  }

  // d_j = (beta_upper - beta_lower) / sqrt(k^2 + 1), beta = y -/+ k x.
  for (const auto& p : pairs) {
    const double s = p.sign == GradientSign::up ? -k : k;
    const Eigen::Index xl = prog.x_var(p.lower), yl = prog.y_var(p.lower);
    const Eigen::Index xu = prog.x_var(p.upper), yu = prog.y_var(p.upper);
    const std::string tag = "pair:" + std::to_string(p.lower) + "-" + std::to_string(p.upper);
    rows.add({{p.variable, norm}, {yu, -1.0}, {xu, -s}, {yl, 1.0}, {xl, s}}, 0.0, "separation-def:" + tag);
    rows.add({{p.variable, -norm}, {yu, 1.0}, {xu, s}, {yl, -1.0}, {xl, -s}}, 0.0, "separation-def:" + tag);
    rows.add({{p.variable, -1.0}}, -p.epsilon, "order:" + tag);
  }

  auto add_disjoint = [&](std::size_t lo, std::size_t hi, const std::string& tag) {
    const auto& rl = routes[lo];
    const auto& rh = routes[hi];
    if (rl.gradient_sign == GradientSign::up) {
      const double gap = rh.site.y() - rl.port.position.y();
      rows.add({{prog.y_var(hi), -1.0}}, -(rl.port.position.y() + std::min(config.d_b, gap)), "disjoint:" + tag);
    } else {
      const double gap = rh.port.position.y() - rl.site.y();
      rows.add({{prog.y_var(lo), 1.0}}, rh.port.position.y() - std::min(config.d_b, gap), "disjoint:" + tag);
    }
  };
  for (const auto& [lo, hi] : disjoint) add_disjoint(lo, hi, std::to_string(lo) + "-" + std::to_string(hi));

  for (std::size_t b = 0; b + 1 < bands.bands.size(); ++b) {
    const double line = bands.separators[b];
    double lower_max = -INFINITY;
    double upper_min = INFINITY;
    for (auto r : bands.bands[b].routes) lower_max = std::max(lower_max, routes[r].site.y());
    for (auto r : bands.bands[b + 1].routes) upper_min = std::min(upper_min, routes[r].site.y());
    const double half_gap = std::min(line - lower_max, upper_min - line);
    if (half_gap < 0.0) continue;
    const double margin = std::min(config.d_lc, half_gap);
    const std::string tag = "band-line:" + std::to_string(b);
    for (auto r : bands.bands[b].routes) rows.add({{prog.y_var(r), 1.0}}, line - margin, tag);
    for (auto r : bands.bands[b + 1].routes) rows.add({{prog.y_var(r), -1.0}}, -(line + margin), tag);
  }

  for (const auto& e : extra) {
    std::size_t lo = e.a;
    std::size_t hi = e.b;
    if (routes[lo].port.position.y() > routes[hi].port.position.y()) std::swap(lo, hi);
    const auto& rl = routes[lo];
    const auto& rh = routes[hi];
    const std::string tag = std::to_string(lo) + "-" + std::to_string(hi);
    if (rl.gradient_sign == rh.gradient_sign) {
      const double d0 = diagonal_separation(rl.site, rh.site, rl.gradient_sign, k);
      if (d0 > 0.0) {
        const double s = rl.gradient_sign == GradientSign::up ? -k : k;
        const double eps = std::min(config.epsilon_order, d0) * norm;
        rows.add({{prog.y_var(hi), -1.0}, {prog.x_var(hi), -s}, {prog.y_var(lo), 1.0}, {prog.x_var(lo), s}}, -eps,
                 "order-extra:" + tag);
      } else if (vertically_disjoint(rl, rh)) {
        add_disjoint(lo, hi, tag);
      }
    } else if (rl.gradient_sign == GradientSign::down) {
      // Down leader below an up leader: keep the down site above the up site.
      const double gap = rh.site.y() - rl.site.y();
      if (gap >= 0.0) {
        rows.add({{prog.y_var(lo), 1.0}, {prog.y_var(hi), -1.0}}, -std::min(config.d_lc, gap), "cross-band:" + tag);
      }
    }
  }

  rows.finish(qp, prog.row_labels);
  prog.pairs = std::move(pairs);
  return prog;
}

// ---------------------------------------------------------------------------
// Refinement

namespace {

struct Breakdown {
  double pcentre = 0.0;
  double psep = 0.0;
};

Breakdown breakdown(std::span<const Point> sites, std::span<const LeaderRoute> anchors,
                    std::span<const double> separations, double D) {
  Breakdown b;
  for (std::size_t i = 0; i < sites.size(); ++i) b.pcentre += (sites[i] - anchors[i].site).squaredNorm();
  for (double d : separations) b.psep += (d - D) * (d - D);
  return b;
}

LeaderRoute reroute(const LeaderRoute& original, const Point& site, const LabellingConfig& labelling) {
  LeaderRoute r = construct_route(site, original.port, labelling.k);
  // The gradient row keeps the bend left of the port line up to rounding.
  r.bend.x() = std::min(r.bend.x(), labelling.port_line_x);
  // Sites on their port's line keep their band's direction.
  if (site.y() == original.port.position.y()) r.gradient_sign = original.gradient_sign;
  return r;
}

}  // namespace

RefinedLayoutDelta refine(std::span<const LeaderRoute> routes, std::span<const Region> regions,
                          const RefinementConfig& config, const LabellingConfig& labelling,
                          std::span<const Box> grown_rects) {
  validate(config);
  if (routes.empty()) throw ValidationError("refine needs at least one route");
  if (regions.size() != routes.size()) throw ValidationError("refine needs one region per route");
  if (!grown_rects.empty() && grown_rects.size() != routes.size()) {
    throw ValidationError("refine needs one grown rectangle per route");
  }

  RefinedLayoutDelta out;
  out.rects.reserve(routes.size());
  std::vector<LeaderRoute> foreign;
  for (std::size_t i = 0; i < routes.size(); ++i) {
    Box grown = grown_rects.empty() ? grow_rectangle(regions[i], routes[i].site, config.rect_tol) : grown_rects[i];
    // Shrink towards the site, which the grown rectangle is centred on.
    for (int axis = 0; axis < 2; ++axis) {
      const double room = std::min(routes[i].site[axis] - grown.min()[axis], grown.max()[axis] - routes[i].site[axis]);
      const double cut = std::min(config.inset, 0.5 * std::max(room, 0.0));
      grown.min()[axis] += cut;
      grown.max()[axis] -= cut;
    }
    foreign.clear();
    for (std::size_t j = 0; j < routes.size(); ++j) {
      if (j != i) foreign.push_back(routes[j]);
    }
    SiteRect rect = prune_rectangle(grown, routes[i], foreign, config.d_b);
    rect.region_id = regions[i].id;
    if (rect.degenerate) out.pinned_regions.push_back(regions[i].id);
    out.rects.push_back(std::move(rect));
  }

  const BandPartition bands = partition_bands(routes);
  std::vector<PairwiseOrder> extra;

  auto fall_back = [&](std::vector<std::string> clashes) {
    out.fell_back = true;
    out.clashes = std::move(clashes);
    out.sites.clear();
    out.routes.assign(routes.begin(), routes.end());
    for (const auto& r : routes) out.sites.push_back(r.site);
    out.separations.clear();
    for (const auto& p : out.pairs) out.separations.push_back(p.initial);
  };

  for (int round = 0;; ++round) {
    RefinementProgram prog = build_program(routes, out.rects, bands, config, labelling, extra);
    out.pairs = prog.pairs;
    out.target_separation = prog.target_separation;
    out.objective_at_anchors = 0.0;
    for (const auto& p : prog.pairs) {
      out.objective_at_anchors += config.w * (p.initial - prog.target_separation) * (p.initial - prog.target_separation);
    }

    const auto sol = qp::solve(prog.problem, config.solver_tol);
    out.status = sol.status;
    out.solver_iterations += sol.iterations;
    out.repair_rounds = round;
    if (sol.status == qp::Status::infeasible) {
      std::vector<std::string> clashes;
      if (sol.certificate_row) clashes.push_back(prog.row_labels[static_cast<std::size_t>(*sol.certificate_row)]);
      fall_back(std::move(clashes));
      break;
    }
    if (sol.status != qp::Status::optimal) {
      fall_back({std::string("solver stopped: ") + qp::to_string(sol.status)});
      break;
    }

    out.sites.resize(routes.size());
    out.routes.resize(routes.size());
    for (std::size_t i = 0; i < routes.size(); ++i) {
      out.sites[i] = Point(sol.x(prog.x_var(i)), sol.x(prog.y_var(i)));
      out.routes[i] = reroute(routes[i], out.sites[i], labelling);
    }
    out.separations.clear();
    for (const auto& p : prog.pairs) out.separations.push_back(sol.x(p.variable));

    const auto crossings = verify_crossing_free(out.routes);
    if (crossings.empty()) break;
    if (round >= config.max_repair_rounds) {
      std::vector<std::string> clashes;
      for (const auto& [a, b] : crossings) clashes.push_back("crossing:" + regions[a].id + "-" + regions[b].id);
      fall_back(std::move(clashes));
      break;
    }
    for (const auto& [a, b] : crossings) extra.push_back({a, b});
  }

  const Breakdown b = breakdown(out.sites, routes, out.separations, out.target_separation);
  out.pcentre = b.pcentre;
  out.psep = b.psep;
  out.objective = b.pcentre + config.w * b.psep;
  return out;
}

void write_diagnostics(const RefinedLayoutDelta& delta, std::span<const std::string> route_ids, std::ostream& out,
                       const std::string& side) {
  auto id_of = [&](std::size_t i) { return i < route_ids.size() ? route_ids[i] : std::to_string(i); };
  nlohmann::json head{{"kind", "objective"},
                      {"side", side},
                      {"pcentre", delta.pcentre},
                      {"psep", delta.psep},
                      {"objective", delta.objective},
                      {"objective_at_anchors", delta.objective_at_anchors},
                      {"target_separation", delta.target_separation},
                      {"status", qp::to_string(delta.status)},
                      {"iterations", delta.solver_iterations},
                      {"repair_rounds", delta.repair_rounds},
                      {"fell_back", delta.fell_back},
                      {"clashes", delta.clashes},
                      {"pinned", delta.pinned_regions}};
  out << head.dump() << '\n';
  for (std::size_t j = 0; j < delta.pairs.size(); ++j) {
    const auto& p = delta.pairs[j];
    nlohmann::json row{{"kind", "pair"},
                       {"side", side},
                       {"j", j},
                       {"lower", id_of(p.lower)},
                       {"upper", id_of(p.upper)},
                       {"sign", to_string(p.sign)},
                       {"d_initial", p.initial},
                       {"d", j < delta.separations.size() ? delta.separations[j] : p.initial},
                       {"epsilon", p.epsilon}};
    out << row.dump() << '\n';
  }
}

}  // namespace maptrix
