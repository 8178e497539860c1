#include "acpkan/pde.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace acpkan {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// u - target at order 0, target given as a function of the point.
template <class F>
TermEvaluator dirichlet(F target) {
  return [target](const EvalContext& ctx, std::size_t, std::span<const double> p, std::vector<Var>& out) {
    const Jet u = ctx.u(p, 0);
    out.push_back(ctx.tape().shift(u.val, -target(p)));
  };
}

CollocationSet segment(double x0, double y0, double x1, double y1, int n) {
  CollocationSet s(2);
  for (int k = 0; k < n; ++k) {
    const double a = n == 1 ? 0.0 : static_cast<double>(k) / (n - 1);
    s.push({x0 + a * (x1 - x0), y0 + a * (y1 - y0)});
  }
  return s;
}

void append(CollocationSet& dst, const CollocationSet& src) {
  for (std::size_t i = 0; i < src.size(); ++i) dst.push(src.point(i));
}

Reference reference_from(const CollocationSet& pts, const std::function<double(std::span<const double>)>& f) {
  Reference ref{pts, {}};
  ref.values.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) ref.values.push_back(f(pts.point(i)));
  return ref;
}

CollocationSet square_grid(const std::vector<Interval>& domain, int n) {
  const int counts[2] = {n, n};
  return make_grid(domain, counts);
}

// ---------------------------------------------------------------- problems

PdeProblem reaction_like(bool cdr, const ProblemOptions& o) {
  constexpr double rho = 5.0;
  PdeProblem p;
  p.name = cdr ? "cdr" : "reaction";
  p.dim = 2;
  p.domain = {{0.0, 2.0 * kPi}, {0.0, 1.0}};

  TermSpec res{"residual", TermKind::residual, square_grid(p.domain, o.grid), 1, {}};
  if (cdr) {
    res.evaluate = [](const EvalContext& ctx, std::size_t, std::span<const double> x, std::vector<Var>& out) {
      out.push_back(residual_cdr(ctx.u(x, 2), 1.0, 3.0, rho));
    };
  } else {
    res.evaluate = [](const EvalContext& ctx, std::size_t, std::span<const double> x, std::vector<Var>& out) {
      out.push_back(residual_reaction(ctx.u(x, 1), rho));
    };
  }
  p.terms.push_back(std::move(res));

  p.terms.push_back({"ic", TermKind::ic, segment(0.0, 0.0, 2.0 * kPi, 0.0, o.boundary), 1,
                     dirichlet([](std::span<const double> x) { return reaction_initial(x[0]); })});

  // points are (0, t); the partner node is (2 pi, t)
  TermSpec bc{"bc", TermKind::bc, segment(0.0, 0.0, 0.0, 1.0, o.boundary), 1, {}};
  bc.evaluate = [](const EvalContext& ctx, std::size_t, std::span<const double> x, std::vector<Var>& out) {
    const Jet left = ctx.u({0.0, x[1]}, 0);
    const Jet right = ctx.u({2.0 * kPi, x[1]}, 0);
    out.push_back(ctx.tape().sub(left.val, right.val));
  };
  p.terms.push_back(std::move(bc));

  if (!cdr) {
    p.exact = [](std::span<const double> x) { return exact_reaction(x[0], x[1], rho); };
    p.reference = reference_from(square_grid(p.domain, o.eval_grid), p.exact);
  }
  return p;
}

PdeProblem wave(const ProblemOptions& o) {
  PdeProblem p;
  p.name = "wave";
  p.dim = 2;
  p.domain = {{0.0, 1.0}, {0.0, 1.0}};
  const double c = o.wave_coefficient;

  TermSpec res{"residual", TermKind::residual, square_grid(p.domain, o.grid), 1, {}};
  res.evaluate = [c](const EvalContext& ctx, std::size_t, std::span<const double> x, std::vector<Var>& out) {
    out.push_back(residual_wave(ctx.u(x, 2), c));
  };
  p.terms.push_back(std::move(res));

  const CollocationSet ic_points = segment(0.0, 0.0, 1.0, 0.0, o.boundary);
  p.terms.push_back({"ic_value", TermKind::ic, ic_points, 1,
                     dirichlet([](std::span<const double> x) { return wave_initial(x[0]); })});

  TermSpec vel{"ic_velocity", TermKind::ic, ic_points, 1, {}};
  vel.evaluate = [](const EvalContext& ctx, std::size_t, std::span<const double> x, std::vector<Var>& out) {
    out.push_back(ctx.u(x, 1).grad[1]);
  };
  p.terms.push_back(std::move(vel));

  CollocationSet bc_points = segment(0.0, 0.0, 0.0, 1.0, o.boundary);
  append(bc_points, segment(1.0, 0.0, 1.0, 1.0, o.boundary));
  p.terms.push_back({"bc", TermKind::bc, std::move(bc_points), 1, dirichlet([](std::span<const double>) { return 0.0; })});

  p.exact = [](std::span<const double> x) { return exact_wave(x[0], x[1]); };
  p.reference = reference_from(square_grid(p.domain, o.eval_grid), p.exact);
  return p;
}

PdeProblem poisson_het(const ProblemOptions& o) {
  PdeProblem p;
  p.name = "poisson-het";
  p.dim = 2;
  p.domain = {{-1.0, 1.0}, {-1.0, 1.0}};

  TermSpec res{"residual", TermKind::residual, square_grid(p.domain, o.grid), 1, {}};
  res.evaluate = [](const EvalContext& ctx, std::size_t, std::span<const double> x, std::vector<Var>& out) {
    out.push_back(residual_poisson_het(ctx.u(x, 2), x[0], x[1]));
  };
  p.terms.push_back(std::move(res));

  CollocationSet bc_points(2);
  const int b = o.boundary;
  append(bc_points, segment(-1.0, -1.0, 1.0, -1.0, b));
  append(bc_points, segment(1.0, -1.0, 1.0, 1.0, b));
  append(bc_points, segment(1.0, 1.0, -1.0, 1.0, b));
  append(bc_points, segment(-1.0, 1.0, -1.0, -1.0, b));
  p.terms.push_back({"bc", TermKind::bc, std::move(bc_points), 1,
                     dirichlet([](std::span<const double> x) { return exact_poisson_het(x[0], x[1]); })});

  p.exact = [](std::span<const double> x) { return exact_poisson_het(x[0], x[1]); };
  p.reference = reference_from(square_grid(p.domain, o.eval_grid), p.exact);
  return p;
}

PdeProblem poisson_geom(const ProblemOptions& o) {
  const GeometryMask mask = GeometryMask::four_holes();
  PdeProblem p;
  p.name = "poisson-geom";
  p.dim = 2;
  p.domain = {{mask.x_min, mask.x_max}, {mask.y_min, mask.y_max}};

  GeometryPoints g = geometry_points(mask, o.grid, o.boundary, o.circle_samples);
  TermSpec res{"residual", TermKind::residual, std::move(g.interior), 1, {}};
  res.evaluate = [](const EvalContext& ctx, std::size_t, std::span<const double> x, std::vector<Var>& out) {
    out.push_back(residual_poisson_geom(ctx.u(x, 2)));
  };
  p.terms.push_back(std::move(res));
  p.terms.push_back({"bc_outer", TermKind::bc, std::move(g.outer), 1, dirichlet([](std::span<const double>) { return 1.0; })});
  p.terms.push_back({"bc_inner", TermKind::bc, std::move(g.holes), 1, dirichlet([](std::span<const double>) { return 0.0; })});

  const FdmField field = fdm_oracle_laplace(mask, o.eval_grid, o.fdm_tolerance);
  Reference ref{CollocationSet(2), {}};
  for (int j = 0; j < field.n; ++j) {
    for (int i = 0; i < field.n; ++i) {
      if (mask.excluded(field.x(i), field.y(j))) continue;
      ref.points.push({field.x(i), field.y(j)});
      ref.values.push_back(field.at(i, j));
    }
  }
  p.reference = std::move(ref);
  return p;
}

PdeProblem fit(const ProblemOptions& o) {
  Rng rng(o.seed);
  const FitDataset data = make_fit_dataset(rng);
  PdeProblem p;
  p.name = "fit";
  p.dim = 1;
  p.domain = {{0.0, 2.0}};

  TermSpec term{"data", TermKind::data, CollocationSet(1), 1, {}};
  for (double x : data.x_train) term.points.push({x});
  term.evaluate = [y = data.y_train](const EvalContext& ctx, std::size_t i, std::span<const double> x,
                                     std::vector<Var>& out) {
    out.push_back(ctx.tape().shift(ctx.u(x, 0).val, -y[i]));
  };
  p.terms.push_back(std::move(term));

  Reference ref{CollocationSet(1), data.y_test};
  for (double x : data.x_test) ref.points.push({x});
  p.reference = std::move(ref);
  p.exact = [](std::span<const double> x) { return target_function(x[0]); };
  return p;
}

}  // namespace

void CollocationSet::push(std::span<const double> p) {
  if (static_cast<int>(p.size()) != dim_) throw std::invalid_argument("CollocationSet: point has the wrong dimension");
  coords_.insert(coords_.end(), p.begin(), p.end());
}

CollocationSet make_grid(std::span<const Interval> ranges, std::span<const int> counts) {
  require(!ranges.empty() && ranges.size() == counts.size(), "make_grid: one count per range is required");
  const int d = static_cast<int>(ranges.size());
  std::size_t total = 1;
  for (int c : counts) {
    require(c >= 1, "make_grid: counts must be positive");
    total *= static_cast<std::size_t>(c);
  }
  CollocationSet grid(d);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  std::vector<double> p(static_cast<std::size_t>(d));
  for (std::size_t n = 0; n < total; ++n) {
    for (int k = 0; k < d; ++k) {
      const auto [a, b] = ranges[static_cast<std::size_t>(k)];
      const int c = counts[static_cast<std::size_t>(k)];
      p[static_cast<std::size_t>(k)] = c == 1 ? a : a + (b - a) * idx[static_cast<std::size_t>(k)] / (c - 1);
    }
    grid.push(p);
    for (int k = 0; k < d; ++k) {
      if (++idx[static_cast<std::size_t>(k)] < counts[static_cast<std::size_t>(k)]) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  return grid;
}

// ---------------------------------------------------------------- residuals

Var residual_reaction(const Jet& u, double rho) {
  Tape& t = u.tape();
  // u_t - rho u (1 - u)
  const Var one_minus = t.shift(t.neg(u.val), 1.0);
  return t.sub(u.grad[1], t.scale(t.mul(u.val, one_minus), rho));
}

Var residual_wave(const Jet& u, double c) {
  Tape& t = u.tape();
  return t.sub(u.h(1, 1), t.scale(u.h(0, 0), c));
}

Var residual_cdr(const Jet& u, double beta, double nu, double rho) {
  Tape& t = u.tape();
  const Var one_minus = t.shift(t.neg(u.val), 1.0);
  Var r = t.add(u.grad[1], t.scale(u.grad[0], beta));
  r = t.sub(r, t.scale(u.h(0, 0), nu));
  return t.sub(r, t.scale(t.mul(u.val, one_minus), rho));
}

Var residual_poisson_het(const Jet& u, double x, double y, const HeterogeneousParams& p) {
  Tape& t = u.tape();
  const double r2 = x * x + y * y;
  const double a = std::sqrt(r2) < p.r0 ? p.a1 : p.a2;
  return t.shift(t.scale(t.add(u.h(0, 0), u.h(1, 1)), a), -16.0 * r2);
}

Var residual_poisson_geom(const Jet& u) {
  Tape& t = u.tape();
  return t.neg(t.add(u.h(0, 0), u.h(1, 1)));
}

// ---------------------------------------------------------------- exact solutions

double reaction_initial(double x) {
  const double s = kPi / 4.0;
  return std::exp(-(x - kPi) * (x - kPi) / (2.0 * s * s));
}

double exact_reaction(double x, double t, double rho) {
  const double h = reaction_initial(x);
  const double g = h * std::exp(rho * t);
  return g / (g + 1.0 - h);
}

double exact_wave(double x, double t, double beta) {
  return std::sin(kPi * x) * std::cos(2.0 * kPi * t) + 0.5 * std::sin(beta * kPi * x) * std::cos(2.0 * beta * kPi * t);
}

double wave_initial(double x, double beta) { return std::sin(kPi * x) + 0.5 * std::sin(beta * kPi * x); }

double exact_poisson_het(double x, double y, const HeterogeneousParams& p) {
  const double r2 = x * x + y * y;
  const double r4 = r2 * r2;
  if (std::sqrt(r2) < p.r0) return r4 / p.a1;
  const double r04 = p.r0 * p.r0 * p.r0 * p.r0;
  return r4 / p.a2 + r04 * (1.0 / p.a1 - 1.0 / p.a2);
}

// ---------------------------------------------------------------- geometry

GeometryMask GeometryMask::four_holes() {
  GeometryMask m;
  m.circles = {{0.3, 0.3, 0.1}, {-0.3, 0.3, 0.1}, {-0.3, -0.3, 0.1}, {0.3, -0.3, 0.1}};
  return m;
}

bool GeometryMask::excluded(double x, double y) const {
  for (const auto& c : circles) {
    const double dx = x - c.cx, dy = y - c.cy;
    if (dx * dx + dy * dy <= c.r * c.r + 1e-12) return true;
  }
  return false;
}

bool GeometryMask::contains(double x, double y) const {
  return x >= x_min && x <= x_max && y >= y_min && y <= y_max && !excluded(x, y);
}

void GeometryMask::validate() const {
  require(x_min < x_max && y_min < y_max, "GeometryMask: empty rectangle");
  for (const auto& c : circles) {
    require(c.r > 0.0, "GeometryMask: circle radius must be positive");
    require(c.cx - c.r >= x_min && c.cx + c.r <= x_max && c.cy - c.r >= y_min && c.cy + c.r <= y_max,
            "GeometryMask: circle leaves the rectangle");
  }
}

GeometryPoints geometry_points(const GeometryMask& mask, int interior_per_axis, int outer_per_edge,
                               int circle_samples) {
  mask.validate();
  require(interior_per_axis >= 2 && outer_per_edge >= 2 && circle_samples >= 1, "geometry_points: counts too small");
  GeometryPoints g{CollocationSet(2), CollocationSet(2), CollocationSet(2)};
  const Interval ranges[2] = {{mask.x_min, mask.x_max}, {mask.y_min, mask.y_max}};
  const int counts[2] = {interior_per_axis, interior_per_axis};
  const CollocationSet grid = make_grid(ranges, counts);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto p = grid.point(i);
    if (!mask.excluded(p[0], p[1])) g.interior.push(p);
  }
  const double x0 = mask.x_min, x1 = mask.x_max, y0 = mask.y_min, y1 = mask.y_max;
  append(g.outer, segment(x0, y0, x1, y0, outer_per_edge));
  append(g.outer, segment(x1, y0, x1, y1, outer_per_edge));
  append(g.outer, segment(x1, y1, x0, y1, outer_per_edge));
  append(g.outer, segment(x0, y1, x0, y0, outer_per_edge));
  for (const auto& c : mask.circles) {
    for (int k = 0; k < circle_samples; ++k) {
      const double a = 2.0 * kPi * k / circle_samples;
      g.holes.push({c.cx + c.r * std::cos(a), c.cy + c.r * std::sin(a)});
    }
  }
  return g;
}

// ---------------------------------------------------------------- fitting

double target_function(double x) {
  if (!(x >= 0.0 && x <= 2.0)) throw std::domain_error("target_function: x must lie in [0, 2]");
  if (x < 0.5) {
    return std::sin(25.0 * kPi * x) + x * x + 0.5 * std::cos(30.0 * kPi * x) + 0.2 * x * x * x;
  }
  if (x < 1.5) {
    return 0.5 * x * std::exp(-x) + std::fabs(std::sin(5.0 * kPi * x)) + 0.3 * x * std::cos(7.0 * kPi * x) +
           0.1 * std::exp(-x * x);
  }
  return std::log(x - 1.0) / std::log(2.0) - std::cos(2.0 * kPi * x) + 0.2 * std::sin(8.0 * kPi * x) +
         0.1 * std::log(x + 1.0) / std::log(3.0);
}

FitDataset make_fit_dataset(Rng& rng, std::size_t n_train, std::size_t n_test, double noise_std) {
  FitDataset d;
  d.x_train.reserve(n_train);
  d.y_train.reserve(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    const double x = rng.uniform(0.0, 2.0);
    d.x_train.push_back(x);
    d.y_train.push_back(target_function(x) + rng.normal(0.0, noise_std));
  }
  for (std::size_t i = 0; i < n_test; ++i) {
    const double x = rng.uniform(0.0, 2.0);
    d.x_test.push_back(x);
    d.y_test.push_back(target_function(x));
  }
  return d;
}

// ---------------------------------------------------------------- problems

std::string to_string(TermKind kind) {
  switch (kind) {
    case TermKind::residual: return "residual";
    case TermKind::bc: return "bc";
    case TermKind::ic: return "ic";
    case TermKind::data: return "data";
  }
  return "?";
}

Jet EvalContext::u(std::span<const double> x, int order) const {
  auto out = model_->forward(*tape_, params_, x, order);
  return std::move(out[0]);
}

void PdeProblem::validate() const {
  require(dim >= 1 && static_cast<int>(domain.size()) == dim, "PdeProblem: domain does not match dim");
  require(!terms.empty(), "PdeProblem: no terms");
  for (const auto& t : terms) {
    require(t.points.dim() == dim, "PdeProblem: term points have the wrong dimension");
    require(!t.points.empty(), "PdeProblem: empty term");
    require(static_cast<bool>(t.evaluate), "PdeProblem: term without evaluator");
    require(t.residuals_per_point >= 1, "PdeProblem: residuals_per_point must be positive");
  }
  if (reference) {
    require(reference->points.size() == reference->values.size(), "PdeProblem: reference size mismatch");
  }
}

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names{"reaction", "wave", "cdr", "poisson-het", "poisson-geom", "fit"};
  return names;
}

PdeProblem make_problem(std::string_view name, const ProblemOptions& o) {
  require(o.grid >= 2 && o.boundary >= 2 && o.eval_grid >= 3, "make_problem: grid sizes too small");
  PdeProblem p;
  if (name == "reaction") p = reaction_like(false, o);
  else if (name == "cdr") p = reaction_like(true, o);
  else if (name == "wave") p = wave(o);
  else if (name == "poisson-het") p = poisson_het(o);
  else if (name == "poisson-geom") p = poisson_geom(o);
  else if (name == "fit") p = fit(o);
  else throw std::invalid_argument("unknown problem '" + std::string(name) + "'");
  p.validate();
  return p;
}

}  // namespace acpkan
