#include "lipmab/instances.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <string>

#include "lipmab/errors.hpp"
#include "lipmab/rng.hpp"

namespace lipmab {

namespace {

class LinearMean final : public MeanFunction {
 public:
  double operator()(const Point& x) const override {
    double s = 0.0;
    for (double v : x) s += v;
    return s / x.dim();
  }
  std::optional<double> sup_on_box(const Box& b) const override { return (*this)(b.hi); }
};

class ConstantMean final : public MeanFunction {
 public:
  explicit ConstantMean(double v) : v_(v) {}
  double operator()(const Point&) const override { return v_; }
  std::optional<double> sup_on_box(const Box&) const override { return v_; }

 private:
  double v_;
};

class PathologyMean final : public MeanFunction {
 public:
  PathologyMean(double alpha, double width)
      : alpha_(alpha), a_(0.5 - width), p_(0.5 - width / 2.0), half_(width / 2.0) {}

  double operator()(const Point& x) const override { return at(x[0]); }

  std::optional<double> sup_on_box(const Box& b) const override {
    const double lo = b.lo[0];
    const double hi = b.hi[0];
    double v = std::max(at(lo), at(hi));
    for (double t : {a_, p_, 0.5}) {
      if (t >= lo && t <= hi) v = std::max(v, at(t));
    }
    return v;
  }

 private:
  double at(double x) const {
    const double bump = std::max(0.0, 1.0 - std::abs(x - p_) / half_);
    return 0.5 * x + alpha_ * bump;
  }

  double alpha_;
  double a_;
  double p_;
  double half_;
};

double param(const InstanceSpec& s, const std::string& key) {
  auto it = s.params.find(key);
  if (it == s.params.end()) throw ConfigError("instance '" + s.kind + "' needs parameter '" + key + "'");
  return it->second;
}

double param_or(const InstanceSpec& s, const std::string& key, double fallback) {
  auto it = s.params.find(key);
  return it == s.params.end() ? fallback : it->second;
}

int int_param(const InstanceSpec& s, const std::string& key) {
  const double v = param(s, key);
  if (v != std::floor(v)) throw ConfigError("instance parameter '" + key + "' must be an integer");
  return static_cast<int>(v);
}

void check_dim(int d) {
  if (d < 1 || d > kMaxDim) throw DomainError("dimension must lie in 1.." + std::to_string(kMaxDim));
}

}  // namespace

Instance linear_instance(int d) {
  check_dim(d);
  InstanceSpec spec{"linear", {{"d", static_cast<double>(d)}}, {}};
  return Instance(spec, d, 1.0 / std::sqrt(static_cast<double>(d)), std::make_shared<LinearMean>());
}

Instance constant_instance(int d, double value, double lipschitz) {
  check_dim(d);
  if (!(value >= 0.0 && value <= 1.0)) throw DomainError("constant value must lie in [0,1]");
  InstanceSpec spec{"constant",
                    {{"d", static_cast<double>(d)}, {"value", value}, {"L", lipschitz}},
                    {}};
  return Instance(spec, d, lipschitz, std::make_shared<ConstantMean>(value));
}

Instance pathology_1d(double alpha, double width) {
  if (!(alpha > 0.0)) throw DomainError("pathology: alpha must be positive");
  if (!(width > 0.0 && width <= 0.5)) {
    throw DomainError("pathology: bump width must lie in (0, 0.5] so the bump stays inside cell 0");
  }
  const double peak = 0.5 - width / 2.0;
  const double top0 = 0.5 * peak + alpha;
  if (top0 > 1.0) {
    throw DomainError("pathology: peak value " + std::to_string(top0) + " leaves [0,1]; lower alpha");
  }
  if (!(top0 > 0.5)) {
    throw DomainError("pathology: cell-0 supremum " + std::to_string(top0) +
                      " does not exceed the cell-1 supremum 0.5; raise alpha");
  }
  InstanceSpec spec{"pathology", {{"alpha", alpha}, {"width", width}}, {}};
  return Instance(spec, 1, 0.5 + 2.0 * alpha / width, std::make_shared<PathologyMean>(alpha, width));
}

std::vector<Point> spike_grid(const Box& cell, int m, double inset) {
  const int d = cell.lo.dim();
  Region r;
  r.bounds = cell;
  for (int k = 0; k < d; ++k) {
    r.bounds.lo[k] += inset;
    r.bounds.hi[k] -= inset;
  }
  std::vector<Point> out;
  std::array<int, kMaxDim> idx{};
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(m + 1);
  out.reserve(total);
  for (std::size_t t = 0; t < total; ++t) {
    Point p(d);
    for (int k = 0; k < d; ++k) {
      const double lo = r.bounds.lo[k];
      const double w = r.bounds.hi[k] - lo;
      p[k] = lo + w * static_cast<double>(idx[static_cast<std::size_t>(k)]) / m;
    }
    out.push_back(p);
    for (int k = 0; k < d; ++k) {
      if (++idx[static_cast<std::size_t>(k)] <= m) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  return out;
}

SpikeInstance spike_instance(int d, double h, std::size_t n_players, int m, double c0,
                             const std::vector<std::size_t>& chosen_cells, double lipschitz,
                             std::uint64_t seed) {
  const PartitionGeometry g(d, h);
  if (g.size() < n_players) throw DomainError("spike: K < N");
  if (m < 2) throw DomainError("spike: m must be >= 2");
  if (!(c0 > 0.0 && c0 <= 0.5)) throw DomainError("spike: c0 must lie in (0, 1/2]");
  if (!(lipschitz > 0.0)) throw DomainError("spike: L must be positive");
  const double delta = c0 * lipschitz * h / m;
  if (delta > 1.0 / 6.0) {
    throw DomainError("spike: height " + std::to_string(delta) + " exceeds 1/6");
  }
  if (chosen_cells.empty()) throw DomainError("spike: no chosen cells");
  std::set<std::size_t> seen;
  for (std::size_t c : chosen_cells) {
    if (c >= g.size()) throw DomainError("spike: chosen cell out of range");
    if (!seen.insert(c).second) throw DomainError("spike: chosen cells must be distinct");
  }

  const double inset = delta / lipschitz;
  Rng rng(seed);
  std::vector<Cone> cones;
  std::vector<Point> theta;
  for (std::size_t c : chosen_cells) {
    const Box box = g.cell_box(c);
    for (int k = 0; k < d; ++k) {
      if (box.hi[k] - box.lo[k] <= 2.0 * inset) throw DomainError("spike: cell too thin for the cone");
    }
    const auto grid = spike_grid(box, m, inset);
    const Point apex = grid[rng.index(grid.size())];
    theta.push_back(apex);
    cones.push_back(Cone{apex, 0.5 + delta, lipschitz});
  }

  InstanceSpec spec{"spike",
                    {{"d", static_cast<double>(d)},
                     {"h", h},
                     {"N", static_cast<double>(n_players)},
                     {"m", static_cast<double>(m)},
                     {"c0", c0},
                     {"L", lipschitz}},
                    chosen_cells,
                    seed};
  auto mu = std::make_shared<ConeField>(0.5, std::move(cones));
  Instance inst(spec, d, lipschitz, std::move(mu), theta);
  return SpikeInstance{std::move(inst), std::move(theta), delta};
}

Instance random_cone_instance(int d, int n_cones, std::uint64_t seed) {
  check_dim(d);
  if (n_cones < 1) throw DomainError("random_cone: need at least one cone");
  Rng rng(seed);
  const double base = 0.05 + 0.25 * rng.uniform01();
  std::vector<Cone> cones;
  cones.reserve(static_cast<std::size_t>(n_cones));
  for (int i = 0; i < n_cones; ++i) {
    Cone c;
    c.apex = Point(d);
    for (int k = 0; k < d; ++k) c.apex[k] = rng.uniform01();
    c.height = 0.35 + 0.6 * rng.uniform01();
    c.slope = 0.5 + 3.5 * rng.uniform01();
    cones.push_back(c);
  }
  auto mu = std::make_shared<ConeField>(base, std::move(cones));
  const double lip = mu->max_slope();
  InstanceSpec spec{"random_cone",
                    {{"d", static_cast<double>(d)},
                     {"n_cones", static_cast<double>(n_cones)}},
                    {},
                    seed};
  return Instance(spec, d, lip, std::move(mu));
}

Instance make_instance(const InstanceSpec& s) {
  if (s.kind == "linear") return linear_instance(int_param(s, "d"));
  if (s.kind == "constant") {
    return constant_instance(int_param(s, "d"), param_or(s, "value", 0.5), param_or(s, "L", 1.0));
  }
  if (s.kind == "pathology") return pathology_1d(param_or(s, "alpha", 0.3), param_or(s, "width", 0.05));
  if (s.kind == "spike") {
    const auto n = static_cast<std::size_t>(int_param(s, "N"));
    std::vector<std::size_t> cells = s.cells;
    if (cells.empty()) {
      for (std::size_t i = 0; i < n; ++i) cells.push_back(i);
    }
    return spike_instance(int_param(s, "d"), param(s, "h"), n, int_param(s, "m"), param_or(s, "c0", 0.5),
                          cells, param_or(s, "L", 1.0), s.seed)
        .instance;
  }
  if (s.kind == "random_cone") {
    return random_cone_instance(int_param(s, "d"), int_param(s, "n_cones"), s.seed);
  }
  throw ConfigError("unknown instance kind '" + s.kind + "'");
}

}  // namespace lipmab
