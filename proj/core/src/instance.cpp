#include "lipmab/instance.hpp"

#include <algorithm>
#include <utility>

#include "lipmab/errors.hpp"

namespace lipmab {

Instance::Instance(InstanceSpec spec, int d, double lipschitz,
                   std::shared_ptr<const MeanFunction> mu, std::vector<Point> hidden)
    : spec_(std::move(spec)), d_(d), lipschitz_(lipschitz), mu_(std::move(mu)),
      hidden_(std::move(hidden)) {
  if (!mu_) throw DomainError("instance needs a mean function");
  if (!(lipschitz_ > 0.0)) throw DomainError("Lipschitz constant must be positive");
}

std::optional<double> Instance::analytic_sup(const Region& region) const {
  if (region.shape != RegionShape::Box) return std::nullopt;
  return mu_->sup_on_box(region.bounds);
}

ConeField::ConeField(double base, std::vector<Cone> cones)
    : base_(base), cones_(std::move(cones)) {}

double ConeField::operator()(const Point& x) const {
  double v = base_;
  for (const Cone& c : cones_) v = std::max(v, c.height - c.slope * distance(x, c.apex));
  return v;
}

std::optional<double> ConeField::sup_on_box(const Box& b) const {
  double v = base_;
  for (const Cone& c : cones_) v = std::max(v, c.height - c.slope * b.distance_to(c.apex));
  return v;
}

double ConeField::max_slope() const noexcept {
  double s = 0.0;
  for (const Cone& c : cones_) s = std::max(s, c.slope);
  return s;
}

}  // namespace lipmab
