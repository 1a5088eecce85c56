#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lipmab/geometry.hpp"

namespace lipmab {

class MeanFunction {
 public:
  virtual ~MeanFunction() = default;
  virtual double operator()(const Point& x) const = 0;
  // Exact supremum over a closed box when the function admits one.
  virtual std::optional<double> sup_on_box(const Box&) const { return std::nullopt; }
};

// Constructor arguments, enough to rebuild the instance from a manifest.
struct InstanceSpec {
  std::string kind;
  std::map<std::string, double> params;
  std::vector<std::size_t> cells;
  std::uint64_t seed = 0;
};

class Instance {
 public:
  Instance(InstanceSpec spec, int d, double lipschitz, std::shared_ptr<const MeanFunction> mu,
           std::vector<Point> hidden = {});

  double mean(const Point& x) const { return (*mu_)(x); }
  int dim() const noexcept { return d_; }
  double lipschitz() const noexcept { return lipschitz_; }
  const InstanceSpec& spec() const noexcept { return spec_; }
  // Oracle-only data (spike locations); never shown to players.
  const std::vector<Point>& hidden() const noexcept { return hidden_; }

  std::optional<double> analytic_sup(const Region& region) const;

 private:
  InstanceSpec spec_;
  int d_;
  double lipschitz_;
  std::shared_ptr<const MeanFunction> mu_;
  std::vector<Point> hidden_;
};

struct Cone {
  Point apex;
  double height = 0.0;
  double slope = 0.0;
};

// max(base, max_i height_i - slope_i * |x - apex_i|)
class ConeField final : public MeanFunction {
 public:
  ConeField(double base, std::vector<Cone> cones);
  double operator()(const Point& x) const override;
  std::optional<double> sup_on_box(const Box& b) const override;
  double max_slope() const noexcept;
  const std::vector<Cone>& cones() const noexcept { return cones_; }

 private:
  double base_;
  std::vector<Cone> cones_;
};

}  // namespace lipmab
