#pragma once

#include <abcsmc/random.hpp>

#include <concepts>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace abcsmc {

/// What the samplers need from a model: a prior (sampler and density), a
/// forward simulator returning the effective data x, a discrepancy, and the
/// observed data.
///
/// prior_density must be exactly 0 outside the prior support, simulate must
/// return x_dim() values, and discrepancy(x, x) == 0.
template <typename M>
concept AbcModel = requires(const M& m, Rng& rng, std::span<const double> v) {
  { m.theta_dim() } -> std::convertible_to<std::size_t>;
  { m.x_dim() } -> std::convertible_to<std::size_t>;
  { m.prior_sample(rng) } -> std::convertible_to<std::vector<double>>;
  { m.prior_density(v) } -> std::convertible_to<double>;
  { m.simulate(v, rng) } -> std::convertible_to<std::vector<double>>;
  { m.discrepancy(v, v) } -> std::convertible_to<double>;
  { m.observed() } -> std::convertible_to<std::span<const double>>;
};

/// Type-erased model; lets the command line pick a model by name at run time.
class ModelSpec {
 public:
  template <AbcModel M>
  explicit ModelSpec(M model, std::string name = {}) : impl_(std::make_shared<Holder<M>>(std::move(model))), name_(std::move(name)) {}

  [[nodiscard]] std::size_t theta_dim() const { return impl_->theta_dim(); }
  [[nodiscard]] std::size_t x_dim() const { return impl_->x_dim(); }
  [[nodiscard]] std::vector<double> prior_sample(Rng& rng) const { return impl_->prior_sample(rng); }
  [[nodiscard]] double prior_density(std::span<const double> theta) const { return impl_->prior_density(theta); }
  [[nodiscard]] std::vector<double> simulate(std::span<const double> theta, Rng& rng) const { return impl_->simulate(theta, rng); }
  [[nodiscard]] double discrepancy(std::span<const double> x, std::span<const double> x_obs) const { return impl_->discrepancy(x, x_obs); }
  [[nodiscard]] std::span<const double> observed() const { return impl_->observed(); }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }

 private:
  struct Concept {
    virtual ~Concept() = default;
    virtual std::size_t theta_dim() const = 0;
    virtual std::size_t x_dim() const = 0;
    virtual std::vector<double> prior_sample(Rng&) const = 0;
    virtual double prior_density(std::span<const double>) const = 0;
    virtual std::vector<double> simulate(std::span<const double>, Rng&) const = 0;
    virtual double discrepancy(std::span<const double>, std::span<const double>) const = 0;
    virtual std::span<const double> observed() const = 0;
  };

  template <typename M>
  struct Holder final : Concept {
    explicit Holder(M m) : model(std::move(m)) {}
    std::size_t theta_dim() const override { return model.theta_dim(); }
    std::size_t x_dim() const override { return model.x_dim(); }
    std::vector<double> prior_sample(Rng& rng) const override { return model.prior_sample(rng); }
    double prior_density(std::span<const double> t) const override { return model.prior_density(t); }
    std::vector<double> simulate(std::span<const double> t, Rng& rng) const override { return model.simulate(t, rng); }
    double discrepancy(std::span<const double> a, std::span<const double> b) const override { return model.discrepancy(a, b); }
    std::span<const double> observed() const override { return model.observed(); }
    M model;
  };

  std::shared_ptr<const Concept> impl_;
  std::string name_;
};

/// Sum of squared coordinate differences.
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    total += d * d;
  }
  return total;
}

}  // namespace abcsmc
