#pragma once

#include <array>
#include <vector>

#include "nmoves/dataset.hpp"
#include "nmoves/emission_model.hpp"
#include "nmoves/factors.hpp"

namespace nmoves {

// Dense polynomial regressor over the six normalized inputs; the accuracy
// baseline the network is measured against. Degree 3 yields 84 monomials.
class PolynomialModel {
 public:
  // Ridge least squares on the entry's records (normal equations).
  static PolynomialModel fit(const FactorGrid& grid, VehicleType vt, FuelType ft,
                             const DatasetPartition& data, int degree = 3,
                             double ridge = 1e-8);

  double predict(double v, double a, const FactorVector& x) const;

  int degree() const { return degree_; }
  size_t term_count() const { return exponents_.size(); }

 private:
  int degree_ = 0;
  std::vector<std::array<int, 6>> exponents_;
  std::vector<double> coeffs_;
  std::array<double, 6> lo_{}, hi_{};
};

class PolynomialEmissionModel : public EmissionModel {
 public:
  explicit PolynomialEmissionModel(const PolynomialModel& m) : model_(&m) {}
  double emission(double v, double a, const FactorVector& x) const override {
    return model_->predict(v, a, x);
  }
  std::string name() const override { return "polynomial"; }

 private:
  const PolynomialModel* model_;
};

}  // namespace nmoves
