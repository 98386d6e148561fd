#pragma once

#include <string>

#include "nmoves/factors.hpp"

namespace nmoves {

// Anything that can price a one-second speed transition: the binned engine,
// the trained network family, or a fitted baseline.
class EmissionModel {
 public:
  virtual ~EmissionModel() = default;

  // Grams of CO2 emitted over one time step holding acceleration a from
  // speed v under conditions x.
  virtual double emission(double v, double a, const FactorVector& x) const = 0;

  virtual std::string name() const = 0;
};

}  // namespace nmoves
