#include "nmoves/polynomial.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace nmoves {

namespace {

void enumerate_exponents(int degree, std::vector<std::array<int, 6>>& out) {
  std::array<int, 6> e{};
  // odometer over exponent tuples with total degree <= degree
  while (true) {
    int total = 0;
    for (int k : e) total += k;
    if (total <= degree) out.push_back(e);
    int i = 0;
    while (i < 6) {
      ++e[static_cast<size_t>(i)];
      int t = 0;
      for (int k : e) t += k;
      if (t <= degree) break;
      e[static_cast<size_t>(i)] = 0;
      ++i;
    }
    if (i == 6) break;
  }
}

void features(const std::vector<std::array<int, 6>>& exps, const double* z, double* phi) {
  // powers up to the max exponent per input
  double pw[6][4];
  for (int k = 0; k < 6; ++k) {
    pw[k][0] = 1.0;
    pw[k][1] = z[k];
    pw[k][2] = z[k] * z[k];
    pw[k][3] = pw[k][2] * z[k];
  }
  for (size_t j = 0; j < exps.size(); ++j) {
    double v = 1.0;
    for (int k = 0; k < 6; ++k) v *= pw[k][exps[j][static_cast<size_t>(k)]];
    phi[j] = v;
  }
}

}  // namespace

PolynomialModel PolynomialModel::fit(const FactorGrid& grid, VehicleType vt, FuelType ft,
                                     const DatasetPartition& data, int degree, double ridge) {
  if (degree < 1 || degree > 3) throw std::invalid_argument("polynomial degree must be 1..3");
  PolynomialModel m;
  m.degree_ = degree;
  m.lo_ = grid.input_lo();
  m.hi_ = grid.input_hi();
  enumerate_exponents(degree, m.exponents_);
  const auto p = static_cast<Eigen::Index>(m.exponents_.size());

  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd aty = Eigen::VectorXd::Zero(p);
  std::vector<double> phi(m.exponents_.size());
  long long n = 0;
  for (const auto& r : data.records) {
    if (r.x.vtype != vt || r.x.fuel != ft) continue;
    const double raw[6] = {r.v, r.a, r.x.grade, r.x.temp_f, r.x.humidity, r.x.age_year};
    double z[6];
    for (int k = 0; k < 6; ++k) {
      z[k] = 2.0 * (raw[k] - m.lo_[static_cast<size_t>(k)]) /
                 (m.hi_[static_cast<size_t>(k)] - m.lo_[static_cast<size_t>(k)]) -
             1.0;
    }
    features(m.exponents_, z, phi.data());
    Eigen::Map<const Eigen::VectorXd> f(phi.data(), p);
    ata.selfadjointView<Eigen::Lower>().rankUpdate(f);
    aty += f * r.e;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("no records for the requested (vehicle, fuel) pair");
  ata = ata.selfadjointView<Eigen::Lower>();
  ata.diagonal().array() += ridge * static_cast<double>(n);
  Eigen::LLT<Eigen::MatrixXd> llt(ata);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("polynomial normal equations are not positive definite");
  }
  Eigen::VectorXd c = llt.solve(aty);
  m.coeffs_.assign(c.data(), c.data() + p);
  return m;
}

double PolynomialModel::predict(double v, double a, const FactorVector& x) const {
  if (coeffs_.empty()) throw std::logic_error("polynomial model is unfitted");
  const double raw[6] = {v, a, x.grade, x.temp_f, x.humidity, x.age_year};
  double z[6];
  for (int k = 0; k < 6; ++k) {
    z[k] = 2.0 * (raw[k] - lo_[static_cast<size_t>(k)]) /
               (hi_[static_cast<size_t>(k)] - lo_[static_cast<size_t>(k)]) -
           1.0;
  }
  std::vector<double> phi(exponents_.size());
  features(exponents_, z, phi.data());
  double y = 0;
  for (size_t j = 0; j < phi.size(); ++j) y += coeffs_[j] * phi[j];
  return y;
}

}  // namespace nmoves
