#pragma once

// Shared fixtures: derived quadric sets (computed once per test binary),
// random rotations, and small helpers.

#include <random>

#include "framefield/quartic.hpp"
#include "framefield/so3.hpp"
#include "framefield/varieties.hpp"

namespace testsupport {

using namespace framefield;

struct Quadrics {
  varieties::QuadricSet octa;
  varieties::QuadricSet odeco;
  static const Quadrics& get() {
    static Quadrics q;
    return q;
  }

 private:
  Quadrics()
      : octa(varieties::derive_octa_quadrics(2000, 1)),
        odeco(varieties::derive_odeco_quadrics(5000, 1)) {}
};

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector4d q;
  for (int i = 0; i < 4; i++) q(i) = n(rng);
  q.normalize();
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
}

inline Vec9 random_octa_frame(std::mt19937_64& rng) {
  return so3::wigner_from_rotation(4, random_rotation(rng)) * so3::canonical_frame();
}

inline Vec15 random_odeco_frame(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  quartic::OdecoDecomposition d;
  d.axes = random_rotation(rng);
  for (int i = 0; i < 3; i++) d.lambdas(i) = n(rng);
  return quartic::odeco_from_decomposition(d);
}

inline VecX random_gaussian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  VecX v(n);
  for (int i = 0; i < n; i++) v(i) = g(rng);
  return v;
}

}  // namespace testsupport
