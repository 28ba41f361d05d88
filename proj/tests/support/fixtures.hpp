#pragma once

#include <nash/experiments.hpp>
#include <nash/nash_conditions.hpp>

#include <random>
#include <vector>

namespace nash::testing {

inline double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

using nash::random_two_local;

/// Periodic transverse-field Ising ring -sum Z_i Z_{i+1} - g sum X_i.
inline InteractionGraph ising_ring(int n, double g) {
  InteractionGraph graph(n);
  const auto zz = -1.0 * kron(pauli(Pauli::Z), pauli(Pauli::Z));
  for (int i = 0; i + 1 < n; ++i) graph.add_edge(i, i + 1, zz);
  if (n > 2) graph.add_edge(n - 1, 0, zz);
  for (int i = 0; i < n; ++i) graph.set_onsite(i, -g * pauli(Pauli::X));
  return graph;
}

inline NashInstance star_su2_instance(const InteractionGraph& g, double onsite_weight = 1.0) {
  return NashInstance::single_qubit_su2(g.n_sites(), star_hamiltonians(g, onsite_weight));
}

/// e^{tA} for anti-Hermitian A via the spectrum of iA.
inline CMatrix exp_anti_hermitian(const CMatrix& a, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(CMatrix(kI * a));
  const CVector phases = (-kI * t * es.eigenvalues().cast<cplx>()).array().exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace nash::testing
