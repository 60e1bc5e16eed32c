#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace ckgen {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Largest singular value.
double op_norm(const Matrix& x);

/// Matrix unit E_{ij}.
Matrix matrix_unit(std::size_t dim, std::size_t i, std::size_t j);

struct SpectralCluster {
  double value = 0.0;  // mean eigenvalue of the cluster
  std::size_t multiplicity = 0;
  Matrix projection;
};

/// Eigen-decomposition of a self-adjoint matrix.
struct Spectrum {
  Eigen::VectorXd eigenvalues;  // ascending
  Matrix eigenvectors;          // columns, orthonormal

  /// Groups consecutive eigenvalues whose neighbours differ by at most tol.
  std::vector<SpectralCluster> clusters(double tol) const;
  /// Projection onto the eigenvectors whose eigenvalue satisfies pred.
  template <class Pred>
  Matrix projection_where(Pred pred) const {
    const auto n = eigenvectors.rows();
    Matrix p = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
      if (pred(eigenvalues[i])) p += eigenvectors.col(i) * eigenvectors.col(i).adjoint();
    }
    return p;
  }
};

/// Throws InputError for non-square input; symmetrizes before solving.
Spectrum spectrum(const Matrix& x);

/// f(x) for self-adjoint x via its eigen-decomposition.
template <class F>
Matrix functional_calculus(const Spectrum& s, F f) {
  const auto n = s.eigenvectors.rows();
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) {
    out += f(s.eigenvalues[i]) * (s.eigenvectors.col(i) * s.eigenvectors.col(i).adjoint());
  }
  return out;
}

/// Row-major [[ [re, im], ... ], ...]; integral entries are written as integers.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace ckgen
