#include "ckgen/linalg.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "ckgen/error.hpp"

namespace ckgen {

double op_norm(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  // sqrt of the top eigenvalue of x^* x (or x x^*, whichever is smaller).
  const Matrix gram = x.rows() <= x.cols() ? Matrix(x * x.adjoint()) : Matrix(x.adjoint() * x);
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  return std::sqrt(std::max(top, 0.0));
}

Matrix matrix_unit(std::size_t dim, std::size_t i, std::size_t j) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  return m;
}

Spectrum spectrum(const Matrix& x) {
  if (x.rows() != x.cols()) throw InputError("spectrum: matrix is not square");
  Spectrum s;
  if (x.rows() == 0) {
    s.eigenvalues.resize(0);
    s.eigenvectors.resize(0, 0);
    return s;
  }
  const Matrix h = (x + x.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  s.eigenvalues = es.eigenvalues();
  s.eigenvectors = es.eigenvectors();
  return s;
}

std::vector<SpectralCluster> Spectrum::clusters(double tol) const {
  std::vector<SpectralCluster> out;
  const auto n = eigenvalues.size();
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i + 1;
    while (j < n && eigenvalues[j] - eigenvalues[j - 1] <= tol) ++j;
    SpectralCluster c;
    c.multiplicity = static_cast<std::size_t>(j - i);
    c.value = eigenvalues.segment(i, j - i).mean();
    const Matrix v = eigenvectors.middleCols(i, j - i);
    c.projection = v * v.adjoint();
    out.push_back(std::move(c));
    i = j;
  }
  return out;
}

namespace {

nlohmann::json number(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e15) {
    return static_cast<long long>(v);
  }
  return v;
}

double read_number(const nlohmann::json& j) {
  if (!j.is_number()) throw InputError("matrix entries must be numbers");
  return j.get<double>();
}

}  // namespace

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      row.push_back(nlohmann::json::array({number(m(i, k).real()), number(m(i, k).imag())}));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw InputError("matrix must be an array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw InputError("matrix is not square (row " + std::to_string(i) + ")");
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto& z = row[static_cast<std::size_t>(k)];
      if (!z.is_array() || z.size() != 2) throw InputError("matrix entries must be [re, im] pairs");
      m(i, k) = Complex(read_number(z[0]), read_number(z[1]));
    }
  }
  return m;
}

}  // namespace ckgen
