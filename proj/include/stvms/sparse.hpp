#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "stvms/core.hpp"
#include "stvms/dofmap.hpp"
#include "stvms/mesh.hpp"

namespace stvms {

struct CsrMatrix {
  int n = 0;
  std::vector<int> row_ptr;     // n+1
  std::vector<int> col;         // sorted, unique per row
  std::vector<double> val;

  int nnz() const { return static_cast<int>(col.size()); }
  void zero() { std::fill(val.begin(), val.end(), 0.0); }

  // y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;

  // Position of (row, c) in val, or -1.
  int find(int row, int c) const;

  double& at(int row, int c);
};

// Node-level adjacency from element connectivity; every node pair in an
// element couples through all (d+1)^2 field blocks.
struct Sparsity {
  int n_nodes = 0;
  int n_fields = 0;
  std::vector<int> node_row_ptr;  // n_nodes+1
  std::vector<int> node_cols;     // sorted neighbor nodes (incl. self)

  int n_dofs() const { return n_nodes * n_fields; }
};

Sparsity build_sparsity(const SpaceTimeMesh& mesh, int n_fields);

CsrMatrix allocate_matrix(const Sparsity& sparsity);

// Scatter one element system (local dof = basis*n_fields + field) into the
// matrix and/or residual.
void scatter_element(const Sparsity& sparsity, std::span<const int> elem_nodes,
                     std::span<const double> elem_residual,
                     std::span<const double> elem_jacobian, CsrMatrix* A,
                     std::span<double> residual);

// Dirichlet handling by row replacement: each masked row becomes the identity
// row and its residual entry becomes x - g.
void apply_dirichlet_rows(const DofMap& dofs, std::span<const double> x,
                          CsrMatrix* A, std::span<double> residual);

// MatrixMarket coordinate format dump (debugging aid).
void write_matrix_market(std::ostream& os, const CsrMatrix& A);

}  // namespace stvms
