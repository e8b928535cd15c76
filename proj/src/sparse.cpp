#include "stvms/sparse.hpp"

#include <algorithm>
#include <ostream>

namespace stvms {

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) {
    double s = 0.0;
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += val[k] * x[col[k]];
    y[r] = s;
  }
}

int CsrMatrix::find(int row, int c) const {
  const int* first = col.data() + row_ptr[row];
  const int* last = col.data() + row_ptr[row + 1];
  const int* it = std::lower_bound(first, last, c);
  if (it == last || *it != c) return -1;
  return static_cast<int>(it - col.data());
}

double& CsrMatrix::at(int row, int c) {
  const int k = find(row, c);
  if (k < 0) fail("CsrMatrix::at: entry (" + std::to_string(row) + "," +
                  std::to_string(c) + ") not in pattern");
  return val[k];
}

Sparsity build_sparsity(const SpaceTimeMesh& mesh, int n_fields) {
  const int n_nodes = mesh.n_nodes();
  std::vector<std::vector<int>> adj(n_nodes);
  const int npe = mesh.nodes_per_elem();
  for (int e = 0; e < mesh.n_elems(); ++e) {
    std::span<const int> nodes = mesh.elem_nodes(e);
    for (int i = 0; i < npe; ++i) {
      auto& row = adj[nodes[i]];
      row.insert(row.end(), nodes.begin(), nodes.end());
    }
  }
  Sparsity sp;
  sp.n_nodes = n_nodes;
  sp.n_fields = n_fields;
  sp.node_row_ptr.resize(n_nodes + 1, 0);
  for (int i = 0; i < n_nodes; ++i) {
    auto& row = adj[i];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    sp.node_row_ptr[i + 1] = sp.node_row_ptr[i] + static_cast<int>(row.size());
  }
  sp.node_cols.resize(sp.node_row_ptr.back());
  for (int i = 0; i < n_nodes; ++i)
    std::copy(adj[i].begin(), adj[i].end(),
              sp.node_cols.begin() + sp.node_row_ptr[i]);
  return sp;
}

CsrMatrix allocate_matrix(const Sparsity& sp) {
  const int nf = sp.n_fields;
  CsrMatrix A;
  A.n = sp.n_dofs();
  A.row_ptr.resize(A.n + 1, 0);
  for (int node = 0; node < sp.n_nodes; ++node) {
    const int n_nbr = sp.node_row_ptr[node + 1] - sp.node_row_ptr[node];
    for (int f = 0; f < nf; ++f)
      A.row_ptr[node * nf + f + 1] = n_nbr * nf;
  }
  for (int r = 0; r < A.n; ++r) A.row_ptr[r + 1] += A.row_ptr[r];
  A.col.resize(A.row_ptr.back());
  A.val.assign(A.row_ptr.back(), 0.0);
  for (int node = 0; node < sp.n_nodes; ++node) {
    for (int f = 0; f < nf; ++f) {
      int k = A.row_ptr[node * nf + f];
      for (int nb = sp.node_row_ptr[node]; nb < sp.node_row_ptr[node + 1]; ++nb)
        for (int g = 0; g < nf; ++g) A.col[k++] = sp.node_cols[nb] * nf + g;
    }
  }
  return A;
}

void scatter_element(const Sparsity& sp, std::span<const int> elem_nodes,
                     std::span<const double> elem_residual,
                     std::span<const double> elem_jacobian, CsrMatrix* A,
                     std::span<double> residual) {
  const int nf = sp.n_fields;
  const int npe = static_cast<int>(elem_nodes.size());
  const int nloc = npe * nf;

  if (!residual.empty()) {
    for (int i = 0; i < npe; ++i) {
      const int node = elem_nodes[i];
      for (int f = 0; f < nf; ++f)
        residual[node * nf + f] += elem_residual[i * nf + f];
    }
  }
  if (A == nullptr || elem_jacobian.empty()) return;

  for (int i = 0; i < npe; ++i) {
    const int row_node = elem_nodes[i];
    const int* nbr_first = sp.node_cols.data() + sp.node_row_ptr[row_node];
    const int* nbr_last = sp.node_cols.data() + sp.node_row_ptr[row_node + 1];
    const int n_nbr = static_cast<int>(nbr_last - nbr_first);
    for (int j = 0; j < npe; ++j) {
      const int col_node = elem_nodes[j];
      const int* it = std::lower_bound(nbr_first, nbr_last, col_node);
      const int pos = static_cast<int>(it - nbr_first);
      for (int fi = 0; fi < nf; ++fi) {
        const int row = row_node * nf + fi;
        double* dst = A->val.data() + A->row_ptr[row] + pos * nf;
        const double* src =
            elem_jacobian.data() + static_cast<std::size_t>(i * nf + fi) * nloc +
            j * nf;
        for (int fj = 0; fj < nf; ++fj) dst[fj] += src[fj];
      }
      (void)n_nbr;
    }
  }
}

void apply_dirichlet_rows(const DofMap& dofs, std::span<const double> x,
                          CsrMatrix* A, std::span<double> residual) {
  for (int dof = 0; dof < dofs.n_dofs(); ++dof) {
    if (!dofs.is_dirichlet(dof)) continue;
    if (!residual.empty()) residual[dof] = x[dof] - dofs.dirichlet_value[dof];
    if (A != nullptr) {
      for (int k = A->row_ptr[dof]; k < A->row_ptr[dof + 1]; ++k)
        A->val[k] = (A->col[k] == dof) ? 1.0 : 0.0;
    }
  }
}

void write_matrix_market(std::ostream& os, const CsrMatrix& A) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << A.n << " " << A.n << " " << A.nnz() << "\n";
  os.precision(17);
  for (int r = 0; r < A.n; ++r)
    for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
      os << r + 1 << " " << A.col[k] + 1 << " " << A.val[k] << "\n";
}

}  // namespace stvms
