#pragma once

#include <vector>

#include "stvms/core.hpp"

namespace stvms {

// Interleaved velocity-pressure numbering: dof(node, field) = node*n_fields
// + field, fields 0..d-1 velocities, field d pressure.
struct DofMap {
  int n_nodes = 0;
  int n_fields = 0;
  std::vector<uint8_t> dirichlet;
  std::vector<double> dirichlet_value;

  DofMap() = default;
  DofMap(int nodes, int fields)
      : n_nodes(nodes),
        n_fields(fields),
        dirichlet(static_cast<std::size_t>(nodes) * fields, 0),
        dirichlet_value(static_cast<std::size_t>(nodes) * fields, 0.0) {}

  int n_dofs() const { return n_nodes * n_fields; }
  int index(int node, int field) const { return node * n_fields + field; }
  std::pair<int, int> node_field(int dof) const {
    return {dof / n_fields, dof % n_fields};
  }

  void set_dirichlet(int node, int field, double value) {
    const int i = index(node, field);
    dirichlet[i] = 1;
    dirichlet_value[i] = value;
  }

  bool is_dirichlet(int dof) const { return dirichlet[dof] != 0; }

  // Write prescribed values into a state vector.
  void apply_values(std::span<double> x) const {
    for (int i = 0; i < n_dofs(); ++i)
      if (dirichlet[i]) x[i] = dirichlet_value[i];
  }
};

}  // namespace stvms
