#pragma once

#include <memory>
#include <string>

#include "stvms/sparse.hpp"

namespace stvms {

enum class KrylovMethod { BiCGStab, Gmres };
enum class PreconType { None, Jacobi, BlockJacobi, Ilu0 };

struct KrylovConfig {
  KrylovMethod method = KrylovMethod::BiCGStab;
  double rtol = 1e-6;
  double atol = 1e-50;
  int max_iters = 2000;
  int gmres_restart = 30;
  PreconType precon = PreconType::Ilu0;
  int block_size = 4;  // BlockJacobi node-block size (d+1)
};

struct SolveStats {
  int iterations = 0;
  double final_relative_residual = 0.0;
  bool converged = false;
  std::string reason;
  std::vector<double> residual_history;
};

// Preconditioner application z = M^-1 r. Factorizations own copies of what
// they need; the matrix must outlive the preconditioner.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
};

std::unique_ptr<Preconditioner> make_preconditioner(const CsrMatrix& A,
                                                    PreconType type,
                                                    int block_size);

// Right-preconditioned iterative solve of A x = b; x holds the initial guess
// on entry. Breakdown is reported via stats, never thrown.
SolveStats solve(const CsrMatrix& A, std::span<const double> b,
                 std::span<double> x, const KrylovConfig& config);

}  // namespace stvms
