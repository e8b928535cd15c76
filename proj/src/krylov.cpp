#include "stvms/krylov.hpp"

#include <algorithm>
#include <cmath>

namespace stvms {

namespace {

class IdentityPrecon : public Preconditioner {
 public:
  void apply(std::span<const double> r, std::span<double> z) const override {
    std::copy(r.begin(), r.end(), z.begin());
  }
};

class JacobiPrecon : public Preconditioner {
 public:
  explicit JacobiPrecon(const CsrMatrix& A) : inv_diag_(A.n, 1.0) {
    for (int r = 0; r < A.n; ++r) {
      const int k = A.find(r, r);
      if (k >= 0 && A.val[k] != 0.0) inv_diag_[r] = 1.0 / A.val[k];
    }
  }
  void apply(std::span<const double> r, std::span<double> z) const override {
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] * inv_diag_[i];
  }

 private:
  std::vector<double> inv_diag_;
};

// Per-node (d+1)x(d+1) diagonal blocks of the interleaved layout, LU-factored
// with partial pivoting.
class BlockJacobiPrecon : public Preconditioner {
 public:
  BlockJacobiPrecon(const CsrMatrix& A, int bs) : bs_(bs), n_(A.n) {
    const int nblocks = n_ / bs;
    lu_.assign(static_cast<std::size_t>(nblocks) * bs * bs, 0.0);
    piv_.assign(static_cast<std::size_t>(nblocks) * bs, 0);
    for (int blk = 0; blk < nblocks; ++blk) {
      double* m = lu_.data() + static_cast<std::size_t>(blk) * bs * bs;
      for (int i = 0; i < bs; ++i)
        for (int j = 0; j < bs; ++j) {
          const int k = A.find(blk * bs + i, blk * bs + j);
          m[i * bs + j] = (k >= 0) ? A.val[k] : 0.0;
        }
      int* piv = piv_.data() + static_cast<std::size_t>(blk) * bs;
      for (int colp = 0; colp < bs; ++colp) {
        int p = colp;
        for (int r = colp + 1; r < bs; ++r)
          if (std::abs(m[r * bs + colp]) > std::abs(m[p * bs + colp])) p = r;
        piv[colp] = p;
        if (p != colp)
          for (int c = 0; c < bs; ++c) std::swap(m[colp * bs + c], m[p * bs + c]);
        if (m[colp * bs + colp] == 0.0) m[colp * bs + colp] = 1.0;
        for (int r = colp + 1; r < bs; ++r) {
          const double f = m[r * bs + colp] / m[colp * bs + colp];
          m[r * bs + colp] = f;
          for (int c = colp + 1; c < bs; ++c) m[r * bs + c] -= f * m[colp * bs + c];
        }
      }
    }
  }

  void apply(std::span<const double> r, std::span<double> z) const override {
    const int nblocks = n_ / bs_;
    double y[8];
    for (int blk = 0; blk < nblocks; ++blk) {
      const double* m = lu_.data() + static_cast<std::size_t>(blk) * bs_ * bs_;
      const int* piv = piv_.data() + static_cast<std::size_t>(blk) * bs_;
      for (int i = 0; i < bs_; ++i) y[i] = r[blk * bs_ + i];
      for (int i = 0; i < bs_; ++i)
        if (piv[i] != i) std::swap(y[i], y[piv[i]]);
      for (int i = 1; i < bs_; ++i)
        for (int j = 0; j < i; ++j) y[i] -= m[i * bs_ + j] * y[j];
      for (int i = bs_ - 1; i >= 0; --i) {
        for (int j = i + 1; j < bs_; ++j) y[i] -= m[i * bs_ + j] * y[j];
        y[i] /= m[i * bs_ + i];
      }
      for (int i = 0; i < bs_; ++i) z[blk * bs_ + i] = y[i];
    }
  }

 private:
  int bs_;
  int n_;
  std::vector<double> lu_;
  std::vector<int> piv_;
};

class Ilu0Precon : public Preconditioner {
 public:
  explicit Ilu0Precon(const CsrMatrix& A)
      : n_(A.n), row_ptr_(A.row_ptr), col_(A.col), val_(A.val) {
    diag_pos_.resize(n_);
    std::vector<int> pos(n_, -1);
    for (int i = 0; i < n_; ++i) {
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) pos[col_[k]] = k;
      int dpos = -1;
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        const int c = col_[k];
        if (c >= i) {
          if (c == i) dpos = k;
          break;
        }
        // eliminate column c using row c
        const double piv = val_[diag_pos_[c]];
        if (piv == 0.0) continue;
        const double f = val_[k] / piv;
        val_[k] = f;
        for (int kk = diag_pos_[c] + 1; kk < row_ptr_[c + 1]; ++kk) {
          const int p = pos[col_[kk]];
          if (p >= 0) val_[p] -= f * val_[kk];
        }
      }
      if (dpos < 0 || val_[dpos] == 0.0) {
        // keep the factorization usable on structurally singular rows
        if (dpos < 0) fail("ILU0: missing diagonal entry");
        val_[dpos] = 1.0;
      }
      diag_pos_[i] = dpos;
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) pos[col_[k]] = -1;
    }
  }

  void apply(std::span<const double> r, std::span<double> z) const override {
    // L y = r (unit lower), U z = y
    for (int i = 0; i < n_; ++i) {
      double s = r[i];
      for (int k = row_ptr_[i]; col_[k] < i; ++k) s -= val_[k] * z[col_[k]];
      z[i] = s;
    }
    for (int i = n_ - 1; i >= 0; --i) {
      double s = z[i];
      for (int k = row_ptr_[i + 1] - 1; col_[k] > i; --k) s -= val_[k] * z[col_[k]];
      z[i] = s / val_[diag_pos_[i]];
    }
  }

 private:
  int n_;
  std::vector<int> row_ptr_;
  std::vector<int> col_;
  std::vector<double> val_;
  std::vector<int> diag_pos_;
};

}  // namespace

std::unique_ptr<Preconditioner> make_preconditioner(const CsrMatrix& A,
                                                    PreconType type,
                                                    int block_size) {
  switch (type) {
    case PreconType::None:
      return std::make_unique<IdentityPrecon>();
    case PreconType::Jacobi:
      return std::make_unique<JacobiPrecon>(A);
    case PreconType::BlockJacobi:
      require(block_size >= 1 && block_size <= 8 && A.n % block_size == 0,
              "BlockJacobi: bad block size");
      return std::make_unique<BlockJacobiPrecon>(A, block_size);
    case PreconType::Ilu0:
      return std::make_unique<Ilu0Precon>(A);
  }
  fail("unknown preconditioner");
}

namespace {

SolveStats bicgstab(const CsrMatrix& A, std::span<const double> b,
                    std::span<double> x, const Preconditioner& M,
                    const KrylovConfig& cfg) {
  SolveStats stats;
  const int n = A.n;
  std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n),
      phat(n), shat(n);

  A.multiply(x, r);
  for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
  rhat = r;

  const double bnorm = norm2(b);
  const double target = std::max(cfg.rtol * bnorm, cfg.atol);
  double rnorm = norm2(r);
  stats.residual_history.push_back(rnorm);
  if (rnorm <= target) {
    stats.converged = true;
    stats.final_relative_residual = (bnorm > 0) ? rnorm / bnorm : 0.0;
    return stats;
  }

  double rho = 1.0, alpha = 1.0, omega = 1.0;
  const double tiny = 1e-300;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const double rho1 = dot(rhat, r);
    if (std::abs(rho1) < tiny * std::max(1.0, rnorm)) {
      stats.reason = "breakdown: rho ~ 0";
      break;
    }
    const double beta = (rho1 / rho) * (alpha / omega);
    for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    M.apply(p, phat);
    A.multiply(phat, v);
    const double rhv = dot(rhat, v);
    if (std::abs(rhv) < tiny) {
      stats.reason = "breakdown: (rhat, v) ~ 0";
      break;
    }
    alpha = rho1 / rhv;
    for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    double snorm = norm2(s);
    if (snorm <= target) {
      for (int i = 0; i < n; ++i) x[i] += alpha * phat[i];
      stats.iterations = it;
      stats.residual_history.push_back(snorm);
      stats.converged = true;
      stats.final_relative_residual = (bnorm > 0) ? snorm / bnorm : 0.0;
      return stats;
    }
    M.apply(s, shat);
    A.multiply(shat, t);
    const double tt = dot(t, t);
    if (tt < tiny) {
      stats.reason = "breakdown: (t, t) ~ 0";
      break;
    }
    omega = dot(t, s) / tt;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * phat[i] + omega * shat[i];
      r[i] = s[i] - omega * t[i];
    }
    rnorm = norm2(r);
    stats.residual_history.push_back(rnorm);
    stats.iterations = it;
    if (rnorm <= target) {
      stats.converged = true;
      break;
    }
    if (std::abs(omega) < tiny) {
      stats.reason = "breakdown: omega ~ 0";
      break;
    }
    rho = rho1;
  }
  // report the true residual
  A.multiply(x, r);
  for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
  rnorm = norm2(r);
  stats.final_relative_residual = (bnorm > 0) ? rnorm / bnorm : rnorm;
  if (!stats.converged && stats.reason.empty())
    stats.reason = "max iterations reached";
  if (rnorm <= target) stats.converged = true;
  return stats;
}

SolveStats gmres(const CsrMatrix& A, std::span<const double> b,
                 std::span<double> x, const Preconditioner& M,
                 const KrylovConfig& cfg) {
  SolveStats stats;
  const int n = A.n;
  const int m = std::max(1, cfg.gmres_restart);
  std::vector<std::vector<double>> V(m + 1, std::vector<double>(n));
  std::vector<double> H(static_cast<std::size_t>(m + 1) * m, 0.0);
  std::vector<double> cs(m), sn(m), g(m + 1), y(m), w(n), z(n);

  const double bnorm = norm2(b);
  const double target = std::max(cfg.rtol * bnorm, cfg.atol);
  int total_it = 0;

  while (true) {
    A.multiply(x, w);
    for (int i = 0; i < n; ++i) w[i] = b[i] - w[i];
    double beta = norm2(w);
    if (stats.residual_history.empty()) stats.residual_history.push_back(beta);
    if (beta <= target || total_it >= cfg.max_iters) {
      stats.converged = beta <= target;
      stats.final_relative_residual = (bnorm > 0) ? beta / bnorm : beta;
      stats.iterations = total_it;
      if (!stats.converged) stats.reason = "max iterations reached";
      return stats;
    }
    for (int i = 0; i < n; ++i) V[0][i] = w[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;

    int k = 0;
    for (; k < m && total_it < cfg.max_iters; ++k, ++total_it) {
      M.apply(V[k], z);
      A.multiply(z, w);
      for (int i = 0; i <= k; ++i) {
        const double h = dot(w, V[i]);
        H[static_cast<std::size_t>(i) * m + k] = h;
        for (int r = 0; r < n; ++r) w[r] -= h * V[i][r];
      }
      const double h1 = norm2(w);
      H[static_cast<std::size_t>(k + 1) * m + k] = h1;
      if (h1 > 0)
        for (int r = 0; r < n; ++r) V[k + 1][r] = w[r] / h1;

      // Givens updates
      for (int i = 0; i < k; ++i) {
        const double t0 = cs[i] * H[static_cast<std::size_t>(i) * m + k] +
                          sn[i] * H[static_cast<std::size_t>(i + 1) * m + k];
        H[static_cast<std::size_t>(i + 1) * m + k] =
            -sn[i] * H[static_cast<std::size_t>(i) * m + k] +
            cs[i] * H[static_cast<std::size_t>(i + 1) * m + k];
        H[static_cast<std::size_t>(i) * m + k] = t0;
      }
      const double hk = H[static_cast<std::size_t>(k) * m + k];
      const double hk1 = H[static_cast<std::size_t>(k + 1) * m + k];
      const double denom = std::hypot(hk, hk1);
      cs[k] = (denom > 0) ? hk / denom : 1.0;
      sn[k] = (denom > 0) ? hk1 / denom : 0.0;
      H[static_cast<std::size_t>(k) * m + k] = denom;
      H[static_cast<std::size_t>(k + 1) * m + k] = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      const double res = std::abs(g[k + 1]);
      stats.residual_history.push_back(res);
      if (res <= target) {
        ++k;
        ++total_it;
        break;
      }
    }

    // back substitution and update
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j)
        s -= H[static_cast<std::size_t>(i) * m + j] * y[j];
      y[i] = s / H[static_cast<std::size_t>(i) * m + i];
    }
    std::fill(w.begin(), w.end(), 0.0);
    for (int j = 0; j < k; ++j)
      for (int r = 0; r < n; ++r) w[r] += y[j] * V[j][r];
    M.apply(w, z);
    for (int r = 0; r < n; ++r) x[r] += z[r];
  }
}

}  // namespace

SolveStats solve(const CsrMatrix& A, std::span<const double> b,
                 std::span<double> x, const KrylovConfig& cfg) {
  require(A.n == static_cast<int>(b.size()) && A.n == static_cast<int>(x.size()),
          "solve: dimension mismatch");
  auto M = make_preconditioner(A, cfg.precon, cfg.block_size);
  if (cfg.method == KrylovMethod::BiCGStab) return bicgstab(A, b, x, *M, cfg);
  return gmres(A, b, x, *M, cfg);
}

}  // namespace stvms
