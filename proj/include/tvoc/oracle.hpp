#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <nlohmann/json.hpp>

#include "tvoc/core.hpp"

namespace tvoc {

/// 1D total variation denoising:
///   min_x (1/2) sum (x_i - y_i)^2 + lam * sum |x_{i+1} - x_i|
/// Direct O(n) algorithm of Condat (2013), in place on x.
inline void tv1d_denoise(std::vector<double>& x, double lam) {
  const int width = int(x.size());
  if (width <= 0) return;
  if (lam <= 0.0) return;
  std::vector<double> input = x;
  std::vector<double>& output = x;

  int k = 0, k0 = 0;
  double umin = lam, umax = -lam;
  double vmin = input[0] - lam, vmax = input[0] + lam;
  int kplus = 0, kminus = 0;
  const double twolambda = 2.0 * lam;
  const double minlambda = -lam;
  for (;;) {
    while (k == width - 1) {
      if (umin < 0.0) {
        do output[k0++] = vmin;
        while (k0 <= kminus);
        umax = (vmin = input[kminus = k = k0]) + (umin = lam) - vmax;
      } else if (umax > 0.0) {
        do output[k0++] = vmax;
        while (k0 <= kplus);
        umin = (vmax = input[kplus = k = k0]) + (umax = minlambda) - vmin;
      } else {
        vmin += umin / (k - k0 + 1);
        do output[k0++] = vmin;
        while (k0 <= k);
        return;
      }
    }
    if ((umin += input[k + 1] - vmin) < minlambda) {
      do output[k0++] = vmin;
      while (k0 <= kminus);
      vmax = (vmin = input[kplus = kminus = k = k0]) + twolambda;
      umin = lam;
      umax = minlambda;
    } else if ((umax += input[k + 1] - vmax) > lam) {
      do output[k0++] = vmax;
      while (k0 <= kplus);
      vmin = (vmax = input[kplus = kminus = k = k0]) - twolambda;
      umin = lam;
      umax = minlambda;
    } else {
      k++;
      if (umin >= lam) {
        vmin += (umin - lam) / ((kminus = k) - k0 + 1);
        umin = lam;
      }
      if (umax <= minlambda) {
        vmax += (umax + lam) / ((kplus = k) - k0 + 1);
        umax = minlambda;
      }
    }
  }
}

/// Time-sampled problem data for the general linear-quadratic form.
struct LqptvData {
  int n = 0;
  int m = 0;
  std::vector<Eigen::MatrixXd> A, B;  // continuous-time samples, one per step
  std::vector<Eigen::MatrixXd> Q, R;  // cost samples, one per step
  Eigen::VectorXd x0, xf;
};

namespace detail_oracle {

/// Zero-order-hold discrete pair (Ad, Bd) over one step: plain Taylor sum of
/// the augmented exponential, scaling-and-squaring only when the step matrix
/// is large. Exact (terminating) for nilpotent A such as the double
/// integrator.
inline void zoh(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double dt,
                Eigen::MatrixXd& Ad, Eigen::MatrixXd& Bd) {
  const int n = int(A.rows());
  const int m = int(B.cols());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = A * dt;
  M.topRightCorner(n, m) = B * dt;

  int squarings = 0;
  double nrm = M.cwiseAbs().rowwise().sum().maxCoeff();
  while (nrm > 0.5) {
    M *= 0.5;
    nrm *= 0.5;
    ++squarings;
  }
  Eigen::MatrixXd E = Eigen::MatrixXd::Identity(n + m, n + m);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n + m, n + m);
  for (int k = 1; k <= 40; ++k) {
    term = (term * M) / double(k);
    if (term.cwiseAbs().maxCoeff() == 0.0) break;
    E += term;
    if (term.cwiseAbs().maxCoeff() < 1e-300) break;
  }
  for (int s = 0; s < squarings; ++s) E = E * E;
  Ad = E.topLeftCorner(n, n);
  Bd = E.topRightCorner(n, m);
}

}  // namespace detail_oracle

/// Discretized problem: exact ZOH propagation per step, terminal state
/// pinned. Covers both the double-integrator instance and general data.
struct DiscretizedProblem {
  int n_steps = 0;
  double dt = 0.0;
  Weight alpha;
  BoundaryConditions bc;  // meaningful for the double-integrator path
  LqptvData data;
  std::vector<Eigen::MatrixXd> Ad, Bd;  // discrete pairs, one per step
  bool state_cost = false;              // any nonzero Q sample

  int n() const { return data.n; }
  int m() const { return data.m; }

  void build_discrete() {
    Ad.resize(std::size_t(n_steps));
    Bd.resize(std::size_t(n_steps));
    for (int k = 0; k < n_steps; ++k)
      detail_oracle::zoh(data.A[std::size_t(k)], data.B[std::size_t(k)], dt,
                         Ad[std::size_t(k)], Bd[std::size_t(k)]);
    state_cost = false;
    for (const auto& Qk : data.Q) {
      if (Qk.cwiseAbs().maxCoeff() > 0.0) state_cost = true;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(Qk);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw std::invalid_argument("DiscretizedProblem: Q sample not PSD");
    }
    for (const auto& Rk : data.R) {
      Eigen::LLT<Eigen::MatrixXd> llt(Rk);
      if (llt.info() != Eigen::Success)
        throw std::invalid_argument("DiscretizedProblem: R sample not PD");
    }
  }
};

/// Double-integrator transcription with the standard chain-of-integrators
/// matrices.
inline DiscretizedProblem discretize(const BoundaryConditions& bc,
                                     Weight alpha, int n_steps) {
  if (n_steps < 2) throw std::invalid_argument("discretize: need N >= 2");
  DiscretizedProblem dp;
  dp.n_steps = n_steps;
  dp.dt = 1.0 / n_steps;
  dp.alpha = alpha;
  dp.bc = bc;
  dp.data.n = 2;
  dp.data.m = 1;
  Eigen::MatrixXd A(2, 2), B(2, 1), Q(2, 2), R(1, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  Q.setZero();
  R << 1;
  dp.data.A.assign(std::size_t(n_steps), A);
  dp.data.B.assign(std::size_t(n_steps), B);
  dp.data.Q.assign(std::size_t(n_steps), Q);
  dp.data.R.assign(std::size_t(n_steps), R);
  dp.data.x0 = Eigen::Vector2d(bc.s0, bc.v0);
  dp.data.xf = Eigen::Vector2d(bc.sf, bc.vf);
  dp.build_discrete();
  return dp;
}

/// General LQPTV transcription from sampled data.
inline DiscretizedProblem discretize_lqptv(LqptvData data, Weight alpha,
                                           int n_steps) {
  if (n_steps < 2) throw std::invalid_argument("discretize_lqptv: need N >= 2");
  auto fit = [&](std::vector<Eigen::MatrixXd>& v, const char* what) {
    if (int(v.size()) == 1) v.assign(std::size_t(n_steps), v[0]);
    if (int(v.size()) != n_steps)
      throw std::invalid_argument(std::string("discretize_lqptv: ") + what +
                                  " needs 1 or N samples");
  };
  fit(data.A, "A");
  fit(data.B, "B");
  fit(data.Q, "Q");
  fit(data.R, "R");
  DiscretizedProblem dp;
  dp.n_steps = n_steps;
  dp.dt = 1.0 / n_steps;
  dp.alpha = alpha;
  dp.data = std::move(data);
  dp.build_discrete();
  return dp;
}

struct OracleSolution {
  std::vector<double> controls;  // N*m, row-major per step
  std::vector<double> states;    // (N+1)*n
  std::vector<double> eta;       // (N+1)*m interface adjoints, eta_0 = 0
  std::vector<double> multipliers;  // n terminal multipliers
  double objective = 0.0;
  double energy_part = 0.0;
  double tv_part = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;

  double control(int k, int j = 0, int m = 1) const {
    return controls[std::size_t(k * m + j)];
  }

  nlohmann::json to_json() const {
    return {{"controls", controls},   {"states", states},
            {"eta", eta},             {"objective", objective},
            {"energy_part", energy_part}, {"tv_part", tv_part},
            {"kkt_residual", kkt_residual}, {"iterations", iterations}};
  }
};

struct OracleNonConvergence : std::runtime_error {
  OracleSolution best;
  OracleNonConvergence(std::string msg, OracleSolution b)
      : std::runtime_error(std::move(msg)), best(std::move(b)) {}
};

struct OracleInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail_oracle {

inline double discrete_tv(const Eigen::VectorXd& u, int N, int m) {
  double tv = 0.0;
  for (int j = 0; j < m; ++j)
    for (int k = 0; k + 1 < N; ++k)
      tv += std::abs(u[(k + 1) * m + j] - u[k * m + j]);
  return tv;
}

/// Propagates the discrete dynamics exactly from x0.
inline Eigen::MatrixXd propagate(const DiscretizedProblem& dp,
                                 const Eigen::VectorXd& u) {
  const int N = dp.n_steps, n = dp.n(), m = dp.m();
  Eigen::MatrixXd X(n, N + 1);
  X.col(0) = dp.data.x0;
  for (int k = 0; k < N; ++k)
    X.col(k + 1) = dp.Ad[std::size_t(k)] * X.col(k) +
                   dp.Bd[std::size_t(k)] * u.segment(k * m, m);
  return X;
}

/// ADMM on the state-eliminated form:
///   min (1/2) sum dt u_k' R_k u_k + alpha*TV(u)  s.t.  C u = b,
/// where C maps controls to the terminal state.
inline OracleSolution admm_eliminated(const DiscretizedProblem& dp, double tol,
                                      int max_iter,
                                      const Eigen::VectorXd* warm = nullptr) {
  const int N = dp.n_steps, n = dp.n(), m = dp.m();
  const int nu = N * m;
  const double alpha = dp.alpha.alpha;
  const double dt = dp.dt;

  // Terminal map: x_N = Phi x0 + sum_k (Ad_{N-1}..Ad_{k+1}) Bd_k u_k.
  Eigen::MatrixXd C(n, nu);
  Eigen::VectorXd b;
  {
    Eigen::MatrixXd T = Eigen::MatrixXd::Identity(n, n);
    for (int k = N - 1; k >= 0; --k) {
      C.middleCols(k * m, m) = T * dp.Bd[std::size_t(k)];
      T = T * dp.Ad[std::size_t(k)];
    }
    // after the loop T = Ad_{N-1} ... Ad_0
    b = dp.data.xf - T * dp.data.x0;
  }

  // Block-diagonal quadratic term dt*R_k; with rho the u-step matrix is
  // M_k = dt R_k + rho I.
  std::vector<Eigen::LLT<Eigen::MatrixXd>> Mfac;
  Eigen::MatrixXd E(nu, n);  // M^{-1} C'
  Eigen::LLT<Eigen::MatrixXd> Sfac;
  double rho = 1.0;
  auto refactor = [&]() {
    Mfac.clear();
    Mfac.reserve(std::size_t(N));
    for (int k = 0; k < N; ++k)
      Mfac.emplace_back(Eigen::MatrixXd(dt * dp.data.R[std::size_t(k)] +
                                        rho * Eigen::MatrixXd::Identity(m, m)));
    for (int k = 0; k < N; ++k)
      E.middleRows(k * m, m) = Mfac[std::size_t(k)].solve(
          C.middleCols(k * m, m).transpose());
    Eigen::MatrixXd S = C * E;
    Sfac = Eigen::LLT<Eigen::MatrixXd>(S);
    if (Sfac.info() != Eigen::Success)
      throw OracleInfeasible(
          "terminal state unreachable: constraint Gram matrix is singular "
          "(uncontrollable pair?)");
  };
  refactor();

  Eigen::VectorXd u = Eigen::VectorXd::Zero(nu);
  Eigen::VectorXd z = warm ? *warm : Eigen::VectorXd::Zero(nu);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(nu);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
  std::vector<double> chan(static_cast<std::size_t>(N), 0.0);

  auto usolve = [&]() {
    Eigen::VectorXd q = rho * (z - w);
    Eigen::VectorXd t(nu);
    for (int k = 0; k < N; ++k)
      t.segment(k * m, m) = Mfac[std::size_t(k)].solve(q.segment(k * m, m));
    mu = Sfac.solve(C * t - b);
    u = t - E * mu;
  };

  double rp = 0.0, rd = 0.0;
  int it = 0;
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  const double stop = tol * scale;
  for (it = 1; it <= max_iter; ++it) {
    usolve();
    Eigen::VectorXd z_old = z;
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < N; ++k) chan[std::size_t(k)] = u[k * m + j] + w[k * m + j];
      tv1d_denoise(chan, alpha / rho);
      for (int k = 0; k < N; ++k) z[k * m + j] = chan[std::size_t(k)];
    }
    w += u - z;
    rp = (u - z).cwiseAbs().maxCoeff();
    rd = rho * (z - z_old).cwiseAbs().maxCoeff();
    if (std::max(rp, rd) <= stop) break;
    if (it % 50 == 0) {
      if (rp > 10.0 * rd && rho < 1e8) {
        rho *= 2.0;
        w *= 0.5;
        refactor();
      } else if (rd > 10.0 * rp && rho > 1e-8) {
        rho *= 0.5;
        w *= 2.0;
        refactor();
      }
    }
  }

  OracleSolution sol;
  sol.iterations = std::min(it, max_iter);
  // Report the feasible iterate: u satisfies C u = b by construction.
  const Eigen::MatrixXd X = propagate(dp, u);
  sol.controls.assign(u.data(), u.data() + nu);
  sol.states.assign(X.data(), X.data() + X.size());
  sol.multipliers.assign(mu.data(), mu.data() + n);
  // Discrete adjoint from the TV subgradient g = rho*w.
  sol.eta.assign(std::size_t((N + 1) * m), 0.0);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < N; ++k)
      sol.eta[std::size_t((k + 1) * m + j)] =
          sol.eta[std::size_t(k * m + j)] + rho * w[k * m + j];
  double en = 0.0;
  for (int k = 0; k < N; ++k)
    en += 0.5 * dt *
          (u.segment(k * m, m).transpose() * dp.data.R[std::size_t(k)] *
           u.segment(k * m, m))(0, 0);
  sol.energy_part = en;
  sol.tv_part = discrete_tv(u, N, m);
  sol.objective = sol.energy_part + alpha * sol.tv_part;
  sol.kkt_residual =
      std::max({rp, rd, (C * u - b).cwiseAbs().maxCoeff() / scale});
  if (sol.kkt_residual > tol)
    throw OracleNonConvergence(
        "oracle ADMM did not reach tolerance after " +
            std::to_string(max_iter) + " iterations (residual " +
            std::to_string(sol.kkt_residual) + ")",
        sol);
  return sol;
}

/// ADMM with states retained (nonzero Q): the quadratic step is an
/// equality-constrained QP over (x_1..x_{N-1}, u_0..u_{N-1}) with the
/// dynamics as constraints, factored once per penalty value.
inline OracleSolution admm_states(const DiscretizedProblem& dp, double tol,
                                  int max_iter) {
  const int N = dp.n_steps, n = dp.n(), m = dp.m();
  const int nx = (N - 1) * n;  // interior states
  const int nu = N * m;
  const int nv = nx + nu;
  const int nc = N * n;  // dynamics rows (terminal pinned via last row block)
  const double alpha = dp.alpha.alpha;
  const double dt = dp.dt;

  // Constraint rows: k=0: x_1 - Bd_0 u_0 = Ad_0 x0
  //                  0<k<N-1: x_{k+1} - Ad_k x_k - Bd_k u_k = 0
  //                  k=N-1: -Ad x_{N-1} - Bd u_{N-1} = -xf
  auto xidx = [&](int k) { return (k - 1) * n; };          // state x_k, 1<=k<=N-1
  auto uidx = [&](int k) { return nx + k * m; };           // control u_k

  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(nc);
  for (int k = 0; k < N; ++k) {
    const auto& Adk = dp.Ad[std::size_t(k)];
    const auto& Bdk = dp.Bd[std::size_t(k)];
    const int row = k * n;
    if (k + 1 <= N - 1)
      for (int i = 0; i < n; ++i)
        trips.emplace_back(row + i, xidx(k + 1) + i, 1.0);
    else
      h.segment(row, n) -= dp.data.xf;  // x_N fixed
    if (k >= 1) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (Adk(i, j) != 0.0)
            trips.emplace_back(row + i, xidx(k) + j, -Adk(i, j));
    } else {
      h.segment(row, n) += Adk * dp.data.x0;
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        if (Bdk(i, j) != 0.0)
          trips.emplace_back(row + i, uidx(k) + j, -Bdk(i, j));
  }

  double rho = 1.0;
  Eigen::SparseMatrix<double> K(nv + nc, nv + nc);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> Kfac;
  auto refactor = [&]() {
    std::vector<Eigen::Triplet<double>> kt;
    for (int k = 1; k <= N - 1; ++k) {
      const auto& Qk = dp.data.Q[std::size_t(k)];
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double v = dt * Qk(i, j) + (i == j ? 1e-12 : 0.0);
          if (v != 0.0) kt.emplace_back(xidx(k) + i, xidx(k) + j, v);
        }
    }
    for (int k = 0; k < N; ++k) {
      const auto& Rk = dp.data.R[std::size_t(k)];
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          double v = dt * Rk(i, j) + (i == j ? rho : 0.0);
          if (v != 0.0) kt.emplace_back(uidx(k) + i, uidx(k) + j, v);
        }
    }
    for (const auto& t : trips) {
      kt.emplace_back(nv + t.row(), t.col(), t.value());
      kt.emplace_back(t.col(), nv + t.row(), t.value());
    }
    K.setFromTriplets(kt.begin(), kt.end());
    Kfac.compute(K);
    if (Kfac.info() != Eigen::Success)
      throw OracleInfeasible("state-retained KKT system is singular");
  };
  refactor();

  Eigen::VectorXd z = Eigen::VectorXd::Zero(nu);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(nu);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(nu);
  Eigen::VectorXd xsol = Eigen::VectorXd::Zero(nx);
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(nc);
  std::vector<double> chan(static_cast<std::size_t>(N), 0.0);

  double rp = 0.0, rd = 0.0;
  int it = 0;
  const double scale =
      std::max(1.0, std::max(dp.data.x0.cwiseAbs().maxCoeff(),
                             dp.data.xf.cwiseAbs().maxCoeff()));
  const double stop = tol * scale;
  for (it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + nc);
    rhs.segment(nx, nu) = rho * (z - w);
    rhs.tail(nc) = h;
    Eigen::VectorXd sol_v = Kfac.solve(rhs);
    xsol = sol_v.head(nx);
    u = sol_v.segment(nx, nu);
    lam = sol_v.tail(nc);

    Eigen::VectorXd z_old = z;
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < N; ++k) chan[std::size_t(k)] = u[k * m + j] + w[k * m + j];
      tv1d_denoise(chan, alpha / rho);
      for (int k = 0; k < N; ++k) z[k * m + j] = chan[std::size_t(k)];
    }
    w += u - z;
    rp = (u - z).cwiseAbs().maxCoeff();
    rd = rho * (z - z_old).cwiseAbs().maxCoeff();
    if (std::max(rp, rd) <= stop) break;
    if (it % 50 == 0) {
      if (rp > 10.0 * rd && rho < 1e8) {
        rho *= 2.0;
        w *= 0.5;
        refactor();
      } else if (rd > 10.0 * rp && rho > 1e-8) {
        rho *= 0.5;
        w *= 2.0;
        refactor();
      }
    }
  }

  OracleSolution sol;
  sol.iterations = std::min(it, max_iter);
  const Eigen::MatrixXd X = propagate(dp, u);
  sol.controls.assign(u.data(), u.data() + nu);
  sol.states.assign(X.data(), X.data() + X.size());
  sol.multipliers.assign(lam.data() + (nc - n), lam.data() + nc);
  sol.eta.assign(std::size_t((N + 1) * m), 0.0);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < N; ++k)
      sol.eta[std::size_t((k + 1) * m + j)] =
          sol.eta[std::size_t(k * m + j)] + rho * w[k * m + j];
  double en = 0.0;
  for (int k = 0; k < N; ++k) {
    en += 0.5 * dt *
          (u.segment(k * m, m).transpose() * dp.data.R[std::size_t(k)] *
           u.segment(k * m, m))(0, 0);
    const Eigen::VectorXd xk =
        (k == 0) ? dp.data.x0 : Eigen::VectorXd(X.col(k));
    en += 0.5 * dt *
          (xk.transpose() * dp.data.Q[std::size_t(k)] * xk)(0, 0);
  }
  sol.energy_part = en;
  sol.tv_part = discrete_tv(u, N, m);
  sol.objective = sol.energy_part + alpha * sol.tv_part;
  const double term_res =
      (X.col(N) - dp.data.xf).cwiseAbs().maxCoeff() / scale;
  sol.kkt_residual = std::max({rp, rd, term_res});
  if (sol.kkt_residual > tol) {
    if (term_res > 1e3 * std::max(rp, rd) && it >= max_iter)
      throw OracleInfeasible(
          "terminal state appears unreachable (primal residual stagnation)");
    throw OracleNonConvergence(
        "oracle ADMM (state-retained) did not reach tolerance (residual " +
            std::to_string(sol.kkt_residual) + ")",
        sol);
  }
  return sol;
}

}  // namespace detail_oracle

/// Solves the double-integrator transcription to global optimality of the
/// convex program; kkt_residual <= tol on return.
inline OracleSolution solve(const DiscretizedProblem& dp, double tol = 1e-9,
                            int max_iter = 400000) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve: tol must be positive");
  return detail_oracle::admm_eliminated(dp, tol, max_iter);
}

/// General LQPTV solve. States are eliminated when every Q sample vanishes
/// (the quadratic couples controls only), and retained otherwise.
inline OracleSolution solve_lqptv(const DiscretizedProblem& dp,
                                  double tol = 1e-9, int max_iter = 400000) {
  if (!(tol > 0.0))
    throw std::invalid_argument("solve_lqptv: tol must be positive");
  if (!dp.state_cost) return detail_oracle::admm_eliminated(dp, tol, max_iter);
  return detail_oracle::admm_states(dp, tol, max_iter);
}

/// Named residuals for a solution (not necessarily a converged one):
/// terminal feasibility, dynamics consistency of the stored states, and the
/// discrete counterpart of the switching-function conditions.
inline std::map<std::string, double> residual_report(
    const OracleSolution& sol, const DiscretizedProblem& dp,
    double step_tol = 1e-6) {
  const int N = dp.n_steps, n = dp.n(), m = dp.m();
  std::map<std::string, double> rep;
  Eigen::VectorXd u =
      Eigen::Map<const Eigen::VectorXd>(sol.controls.data(), N * m);
  const Eigen::MatrixXd X = detail_oracle::propagate(dp, u);
  rep["primal_terminal"] = (X.col(N) - dp.data.xf).cwiseAbs().maxCoeff();
  double dyn = 0.0;
  for (int k = 0; k <= N; ++k)
    for (int i = 0; i < n; ++i)
      dyn = std::max(dyn, std::abs(X(i, k) - sol.states[std::size_t(k * n + i)]));
  rep["dynamics"] = dyn;

  // Discrete adjoint conditions: |eta_k| <= alpha, eta_N = 0, and eta pinned
  // at +/- alpha across strict control steps.
  const double alpha = dp.alpha.alpha;
  double bound = 0.0, sign_res = 0.0;
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k <= N; ++k)
      bound = std::max(
          bound, std::abs(sol.eta[std::size_t(k * m + j)]) - alpha);
    for (int k = 0; k + 1 < N; ++k) {
      const double d = sol.controls[std::size_t((k + 1) * m + j)] -
                       sol.controls[std::size_t(k * m + j)];
      if (std::abs(d) > step_tol)
        sign_res = std::max(
            sign_res, std::abs(sol.eta[std::size_t((k + 1) * m + j)] -
                               (d > 0 ? -alpha : alpha)));
    }
  }
  rep["eta_bound"] = std::max(bound, 0.0);
  rep["eta_step_sign"] = sign_res;
  double eta_terminal = 0.0;
  for (int j = 0; j < m; ++j)
    eta_terminal =
        std::max(eta_terminal, std::abs(sol.eta[std::size_t(N * m + j)]));
  rep["eta_terminal"] = eta_terminal;
  rep["kkt"] = sol.kkt_residual;
  return rep;
}

/// JSON problem-file loader for the general form. Matrices are dense row
/// lists; A/B/Q/R accept a single sample or one per step.
inline DiscretizedProblem load_lqptv_json(const nlohmann::json& j) {
  LqptvData d;
  d.n = j.at("n").get<int>();
  d.m = j.at("m").get<int>();
  auto mats = [&](const char* key, int rows, int cols) {
    std::vector<Eigen::MatrixXd> out;
    const auto& node = j.at(key);
    auto one = [&](const nlohmann::json& mj) {
      Eigen::MatrixXd M(rows, cols);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) M(r, c) = mj.at(std::size_t(r)).at(std::size_t(c)).get<double>();
      return M;
    };
    const bool sample_list =
        node.is_array() && !node.empty() && node[0].is_array() &&
        !node[0].empty() && node[0][0].is_array();
    if (sample_list)
      for (const auto& mj : node) out.push_back(one(mj));
    else
      out.push_back(one(node));
    return out;
  };
  d.A = mats("A", d.n, d.n);
  d.B = mats("B", d.n, d.m);
  d.Q = mats("Q", d.n, d.n);
  d.R = mats("R", d.m, d.m);
  auto vec = [&](const char* key, int len) {
    Eigen::VectorXd v(len);
    for (int i = 0; i < len; ++i) v[i] = j.at(key).at(std::size_t(i)).get<double>();
    return v;
  };
  d.x0 = vec("x0", d.n);
  d.xf = vec("xf", d.n);
  const double a = j.at("alpha").get<double>();
  const int N = j.at("n_steps").get<int>();
  return discretize_lqptv(std::move(d), Weight(a), N);
}

/// CSV export: one row per grid point, t,u...,x...
inline void write_csv(std::ostream& os, const OracleSolution& sol,
                      const DiscretizedProblem& dp) {
  const int N = dp.n_steps, n = dp.n(), m = dp.m();
  os << "t";
  for (int j = 0; j < m; ++j) os << ",u" << j + 1;
  for (int i = 0; i < n; ++i) os << ",x" << i + 1;
  os << "\n";
  os.precision(17);
  for (int k = 0; k <= N; ++k) {
    os << double(k) * dp.dt;
    for (int j = 0; j < m; ++j)
      os << "," << sol.controls[std::size_t(std::min(k, N - 1) * m + j)];
    for (int i = 0; i < n; ++i) os << "," << sol.states[std::size_t(k * n + i)];
    os << "\n";
  }
}

}  // namespace tvoc
