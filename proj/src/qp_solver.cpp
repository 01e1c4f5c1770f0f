#include "aacc/qp_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace aacc {

namespace {

struct InequalitySet {
  Eigen::MatrixXd g;  ///< rows: g z <= h
  Eigen::VectorXd h;
};

// One-sided rows for the input box and the two-sided speed constraint.
InequalitySet stack_inequalities(const QpProblem& p, bool include_speed) {
  const int nz = p.dim();
  const int nu = p.input_dim();
  const int off = nz - nu;
  const int n_speed = include_speed ? static_cast<int>(p.speed_rows.rows()) : 0;
  InequalitySet s;
  s.g = Eigen::MatrixXd::Zero(2 * nu + 2 * n_speed, nz);
  s.h = Eigen::VectorXd::Zero(2 * nu + 2 * n_speed);
  for (int i = 0; i < nu; ++i) {
    s.g(2 * i, off + i) = 1.0;
    s.h(2 * i) = p.input_upper(i);
    s.g(2 * i + 1, off + i) = -1.0;
    s.h(2 * i + 1) = -p.input_lower(i);
  }
  for (int i = 0; i < n_speed; ++i) {
    s.g.row(2 * nu + 2 * i).segment(off, nu) = p.speed_rows.row(i);
    s.h(2 * nu + 2 * i) = p.speed_upper(i);
    s.g.row(2 * nu + 2 * i + 1).segment(off, nu) = -p.speed_rows.row(i);
    s.h(2 * nu + 2 * i + 1) = -p.speed_lower(i);
  }
  return s;
}

struct ReducedProblem {
  Eigen::MatrixXd h;       // reduced Hessian
  Eigen::VectorXd g;       // reduced gradient
  Eigen::MatrixXd a_ineq;  // reduced inequality rows
  Eigen::VectorXd b_ineq;
  Eigen::MatrixXd basis;   // z = z_part + basis * y
  Eigen::VectorXd z_part;
};

// Primal active-set method for a strictly convex reduced QP starting from a
// feasible y0. Returns false if the iteration limit is hit.
bool active_set(const ReducedProblem& rp, Eigen::VectorXd& y, int& iters) {
  const int ny = static_cast<int>(rp.h.rows());
  const int mi = static_cast<int>(rp.a_ineq.rows());
  constexpr double kFeasTol = 1e-9;
  constexpr double kZeroStep = 1e-11;
  constexpr int kMaxIters = 500;

  std::vector<int> working;
  Eigen::VectorXd slack = rp.b_ineq - rp.a_ineq * y;
  for (int i = 0; i < mi; ++i) {
    if (slack(i) < kFeasTol &&
        static_cast<int>(working.size()) < ny) {
      working.push_back(i);
    }
  }

  for (iters = 0; iters < kMaxIters; ++iters) {
    const int mw = static_cast<int>(working.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(ny + mw, ny + mw);
    kkt.topLeftCorner(ny, ny) = rp.h;
    for (int i = 0; i < mw; ++i) {
      kkt.block(ny + i, 0, 1, ny) = rp.a_ineq.row(working[i]);
      kkt.block(0, ny + i, ny, 1) = rp.a_ineq.row(working[i]).transpose();
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ny + mw);
    rhs.head(ny) = -(rp.h * y + rp.g);
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    if (!sol.allFinite()) {
      return false;
    }
    const Eigen::VectorXd p = sol.head(ny);
    const Eigen::VectorXd lambda = sol.tail(mw);

    if (p.lpNorm<Eigen::Infinity>() < kZeroStep) {
      int drop = -1;
      double most_negative = -1e-10;
      for (int i = 0; i < mw; ++i) {
        if (lambda(i) < most_negative) {
          most_negative = lambda(i);
          drop = i;
        }
      }
      if (drop < 0) {
        return true;  // KKT satisfied
      }
      working.erase(working.begin() + drop);
      continue;
    }

    // Ratio test against inactive rows.
    double alpha = 1.0;
    int blocker = -1;
    for (int i = 0; i < mi; ++i) {
      if (std::find(working.begin(), working.end(), i) != working.end()) {
        continue;
      }
      const double adir = rp.a_ineq.row(i).dot(p);
      if (adir > 1e-14) {
        const double gap = rp.b_ineq(i) - rp.a_ineq.row(i).dot(y);
        const double ratio = gap / adir;
        if (ratio < alpha) {
          alpha = ratio;
          blocker = i;
        }
      }
    }
    y += std::max(alpha, 0.0) * p;
    if (blocker >= 0) {
      // Coincident bounds (a box row and a speed row can be parallel at
      // exactly matching limits) would make the working set rank deficient;
      // keep only independent rows.
      Eigen::MatrixXd rows(working.size() + 1, ny);
      for (size_t i = 0; i < working.size(); ++i) {
        rows.row(static_cast<int>(i)) = rp.a_ineq.row(working[i]);
      }
      rows.row(static_cast<int>(working.size())) = rp.a_ineq.row(blocker);
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(rows);
      qr.setThreshold(1e-10);
      if (qr.rank() == static_cast<Eigen::Index>(working.size()) + 1) {
        working.push_back(blocker);
      }
    }
  }
  return false;
}

QpSolution solve_normalized(const Eigen::MatrixXd& hessian,
                            const Eigen::VectorXd& linear, double constant,
                            const Eigen::MatrixXd& eq_lhs,
                            const InequalitySet& ineq,
                            const Eigen::VectorXd& start) {
  QpSolution out;
  const int nz = static_cast<int>(hessian.rows());

  ReducedProblem rp;
  if (eq_lhs.rows() > 0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(eq_lhs);
    lu.setThreshold(1e-10);
    rp.basis = lu.kernel();
    rp.z_part = start;  // feasible for the equalities by contract
  } else {
    rp.basis = Eigen::MatrixXd::Identity(nz, nz);
    rp.z_part = Eigen::VectorXd::Zero(nz);
  }
  const int ny = static_cast<int>(rp.basis.cols());
  rp.h = rp.basis.transpose() * hessian * rp.basis;
  rp.h = 0.5 * (rp.h + rp.h.transpose());
  // Tiny ridge keeps the reduced system factorizable when the cost is flat
  // along some null-space direction.
  rp.h += 1e-12 * Eigen::MatrixXd::Identity(ny, ny);
  rp.g = rp.basis.transpose() * (hessian * rp.z_part + linear);
  rp.a_ineq = ineq.g * rp.basis;
  rp.b_ineq = ineq.h - ineq.g * rp.z_part;

  Eigen::VectorXd y = Eigen::VectorXd::Zero(ny);  // start point itself
  int iters = 0;
  if (!active_set(rp, y, iters)) {
    out.status = SolveStatus::kFailed;
    return out;
  }
  out.z = rp.z_part + rp.basis * y;
  out.iterations = iters;
  out.objective =
      0.5 * out.z.dot(hessian * out.z) + linear.dot(out.z) + constant;

  // Stationarity residual projected on the feasible directions: multipliers
  // of active inequalities are recovered by least squares.
  Eigen::VectorXd grad = hessian * out.z + linear;
  std::vector<int> active;
  const Eigen::VectorXd slack = ineq.h - ineq.g * out.z;
  for (int i = 0; i < slack.size(); ++i) {
    if (slack(i) < 1e-7) {
      active.push_back(i);
    }
  }
  Eigen::MatrixXd at(nz, static_cast<int>(active.size()) + eq_lhs.rows());
  for (size_t i = 0; i < active.size(); ++i) {
    at.col(static_cast<int>(i)) = ineq.g.row(active[i]).transpose();
  }
  if (eq_lhs.rows() > 0) {
    at.rightCols(eq_lhs.rows()) = eq_lhs.transpose();
  }
  if (at.cols() > 0) {
    const Eigen::VectorXd mult =
        at.colPivHouseholderQr().solve(-grad);
    out.kkt_residual = (grad + at * mult).lpNorm<Eigen::Infinity>();
  } else {
    out.kkt_residual = grad.lpNorm<Eigen::Infinity>();
  }
  out.status = SolveStatus::kOptimal;
  return out;
}

}  // namespace

QpSolution solve(const QpProblem& problem) {
  const auto t0 = std::chrono::steady_clock::now();
  const int nz = problem.dim();
  const int nu = problem.input_dim();
  const int off = nz - nu;

  Eigen::VectorXd start = problem.feasible_start.size() == nz
                              ? problem.feasible_start
                              : Eigen::VectorXd::Zero(nz);

  // Check the speed rows at the start point; the box and equalities are the
  // caller's contract.
  bool speed_feasible = true;
  if (problem.speed_rows.rows() > 0) {
    const Eigen::VectorXd su = problem.speed_rows * start.segment(off, nu);
    for (int i = 0; i < su.size(); ++i) {
      if (su(i) > problem.speed_upper(i) + 1e-9 ||
          su(i) < problem.speed_lower(i) - 1e-9) {
        speed_feasible = false;
        break;
      }
    }
  }

  QpSolution out;
  if (speed_feasible) {
    const InequalitySet ineq = stack_inequalities(problem, true);
    out = solve_normalized(problem.hessian, problem.linear, problem.constant,
                           problem.eq_lhs, ineq, start);
  } else {
    // Relax the speed rows with slack variables s >= 0 penalized
    // quadratically; the input box stays hard.
    const int ns = 2 * static_cast<int>(problem.speed_rows.rows());
    const int nze = nz + ns;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(nze, nze);
    h.topLeftCorner(nz, nz) = problem.hessian;
    h.bottomRightCorner(ns, ns) =
        2.0 * kSoftSpeedPenalty * Eigen::MatrixXd::Identity(ns, ns);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(nze);
    q.head(nz) = problem.linear;
    Eigen::MatrixXd eq = Eigen::MatrixXd::Zero(problem.eq_lhs.rows(), nze);
    eq.leftCols(nz) = problem.eq_lhs;

    const InequalitySet base = stack_inequalities(problem, false);
    const int n_speed = static_cast<int>(problem.speed_rows.rows());
    InequalitySet ineq;
    ineq.g = Eigen::MatrixXd::Zero(base.g.rows() + 2 * n_speed + ns, nze);
    ineq.h = Eigen::VectorXd::Zero(ineq.g.rows());
    ineq.g.topLeftCorner(base.g.rows(), nz) = base.g;
    ineq.h.head(base.g.rows()) = base.h;
    int row = static_cast<int>(base.g.rows());
    for (int i = 0; i < n_speed; ++i) {
      ineq.g.row(row).segment(off, nu) = problem.speed_rows.row(i);
      ineq.g(row, nz + 2 * i) = -1.0;  // upper side slack
      ineq.h(row) = problem.speed_upper(i);
      ++row;
      ineq.g.row(row).segment(off, nu) = -problem.speed_rows.row(i);
      ineq.g(row, nz + 2 * i + 1) = -1.0;  // lower side slack
      ineq.h(row) = -problem.speed_lower(i);
      ++row;
    }
    for (int i = 0; i < ns; ++i) {
      ineq.g(row, nz + i) = -1.0;  // s >= 0
      ineq.h(row) = 0.0;
      ++row;
    }

    Eigen::VectorXd start_e = Eigen::VectorXd::Zero(nze);
    start_e.head(nz) = start;
    const Eigen::VectorXd su = problem.speed_rows * start.segment(off, nu);
    for (int i = 0; i < n_speed; ++i) {
      start_e(nz + 2 * i) = std::max(0.0, su(i) - problem.speed_upper(i));
      start_e(nz + 2 * i + 1) = std::max(0.0, problem.speed_lower(i) - su(i));
    }
    out = solve_normalized(h, q, problem.constant, eq, ineq, start_e);
    if (out.status == SolveStatus::kOptimal) {
      out.status = SolveStatus::kInfeasibleRelaxed;
      out.z = out.z.head(nz).eval();
      out.objective = 0.5 * out.z.dot(problem.hessian * out.z) +
                      problem.linear.dot(out.z) + problem.constant;
    }
  }
  out.solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

}  // namespace aacc
