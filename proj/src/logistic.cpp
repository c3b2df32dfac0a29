#include "imblr/logistic.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "imblr/error.hpp"
#include "imblr/kernels/kernels.hpp"

namespace imblr {

namespace {

constexpr double kSeparationNorm = 1e3;
constexpr int kMaxHalvings = 30;

Matrix centered(const Matrix& points, std::span<const double> xbar) {
  Matrix out = points;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] -= xbar[j];
  }
  return out;
}

struct Evaluation {
  double loss = 0.0;
  Vector grad;
  Matrix hess;
  double information = 0.0;  // sum p (1 - p)
};

// Accumulates softplus, p and p(1-p) moments over one block of centered
// points into the (alpha, beta) loss, gradient and Hessian.
void accumulate_block(const Matrix& u, double alpha, std::span<const double> beta, Evaluation& ev,
                      std::vector<double>& z, std::vector<double>& p, std::vector<double>& w) {
  const std::size_t rows = u.rows();
  if (rows == 0) return;
  const std::size_t d = u.cols();
  const kernels::KernelTable& kt = kernels::current();
  if (d == 1) {
    const kernels::LogisticSums s = kt.logistic_sums_1d(u.values(), alpha, beta[0]);
    ev.loss -= s.softplus;
    ev.grad[0] -= s.prob;
    ev.grad[1] -= s.prob_u;
    ev.hess(0, 0) -= s.weight;
    ev.hess(0, 1) -= s.weight_u;
    ev.hess(1, 1) -= s.weight_uu;
    ev.information += s.weight;
    return;
  }
  z.resize(rows);
  p.resize(rows);
  w.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) z[i] = alpha + dot(beta, u.row(i));
  ev.loss -= kt.logistic_terms(z, p, w);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto ui = u.row(i);
    ev.grad[0] -= p[i];
    ev.hess(0, 0) -= w[i];
    ev.information += w[i];
    for (std::size_t a = 0; a < d; ++a) {
      ev.grad[a + 1] -= p[i] * ui[a];
      const double wa = w[i] * ui[a];
      ev.hess(0, a + 1) -= wa;
      for (std::size_t b = a; b < d; ++b) ev.hess(a + 1, b + 1) -= wa * ui[b];
    }
  }
}

Evaluation evaluate(const LogisticData& data, double alpha, std::span<const double> beta) {
  const std::size_t d = data.dim();
  if (beta.size() != d) {
    throw Error(ErrorCode::InvalidArgument, "beta has the wrong dimension");
  }
  Evaluation ev;
  ev.grad.assign(d + 1, 0.0);
  ev.hess = Matrix(d + 1, d + 1);
  const double n = static_cast<double>(data.minority_count());
  ev.loss = n * alpha;
  ev.grad[0] = n;
  std::vector<double> z, p, w;
  accumulate_block(data.centered_minority(), alpha, beta, ev, z, p, w);
  accumulate_block(data.centered_majority(), alpha, beta, ev, z, p, w);
  for (std::size_t a = 0; a <= d; ++a)
    for (std::size_t b = a + 1; b <= d; ++b) ev.hess(b, a) = ev.hess(a, b);
  return ev;
}

[[noreturn]] void separation(const std::string& why) {
  throw Error(ErrorCode::SeparationSuspected,
              why + "; the classes may be linearly separable so no finite maximizer exists");
}

}  // namespace

LogisticData::LogisticData(const Matrix& majority, MinoritySample minority)
    : minority_(std::move(minority)) {
  if (majority.rows() == 0) {
    throw Error(ErrorCode::EmptyInput, "logistic data needs at least one majority point");
  }
  if (majority.cols() != minority_.dim()) {
    throw Error(ErrorCode::InvalidArgument, "majority and minority dimensions differ");
  }
  for (double v : majority.values()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "majority features must be finite");
  }
  majority_ = centered(majority, minority_.mean());
  minority_centered_ = centered(minority_.points(), minority_.mean());
}

double log_loss(const LogisticData& data, double alpha, std::span<const double> beta) {
  return evaluate(data, alpha, beta).loss;
}

Vector gradient(const LogisticData& data, double alpha, std::span<const double> beta) {
  return evaluate(data, alpha, beta).grad;
}

Matrix hessian(const LogisticData& data, double alpha, std::span<const double> beta) {
  return evaluate(data, alpha, beta).hess;
}

FitResult fit(const LogisticData& data, const FitOptions& options) {
  const std::size_t d = data.dim();
  const double n = static_cast<double>(data.minority_count());
  const double big_n = static_cast<double>(data.majority_count());

  FitResult result;
  result.N = data.majority_count();
  result.n = data.minority_count();
  double alpha = std::log(n / big_n);
  Vector beta(d, 0.0);
  Evaluation ev = evaluate(data, alpha, beta);

  Vector step(d + 1);
  Vector trial_beta(d);
  int halvings_used = 0;
  for (int it = 0;; ++it) {
    const double gnorm = norm2(ev.grad);
    if (options.observer) {
      options.observer(FitIterate{it, alpha, beta, ev.loss, gnorm, ev.hess, halvings_used});
    }
    if (gnorm < options.tol) {
      if (ev.information < 1e-8 * n) {
        separation("fitted probabilities saturated at 0/1");
      }
      result.alpha = alpha;
      result.beta = beta;
      result.iterations = it;
      result.grad_norm = gnorm;
      result.converged = true;
      return result;
    }
    if (it >= options.max_iter) {
      std::ostringstream os;
      os << "Newton did not converge in " << options.max_iter << " iterations (|grad| = " << gnorm
         << ")";
      throw Error(ErrorCode::MaxIterations, os.str());
    }

    Matrix neg(d + 1, d + 1);
    for (std::size_t a = 0; a <= d; ++a)
      for (std::size_t b = 0; b <= d; ++b) neg(a, b) = -ev.hess(a, b);
    Matrix chol;
    try {
      chol = cholesky(SpdMatrix(std::move(neg)));
    } catch (const Error& e) {
      separation(std::string("Hessian solve failed (") + e.what() + ")");
    }
    step = cholesky_solve(chol, ev.grad);
    const double predicted = dot(ev.grad, step);
    // Changes below this are indistinguishable from rounding in the loss.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(ev.loss));

    double t = 1.0;
    bool accepted = false;
    Evaluation next;
    double next_alpha = alpha;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      next_alpha = alpha + t * step[0];
      for (std::size_t j = 0; j < d; ++j) trial_beta[j] = beta[j] + t * step[j + 1];
      next = evaluate(data, next_alpha, trial_beta);
      if (next.loss >= ev.loss || (t * predicted <= noise && next.loss >= ev.loss - noise)) {
        accepted = true;
        halvings_used = h;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      std::ostringstream os;
      os << "line search stalled at |grad| = " << gnorm;
      throw Error(ErrorCode::MaxIterations, os.str());
    }
    alpha = next_alpha;
    beta = trial_beta;
    ev = std::move(next);
    if (norm2(beta) > kSeparationNorm) {
      std::ostringstream os;
      os << "|beta| grew past " << kSeparationNorm;
      separation(os.str());
    }
  }
}

}  // namespace imblr
