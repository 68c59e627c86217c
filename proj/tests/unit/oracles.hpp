#pragma once

// Test-side oracles, independent of the library's computation paths.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace oracles {

// composite Simpson on [a, b] with n (even) intervals
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int k = 1; k < n; ++k) acc += f(a + k * h) * (k % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

inline double normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

// KL( N(mu_p, sig_p^2) || N(mu_q, sig_q^2) ) by quadrature of p ln(p/q)
inline double kl_quadrature(double mu_p, double sig_p, double mu_q, double sig_q) {
  const double lo = mu_p - 14.0 * sig_p;
  const double hi = mu_p + 14.0 * sig_p;
  auto integrand = [&](double x) {
    const double p = normal_pdf(x, mu_p, sig_p);
    if (p <= 0.0) return 0.0;
    const double q = normal_pdf(x, mu_q, sig_q);
    return p * (std::log(p) - std::log(q));
  };
  return simpson(integrand, lo, hi, 20000);
}

// ln of a density value recovered through quadrature normalization: evaluates
// exp(-(x-mu)^2 / (2 sigma^2)) and divides by its integral.
inline double lognormal_density_via_quadrature(double x, double mu, double sigma) {
  auto kernel = [&](double t) {
    const double z = (t - mu) / sigma;
    return std::exp(-0.5 * z * z);
  };
  const double norm = simpson(kernel, mu - 14.0 * sigma, mu + 14.0 * sigma, 20000);
  return -0.5 * std::pow((x - mu) / sigma, 2) - std::log(norm);
}

// textbook Pearson correlation
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// single GRU recurrence step, scalar loops only
inline Eigen::VectorXd gru_step_by_hand(const Eigen::VectorXd& x, const Eigen::VectorXd& h,
                                        const Eigen::MatrixXd& w_x, const Eigen::MatrixXd& w_h,
                                        const Eigen::VectorXd& b_r, const Eigen::VectorXd& b_z,
                                        const Eigen::VectorXd& b_n) {
  const int H = static_cast<int>(h.size());
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  Eigen::VectorXd out(H);
  for (int k = 0; k < H; ++k) {
    double ur = 0, uz = 0, un = 0, wr = 0, wz = 0, wn = 0;
    for (int c = 0; c < x.size(); ++c) {
      ur += x(c) * w_x(c, k);
      uz += x(c) * w_x(c, H + k);
      un += x(c) * w_x(c, 2 * H + k);
    }
    for (int c = 0; c < H; ++c) {
      wr += h(c) * w_h(c, k);
      wz += h(c) * w_h(c, H + k);
      wn += h(c) * w_h(c, 2 * H + k);
    }
    const double r = sig(ur + wr + b_r(k));
    const double z = sig(uz + wz + b_z(k));
    const double nn = std::tanh(un + r * wn + b_n(k));
    out(k) = (1.0 - z) * nn + z * h(k);
  }
  return out;
}

// relative error used by every finite-difference comparison
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)});
}

}  // namespace oracles
