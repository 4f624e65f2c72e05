#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "evotrend/config.hpp"
#include "evotrend/hash.hpp"
#include "evotrend/random.hpp"

namespace evotrend {

enum class NeuronFilter { All, Input, Processing };

inline std::string to_string(NeuronFilter f) {
  switch (f) {
    case NeuronFilter::All: return "all";
    case NeuronFilter::Input: return "input";
    case NeuronFilter::Processing: return "processing";
  }
  return "all";
}

inline NeuronFilter parse_neuron_filter(std::string_view s) {
  if (s == "all") return NeuronFilter::All;
  if (s == "input") return NeuronFilter::Input;
  if (s == "processing") return NeuronFilter::Processing;
  throw ConfigError("unknown neuron filter: " + std::string(s));
}

// Raw lifetime recording of one agent: T rows (one per living step) by
// n_total neuron columns, with a per-column input flag.
struct TraceRecording {
  std::uint32_t agent_id = 0;
  std::uint32_t birth_step = 0;
  std::uint32_t death_step = 0;
  std::uint16_t n_total = 0;
  std::uint16_t n_input = 0;
  std::vector<std::uint8_t> is_input;  // per column
  Eigen::MatrixXf data;                // T x n_total

  std::uint32_t samples() const { return static_cast<std::uint32_t>(data.rows()); }
};

// Column-filtered, jittered trace ready for covariance work.
struct ActivationTrace {
  std::uint32_t agent_id = 0;
  NeuronFilter filter = NeuronFilter::Processing;
  Eigen::MatrixXd data;  // T x n
  bool valid = false;
  std::string reason;
};

// Selects columns by role and adds tiny i.i.d. Gaussian jitter to break the
// exact degeneracies (saturated constant columns) that make covariance
// determinants vanish. Traces with too few samples for a full-rank
// covariance are marked invalid rather than failing the pipeline.
inline ActivationTrace build_trace(const TraceRecording& rec, NeuronFilter filter,
                                   double jitter_sigma, std::uint64_t jitter_seed,
                                   int min_samples_floor = 20) {
  ActivationTrace out;
  out.agent_id = rec.agent_id;
  out.filter = filter;
  std::vector<int> cols;
  for (int c = 0; c < rec.n_total; ++c) {
    const bool input = rec.is_input[static_cast<std::size_t>(c)] != 0;
    if (filter == NeuronFilter::All || (filter == NeuronFilter::Input && input) ||
        (filter == NeuronFilter::Processing && !input))
      cols.push_back(c);
  }
  const auto T = static_cast<Eigen::Index>(rec.data.rows());
  const auto n = static_cast<Eigen::Index>(cols.size());
  if (n == 0) {
    out.reason = "no columns";
    return out;
  }
  if (T < std::max<Eigen::Index>(2 * n, min_samples_floor)) {
    out.reason = "insufficient samples";
    return out;
  }
  out.data.resize(T, n);
  RandomStream jitter(jitter_seed);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < T; ++i)
      out.data(i, j) = static_cast<double>(rec.data(i, cols[static_cast<std::size_t>(j)])) +
                       (jitter_sigma > 0 ? jitter.gaussian(0.0, jitter_sigma) : 0.0);
  out.valid = true;
  return out;
}

struct CovarianceModel {
  Eigen::MatrixXd cov;
  Eigen::VectorXd mean;
  int samples = 0;

  int dim() const { return static_cast<int>(cov.rows()); }
};

inline CovarianceModel covariance_from_trace(const ActivationTrace& trace) {
  CovarianceModel m;
  const auto T = trace.data.rows();
  m.samples = static_cast<int>(T);
  m.mean = trace.data.colwise().mean();
  Eigen::MatrixXd centered = trace.data.rowwise() - m.mean.transpose();
  m.cov = (centered.adjoint() * centered) / static_cast<double>(T - 1);
  return m;
}

inline constexpr double kLog2TwoPiE = 4.094191289364457;  // log2(2*pi*e)

// Differential entropy of a Gaussian with the given covariance, in bits:
// H = 1/2 * log2((2*pi*e)^k * det(cov)). Returns NaN when the matrix is not
// positive definite (degenerate trace the jitter failed to cure).
inline double gaussian_entropy_bits(const Eigen::MatrixXd& cov) {
  const auto k = cov.rows();
  if (k == 0) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    return std::numeric_limits<double>::quiet_NaN();
  double log2_det = 0.0;
  const auto& L = llt.matrixLLT();
  for (Eigen::Index i = 0; i < k; ++i) {
    const double d = L(i, i);
    if (!(d > 0.0) || !std::isfinite(d))
      return std::numeric_limits<double>::quiet_NaN();
    log2_det += 2.0 * std::log2(d);
  }
  return 0.5 * (static_cast<double>(k) * kLog2TwoPiE + log2_det);
}

inline Eigen::MatrixXd submatrix(const Eigen::MatrixXd& cov,
                                 const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()),
                      static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          cov(idx[i], idx[j]);
  return out;
}

inline double subset_entropy_bits(const Eigen::MatrixXd& cov,
                                  const std::vector<int>& idx) {
  if (idx.empty()) return 0.0;
  return gaussian_entropy_bits(submatrix(cov, idx));
}

// Multivariate mutual information: I(X) = sum_i H(x_i) - H(X).
inline double integration_bits(const CovarianceModel& m) {
  const int n = m.dim();
  double sum_marginals = 0.0;
  for (int i = 0; i < n; ++i) {
    const double var = m.cov(i, i);
    if (!(var > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    sum_marginals += 0.5 * (kLog2TwoPiE + std::log2(var));
  }
  return sum_marginals - gaussian_entropy_bits(m.cov);
}

// Full-enumeration complexity: sum over subset sizes k of the ensemble
// average entropy over all (n choose k) subsets minus (k/n) H(X). Cost grows
// as 2^n, so callers gate on exact_limit.
inline std::optional<double> complexity_exact_bits(const CovarianceModel& m,
                                                   int exact_limit) {
  const int n = m.dim();
  if (n > exact_limit) return std::nullopt;
  const double h_full = gaussian_entropy_bits(m.cov);
  if (!std::isfinite(h_full)) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> sum_h(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> count(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(n));
  const std::uint32_t total = 1u << n;
  for (std::uint32_t mask = 1; mask < total; ++mask) {
    idx.clear();
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    const auto k = idx.size();
    const double h = k == static_cast<std::size_t>(n)
                         ? h_full
                         : subset_entropy_bits(m.cov, idx);
    if (!std::isfinite(h)) return std::numeric_limits<double>::quiet_NaN();
    sum_h[k] += h;
    count[k] += 1.0;
  }
  double c = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double avg = sum_h[static_cast<std::size_t>(k)] /
                       count[static_cast<std::size_t>(k)];
    c += avg - (static_cast<double>(k) / n) * h_full;
  }
  return c;
}

// Leave-one-out approximation, computed through the identity
// C = sum_i H(X - x_i) - (n - 1) H(X): n leave-one-out determinants plus one
// full determinant.
inline double complexity_approx_bits(const CovarianceModel& m) {
  const int n = m.dim();
  if (n <= 1) return 0.0;
  const double h_full = gaussian_entropy_bits(m.cov);
  if (!std::isfinite(h_full)) return std::numeric_limits<double>::quiet_NaN();
  double sum_loo = 0.0;
  std::vector<int> idx(static_cast<std::size_t>(n) - 1);
  for (int drop = 0; drop < n; ++drop) {
    int w = 0;
    for (int i = 0; i < n; ++i)
      if (i != drop) idx[static_cast<std::size_t>(w++)] = i;
    const double h = subset_entropy_bits(m.cov, idx);
    if (!std::isfinite(h)) return std::numeric_limits<double>::quiet_NaN();
    sum_loo += h;
  }
  return sum_loo - static_cast<double>(n - 1) * h_full;
}

struct ComplexityReport {
  std::uint32_t agent_id = 0;
  std::uint32_t death_step = 0;
  NeuronFilter filter = NeuronFilter::Processing;
  int n = 0;
  int samples = 0;
  double c_approx = 0.0;
  std::optional<double> c_exact;
  double integration = 0.0;
  double entropy = 0.0;
  bool valid = false;
  std::string reason;
};

inline std::uint64_t trace_jitter_seed(std::uint32_t agent_id, NeuronFilter f) {
  std::uint64_t h = fnv1a64("trace-jitter");
  h = fnv1a64_mix(h, agent_id);
  h = fnv1a64_mix(h, static_cast<std::uint64_t>(f));
  return h;
}

inline ComplexityReport compute_report(const TraceRecording& rec,
                                       NeuronFilter filter,
                                       const ComplexityConfig& cfg) {
  ComplexityReport r;
  r.agent_id = rec.agent_id;
  r.death_step = rec.death_step;
  r.filter = filter;
  ActivationTrace trace = build_trace(rec, filter, cfg.jitter_sigma,
                                      trace_jitter_seed(rec.agent_id, filter),
                                      cfg.min_samples_floor);
  if (!trace.valid) {
    r.reason = trace.reason;
    return r;
  }
  const CovarianceModel model = covariance_from_trace(trace);
  r.n = model.dim();
  r.samples = model.samples;
  r.entropy = gaussian_entropy_bits(model.cov);
  r.integration = integration_bits(model);
  r.c_approx = complexity_approx_bits(model);
  r.c_exact = complexity_exact_bits(model, cfg.exact_limit);
  if (r.c_exact && !std::isfinite(*r.c_exact)) r.c_exact.reset();
  if (!std::isfinite(r.entropy) || !std::isfinite(r.integration) ||
      !std::isfinite(r.c_approx)) {
    r.reason = "degenerate covariance";
    return r;
  }
  if (r.c_approx < -1e-6) {
    r.reason = "negative complexity";
    return r;
  }
  r.valid = true;
  return r;
}

}  // namespace evotrend
