#include "mfu/dci.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "mfu/errors.hpp"

namespace mfu::dci {

namespace {

constexpr double kJitter = 1e-10;

}  // namespace

std::vector<double> unravel(std::span<const cplx> lambda) {
  const std::size_t nk = lambda.size();
  std::vector<double> z(2 * nk);
  for (std::size_t k = 0; k < nk; ++k) {
    const double re = -lambda[k].real(), im = -lambda[k].imag();
    if (!(re > 0.0) || !(im > 0.0))
      throw DomainError("eigenvalue " + std::to_string(k + 1) + " has a non-negative real or imaginary part");
    z[k] = std::log(re);
    z[nk + k] = std::log(im);
  }
  return z;
}

std::vector<cplx> ravel(std::span<const double> z) {
  if (z.size() % 2 != 0) throw ArgumentError("unravelled eigenvalues must have even length");
  const std::size_t nk = z.size() / 2;
  std::vector<cplx> lam(nk + 1);
  for (std::size_t k = 0; k < nk; ++k) lam[k + 1] = {-std::exp(z[k]), -std::exp(z[nk + k])};
  return lam;
}

InitialFit fit_initial_mvn(const std::vector<std::vector<cplx>>& samples) {
  if (samples.empty()) throw ArgumentError("fit_initial_mvn needs samples");
  const std::size_t dim = 2 * samples.front().size();
  if (samples.size() < dim + 1) throw ArgumentError("fit_initial_mvn needs at least dim + 1 samples");
  Eigen::MatrixXd z(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (2 * samples[i].size() != dim) throw ArgumentError("eigenvalue rows must have equal length");
    const auto row = unravel(samples[i]);
    for (std::size_t j = 0; j < dim; ++j) z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  InitialFit fit;
  fit.mvn.mean = z.colwise().mean();
  const Eigen::MatrixXd centered = z.rowwise() - fit.mvn.mean.transpose();
  Eigen::MatrixXd cov = (centered.adjoint() * centered) / static_cast<double>(z.rows() - 1);
  cov = 0.5 * (cov + cov.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov.diagonal().array() += kJitter;
    fit.jitter = kJitter;
    fit.regularized = true;
  }
  fit.mvn.covariance = std::move(cov);
  return fit;
}

std::vector<std::vector<cplx>> fractional_eigenvalues(const Matrix& nu_alpha, std::size_t nk, double lx) {
  if (nu_alpha.cols() != 2) throw ArgumentError("expected (nu_m, alpha) columns");
  std::vector<std::vector<cplx>> out(static_cast<std::size_t>(nu_alpha.rows()));
  for (Eigen::Index i = 0; i < nu_alpha.rows(); ++i) {
    auto lam = transport::dispersion_eigenvalues(transport::Fractional{nu_alpha(i, 0), nu_alpha(i, 1)}, nk, lx);
    out[static_cast<std::size_t>(i)].assign(lam.begin() + 1, lam.end());
  }
  return out;
}

std::string DciUpdate::diagnostics_json() const {
  nlohmann::ordered_json j;
  j["acceptance_rate"] = acceptance_rate;
  j["accepted"] = accepted_rows.size();
  j["mean_ratio"] = mean_ratio;
  j["max_ratio"] = max_ratio;
  j["M"] = m;
  j["target_bandwidth"] = target_bandwidth;
  j["predict_bandwidth"] = predict_bandwidth;
  j["warnings"] = warnings;
  return j.dump(2);
}

DciUpdate dci_update(std::span<const double> target, std::span<const double> predict, const SampleMatrix& proposals,
                     std::span<const double> q, std::uint64_t seed, const DciOptions& opt) {
  if (target.size() < 100 || predict.size() < 100)
    throw ArgumentError("target and predict KDEs need at least 100 samples each");
  if (q.size() != proposals.rows()) throw ArgumentError("one QoI value per proposal is required");
  if (!(opt.safety >= 1.0)) throw ArgumentError("safety factor must be >= 1");
  const auto kt = sampling::kde_fit(target, opt.target_bandwidth);
  const auto kp = sampling::kde_fit(predict, opt.predict_bandwidth);
  const auto dt = kernels::kde_eval_many(kt.samples, kt.bandwidth, q);
  const auto dp = kernels::kde_eval_many(kp.samples, kp.bandwidth, q);

  DciUpdate up;
  up.target_bandwidth = kt.bandwidth;
  up.predict_bandwidth = kp.bandwidth;
  if (kt.bandwidth != kp.bandwidth) {
    std::ostringstream os;
    os << "target and predict bandwidths differ (" << kt.bandwidth << " vs " << kp.bandwidth << ")";
    up.warnings.push_back(os.str());
  }

  std::vector<double> r(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    r[i] = dt[i] == 0.0 ? 0.0 : dt[i] / dp[i];
    if (!std::isfinite(r[i])) {
      std::ostringstream os;
      os << "density ratio is not finite at proposal " << i << " (q = " << q[i]
         << "): predict density underflows where the target has mass";
      throw NumericalError(os.str());
    }
  }
  up.max_ratio = *std::max_element(r.begin(), r.end());
  if (!(up.max_ratio > 0.0))
    throw NumericalError("target density underflows at every proposal: target and predict supports do not overlap");
  up.mean_ratio = kernels::pairwise_sum(r) / static_cast<double>(r.size());
  up.m = opt.safety * up.max_ratio;

  for (std::size_t i = 0; i < r.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    if (rng.uniform() < r[i] / up.m) up.accepted_rows.push_back(i);
  }
  up.accepted = {Matrix(static_cast<Eigen::Index>(up.accepted_rows.size()), static_cast<Eigen::Index>(proposals.cols())),
                 proposals.names, seed};
  for (std::size_t a = 0; a < up.accepted_rows.size(); ++a) {
    up.accepted.values.row(static_cast<Eigen::Index>(a)) =
        proposals.values.row(static_cast<Eigen::Index>(up.accepted_rows[a]));
    up.accepted_qoi.push_back(q[up.accepted_rows[a]]);
  }
  up.acceptance_rate = static_cast<double>(up.accepted_rows.size()) / static_cast<double>(r.size());
  if (up.acceptance_rate < opt.warn_rate) up.warnings.push_back("acceptance rate below 1%");
  return up;
}

DciUpdate dci_update(std::span<const double> target, std::span<const double> predict, const SampleMatrix& proposals,
                     const kernels::RowModel& qoi, std::uint64_t seed, const DciOptions& opt) {
  const auto q = kernels::evaluate_rows(proposals.values, qoi);
  return dci_update(target, predict, proposals, q, seed, opt);
}

}  // namespace mfu::dci
