#pragma once

// Helpers shared by the experiment runners.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfu/bayes.hpp"
#include "mfu/experiments.hpp"
#include "mfu/gsa.hpp"
#include "mfu/svg.hpp"

namespace mfu::experiments::detail {

// Stream ids under the run seed.
enum Stream : std::uint64_t {
  kData = 1,
  kChain = 2,
  kPredict = 3,
  kPrior = 4,
  kResample = 5,
  kGsaPosterior = 6,
  kGsaPrior = 7,
  kPushPosterior = 8,
  kPushPrior = 9,
  kSamples = 10,
  kGsa = 11,
  kDci = 12,
  kHeldout = 13,
  kIdentity = 14,
  kReplicates = 15,
  kStart = 16,
  kSnapshots = 17,
};

inline std::uint64_t stream(std::uint64_t seed, Stream s) { return derive_seed(seed, s); }

sampling::ScalarDensity scalar(const sampling::Density& d);

/// "%.6g", for verdict details and labels.
std::string num(double v);

Json sobol_json(const std::vector<gsa::SobolEstimate>& est);
/// Entry with the largest mean T_total first.
Json ranking_json(const std::vector<gsa::SobolEstimate>& est);
const gsa::SobolEstimate& group(const std::vector<gsa::SobolEstimate>& est, const std::string& name);

/// Bars of S_main and T_total (with replicate sd) per labelled estimate set.
void add_index_plot(Result& r, const std::string& stem, const std::string& title,
                    const std::vector<std::pair<std::string, const std::vector<gsa::SobolEstimate>*>>& sets);

/// Overlaid histograms on shared edges spanning all samples.
void add_histograms(Result& r, const std::string& stem, const std::string& title, const std::string& xlabel,
                    const std::vector<std::pair<std::string, std::span<const double>>>& samples, std::size_t bins,
                    const std::vector<svg::Marker>& markers = {});

Json stats_json(const bayes::PushforwardStats& s);
Json chain_json(const bayes::Chain& c);

/// Marginal quantile interval of a chain column.
std::pair<double, double> credible_interval(const SampleMatrix& s, const std::string& name, double lo_q, double hi_q);

}  // namespace mfu::experiments::detail
