#pragma once

// Reduced-size configurations of every experiment, quick enough for unit and
// determinism tests. Each is a complete config document with seed 7.

#include <string>
#include <utility>
#include <vector>

namespace mfu::testing {

inline const std::string kSmallTransport = R"("transport": {"nx": 64})";

inline std::vector<std::pair<std::string, std::string>> small_configs() {
  auto doc = [](const std::string& kind, const std::string& settings) {
    return R"({"schema_version": 1, "experiment": ")" + kind + R"(", "seed": 7, "settings": {)" + settings + "}}";
  };
  return {
      {"poly_inadequate", doc("poly_inadequate", R"("steps": 3000, "prior_draws": 500)")},
      {"poly_hierarchical",
       doc("poly_hierarchical", R"("steps": 4000, "prior_draws": 500, "prior_gsa_n": 300, "x_points": 5)")},
      {"transport_forward", doc("transport_forward", kSmallTransport + R"(, "n_samples": 60, "gsa_n": 80, "snapshots": 3)")},
      {"transport_calibrate",
       doc("transport_calibrate", kSmallTransport + R"(, "steps": 1500, "pushforward_n": 40, "prior_gsa_n": 40)")},
      {"transport_robustness",
       doc("transport_robustness",
           kSmallTransport + R"(, "dci": {"target_n": 100, "fit_n": 200, "proposals_n": 400, "predict_n": 400},
              "gsa_n": 60, "replicates": 2, "outer_n": 20, "inner_n": 20, "order": 4)")},
      {"dci", doc("dci", kSmallTransport + R"(, "dci": {"target_n": 100, "fit_n": 200, "proposals_n": 400, "predict_n": 400},
              "heldout_n": 100, "identity_n": 300)")},
      {"gsa_generic", doc("gsa_generic", R"("n": 2000, "replicates": 3)")},
  };
}

}  // namespace mfu::testing
