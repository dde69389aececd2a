#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace hemvsa {

struct RunConfig {
  double tol_germ = 1e-8;
  double tol_pfe = 1e-6;
  double eps_th = 1e-5;
  std::size_t max_terms_germ = 30;
  std::size_t max_terms_ps = 60;
  std::size_t continuation_terms = 26;  // series length kept for Padé stages
  double scan_step = 0.01;
  double s_cap = 20.0;
  double alert_threshold_percent = 10.0;
  double cadence_seconds = 30.0;
  std::size_t window_k = 30;
  double w_e = 1.0;
  double w_z = 0.1;
  double w_x = 0.1;
  std::uint64_t seed = 1;

  /// Empty when valid; otherwise one message per bad field.
  std::vector<std::string> problems() const;
};

}  // namespace hemvsa
