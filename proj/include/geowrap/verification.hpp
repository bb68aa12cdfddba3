#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace geowrap::verification {

struct CheckResult {
  std::string name;
  std::string anchor;  // the claim being checked
  double measured = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 20240917;
  bool include_network = true;
};

CheckResult check_lambert_area(std::uint64_t seed);
CheckResult check_exp_jacobian(std::uint64_t seed);
CheckResult check_normalization();
CheckResult check_pushforward(std::uint64_t seed);
CheckResult check_truncation_constant();
CheckResult check_isometry_equivariance(std::uint64_t seed);
CheckResult check_symmetry_unimodality(std::uint64_t seed);
CheckResult check_curvature_limit(std::uint64_t seed);
CheckResult check_von_mises_limit();
CheckResult check_mle_consistency(std::uint64_t seed);
CheckResult check_conjugacy(std::uint64_t seed);
CheckResult check_mixture_recovery(std::uint64_t seed);
CheckResult check_network_synthetic(std::uint64_t seed);
CheckResult check_florentine(std::uint64_t seed);

struct NamedCheck {
  std::string name;
  bool network;
  std::function<CheckResult(const VerifyOptions&)> run;
};

// All checks in acceptance order.
const std::vector<NamedCheck>& all_checks();

/// Runs every check, timing each; on_result is called as each completes.
std::vector<CheckResult> run_verification(const VerifyOptions& options,
                                          const std::function<void(const CheckResult&)>& on_result = {});

}  // namespace geowrap::verification
