#pragma once

// JSON renderings of the module reports. Objects use sorted keys; non-finite
// numbers become null.

#include "json.hpp"

#include "invlab/expansion.hpp"
#include "invlab/hjb_mc.hpp"
#include "invlab/invariance.hpp"

namespace invlab::report {

nlohmann::json number(double v);
nlohmann::json vector(const Vec& v);
nlohmann::json tolerances(const Tolerances& t);
nlohmann::json condition(const ConditionReport& r);
nlohmann::json audit(const AuditReport& r);
nlohmann::json coefficients(const TaylorCoefficients& c);
nlohmann::json lemma_verdict(const LemmaVerdict& v);
nlohmann::json falsifier(const FalsifierReport& r, const std::string& verdict);
nlohmann::json decay(const DecayReport& r, std::uint64_t seed);
nlohmann::json value_bound(const ValueBoundReport& r);
nlohmann::json mc_estimate(const McEstimate& e);

/// Two-space indented dump with a trailing newline.
std::string dump(const nlohmann::json& j);

}  // namespace invlab::report
