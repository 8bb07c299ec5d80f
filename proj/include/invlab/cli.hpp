#pragma once

// invariance-lab <audit|simulate|wz|lemma|taylor|hjb> [--config FILE]
//     [--seed INT] [--threads INT] [--out DIR] [--system NAME] [--set NAME]
//
// Exit codes: 0 success, 1 usage or configuration error, 2 numerical
// inconsistency between checks that must agree.

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "invlab/config.hpp"

namespace invlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInconsistent = 2;

struct Result {
  int exit_code = kExitOk;
  nlohmann::json report;
};

/// Deterministic default start: Newton projection of e_1 onto the boundary.
Vec default_start(const ClosedSet& set);

Result cmd_audit(const Config& cfg);
/// Requires cfg.out_dir; writes path_<k>.csv (and det_<k>.csv when
/// experiment.deterministic is set).
Result cmd_simulate(const Config& cfg);
Result cmd_wz(const Config& cfg);
Result cmd_lemma(const Config& cfg);
Result cmd_taylor(const Config& cfg);
Result cmd_hjb(const Config& cfg);

/// Full command line without the program name. The report goes to `out` and,
/// with --out, to DIR/<command>.json.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace invlab::cli
