#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "mfl/config.hpp"

namespace mfl {

inline constexpr const char* kVersion = "0.1.0";

struct RunOptions {
  std::size_t dims_override = 0;  // couple --dims; 0 keeps the config value
  bool sweep_iota = false;  // rates --sweep iota
};

/// Runs one subcommand, writing artifacts plus manifest.json into config.out
/// and a JSON summary (or, for the iota sweep, CSV) to `out`. Returns the
/// process exit status. Errors are reported as JSON on `err`.
int run_subcommand(const std::string& name, const RunConfig& config, const RunOptions& options,
                   std::ostream& out, std::ostream& err);

/// {"error": {"kind": ..., "message": ..., "path": ...}}.
nlohmann::json error_json(const std::string& kind, const std::string& message,
                          const std::string& path = "");

/// Ledger of every assembled constant; LogReal values carry sign, natural
/// log and log10 so nothing underflows.
nlohmann::json rates_to_json(const RateConstants& k);

}  // namespace mfl
