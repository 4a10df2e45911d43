#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mkv {

struct CriterionInfo {
  int id;
  std::string name;
  std::string module;  // module tag used by --only
};

struct CriterionResult {
  int id = 0;
  std::string name;
  std::string module;
  bool pass = false;
  double seconds = 0.0;
  std::string summary;
  nlohmann::json details = nlohmann::json::object();
};

struct VerifyOptions {
  std::uint64_t seed = 20261019;
  std::string only;  // empty: all; otherwise a module tag or a criterion number
  int threads_high = 8;
};

const std::vector<CriterionInfo>& verify_criteria();
bool criterion_selected(const CriterionInfo& c, const std::string& only);

CriterionResult run_criterion(int id, const VerifyOptions& opts);

// Runs every selected criterion; progress lines go to `log` when given.
std::vector<CriterionResult> verify_suite(const VerifyOptions& opts, std::ostream* log = nullptr);

nlohmann::json to_json(const std::vector<CriterionResult>& results);
std::string format_table(const std::vector<CriterionResult>& results);

}  // namespace mkv
