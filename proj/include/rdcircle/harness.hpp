#pragma once

// Run configuration, the simulate / spectrum / omega pipelines and the
// verification suite behind the command-line tool.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdcircle/omega_limit.hpp"
#include "rdcircle/scenarios.hpp"
#include "rdcircle/solver.hpp"
#include "rdcircle/variational.hpp"

namespace rdcircle {

struct Overrides {
  std::optional<std::size_t> n;
  std::optional<double> dt;
  std::optional<double> t_end;
  std::optional<double> t_transient;
  std::optional<std::size_t> stride;
  std::optional<double> horizon;
  std::optional<std::size_t> m;
  nlohmann::json tolerances = nlohmann::json::object();  // merged into the omega tolerances
  bool operator==(const Overrides&) const = default;
};

struct RunConfig {
  std::string scenario = "ex61-l0";
  nlohmann::json inline_scenario;  // used instead of the catalog entry when not null
  Overrides overrides;
  std::uint64_t seed = 1;
  bool random_initial = false;  // u0 drawn from the scenario's random family with `seed`
  std::string out = "out";
  bool plots = false;
  bool operator==(const RunConfig&) const = default;
};

void to_json(nlohmann::json& j, const Overrides& o);
void from_json(const nlohmann::json& j, Overrides& o);
void to_json(nlohmann::json& j, const RunConfig& c);
/// Unknown keys are rejected with std::invalid_argument.
void from_json(const nlohmann::json& j, RunConfig& c);

/// Scenario with every override applied (grid and step size go to all three
/// solver configs).
Scenario resolve(const RunConfig& config);

struct SpectrumRun {
  Trajectory base;
  SpectrumEstimate estimate;
  std::optional<CrosscheckReport> crosscheck;  // only along homogeneous bases
};

SpectrumRun run_spectrum(const Scenario& s);

struct OmegaRun {
  OmegaSample sample;
  OmegaAnalysis analysis;
};

OmegaRun run_omega(const Scenario& s, const InitialData& u0);

/// Mismatches between a spectrum and the scenario expectations, one line each.
std::vector<std::string> spectrum_mismatches(const Expectations& e, const SpectrumEstimate& s);

enum class Suite { quick, full };
enum class CheckStatus { pass, fail, not_applicable };

std::string to_string(Suite s);
std::string to_string(CheckStatus s);

struct CheckRecord {
  std::string id;
  std::string title;
  std::string anchor;
  CheckStatus status = CheckStatus::fail;
  nlohmann::json measured = nlohmann::json::object();
  nlohmann::json tolerances = nlohmann::json::object();
  std::vector<std::string> diagnostics;
};

struct VerifyOptions {
  Suite suite = Suite::quick;
  std::uint64_t seed = 1;
  std::optional<double> diffusion;  // replaces D in every solver config (fault injection)
  std::vector<std::string> only;    // check ids; empty runs all
  std::size_t jobs = 0;             // worker threads, 0 = hardware concurrency
  // called once per finished check with its wall time; never part of the report
  std::function<void(const CheckRecord&, double seconds)> progress;
};

struct VerifySummary {
  std::size_t pass = 0;
  std::size_t fail = 0;
  std::size_t not_applicable = 0;
};

struct VerifyReport {
  Suite suite = Suite::quick;
  std::uint64_t seed = 1;
  std::optional<double> diffusion;
  std::vector<CheckRecord> checks;  // ordered by id
  VerifySummary summary() const;
  bool ok() const { return summary().fail == 0; }
};

/// "AC01" … "AC12".
std::vector<std::string> check_ids();
std::string check_anchor(const std::string& id);
std::string check_title(const std::string& id);

/// Never throws for a known id: exceptions become failures with diagnostics.
/// Throws std::invalid_argument for an unknown id.
CheckRecord run_check(const std::string& id, const VerifyOptions& options = {});
VerifyReport run_verify(const VerifyOptions& options = {});

void to_json(nlohmann::json& j, const CheckRecord& r);
void to_json(nlohmann::json& j, const VerifyReport& r);
/// One line per check plus a totals line.
std::string summary_text(const VerifyReport& r);

}  // namespace rdcircle
