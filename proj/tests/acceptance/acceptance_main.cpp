// Runs the full acceptance suite and prints one pass/fail line per criterion.
// Criterion 13 runs the quick suite twice and compares the report bytes.

#include <chrono>
#include <cstdio>
#include <map>
#include <string>

#include "rdcircle/harness.hpp"
#include "rdcircle/io.hpp"

using namespace rdcircle;

namespace {

// wall-clock ceilings stated with the criteria, in seconds
const std::map<std::string, double> kLimits = {{"AC01", 10.0}, {"AC03", 60.0}, {"AC04", 300.0}};

void line(int number, bool ok, const std::string& title, double seconds, const std::string& note = "") {
  std::printf("criterion %2d  %s  %-36s %8.1f s%s%s\n", number, ok ? "PASS" : "FAIL", title.c_str(), seconds,
              note.empty() ? "" : "  ", note.c_str());
  std::fflush(stdout);
}

}  // namespace

int main() {
  int failures = 0;

  VerifyOptions full;
  full.suite = Suite::full;
  full.jobs = 1;  // sequential so the per-check wall times mean something
  full.progress = [&](const CheckRecord& r, double seconds) {
    bool ok = r.status != CheckStatus::fail;
    std::string note;
    if (auto it = kLimits.find(r.id); it != kLimits.end() && seconds > it->second) {
      ok = false;
      note = "over the " + format_double(it->second) + " s limit";
    }
    if (!ok) ++failures;
    line(std::stoi(r.id.substr(2)), ok, r.title, seconds, note);
    if (r.status == CheckStatus::fail)
      for (const auto& d : r.diagnostics) std::printf("      %s\n", d.c_str());
  };
  run_verify(full);

  const auto start = std::chrono::steady_clock::now();
  VerifyOptions quick;
  quick.suite = Suite::quick;
  const std::string first = dump_report(nlohmann::json(run_verify(quick)));
  const std::string second = dump_report(nlohmann::json(run_verify(quick)));
  const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
  const bool same = first == second;
  if (!same) ++failures;
  line(13, same, "determinism", took.count(), same ? "" : "quick-suite reports differ");

  std::printf("%s: %d failing criteria\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
