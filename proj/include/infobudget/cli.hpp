#pragma once

// Command-line front end. Subcommands: plan, gate, audit, dispersion, jensen,
// mixture, dose, fit, certify.
//
// Every command prints a human-readable summary. With --out DIR it also writes
//   DIR/<command>.jsonl        header line + one record per line
//   DIR/<command>_summary.txt  the printed summary
//   DIR/<command>_plot.tsv     tidy plot table, one row per point
// and with --json the .jsonl content goes to stdout instead of the summary.
// The header carries the schema, the config hash and the seeds; outputs hold
// no timestamps, so rerunning a command reproduces them byte for byte.
//
// Configuration: --config FILE (JSON) supplies defaults, explicit flags win.
//   {"seed": 0, "threads": 1,
//    "gate": {"h_star":0.05, "m":6, "clip_bound":6, "clip_mode":"symmetric", ...},
//    "backend": {"kind":"synthetic|replay|remote", "scores":"file", "record":"file"},
//    "synthetic": {"alpha":1, "C":1, "sign":-1, "support_min":1, "support_max":3,
//                  "a_spread":1, "seed":0, "positive_label":"1",
//                  "models": {"<item_id>": {"a":0.1, "weights":[...]}}},
//    "remote": {"url":"http://host:port/path", "timeout_ms":30000, "attempts":3,
//               "backoff_ms":200, "backoff_cap_ms":2000, "max_in_flight":4}}
// The remote bearer token is read only from INFOBUDGET_REMOTE_TOKEN.
//
// Exit codes: 0 clean, 1 usage, 2 data, 3 backend failure, 4 invariant
// violation, 5 completed with permutation shortfalls.

#include <iosfwd>
#include <string>
#include <vector>

namespace infobudget::cli {

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int execute(int argc, const char* const* argv);

}  // namespace infobudget::cli
