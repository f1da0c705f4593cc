#ifndef EVCAP_CLI_HPP_
#define EVCAP_CLI_HPP_

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace evcap::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // bad flags or config
inline constexpr int kExitFailed = 2;   // non-convergence or a failed --check

inline constexpr const char* kToolVersion = "1.0.0";

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

// Header row, '.' decimal separator, 10 significant digits.
void write_csv(const Table& table, std::ostream& os);
void write_json(const Table& table, std::ostream& os);

// Runs one invocation; args excludes the program name. Tables go to `out`
// (or to files under --out), diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace evcap::cli

#endif  // EVCAP_CLI_HPP_
