#pragma once
// Command-line job description, parsing and execution.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "simid/core.hpp"
#include "simid/rates.hpp"

namespace simid {

enum class Command { Rid, RidGeneral, Tc, Lc, Rd, RhoBar, Bound, Sweep, Simulate, Selftest };
enum class OutputFormat { Csv, Json };

const char* to_string(Command c);

struct JobSpec {
  Command command = Command::Rid;
  Pmf px;
  Pmf py;
  std::string rho_text = "hamming";
  DistortionMatrix rho;
  std::vector<double> d_grid;
  std::vector<double> r_grid;
  double tol = 1e-4;
  bool strict_cardinality = false;
  bool full_enumeration = false;
  std::uint64_t seed = 1;
  OutputFormat format = OutputFormat::Csv;
  std::string out;  // file (or file prefix for sweep); empty = standard output
  std::size_t threads = 1;
  std::uint64_t budget = kDefaultPatternBudget;
  // simulate
  std::size_t n = 8;
  std::uint64_t trials = 10'000;
  bool typical_only = false;
  double gamma = 0.125;
};

/// Invalid command line or config file; the message names the field.
class JobParseError : public Error {
 public:
  using Error::Error;
};

/// --help / --version output; not an error.
struct HelpRequested {
  std::string text;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitBudget = 4;

/// Parses arguments (without the program name). A `--config FILE` of
/// key=value lines supplies defaults; flags given on the command line win.
/// Throws JobParseError or HelpRequested.
JobSpec parse_job(const std::vector<std::string>& args);

/// "hamming" or rows separated by ';' and entries by ','.
DistortionMatrix parse_distortion(const std::string& text, std::size_t rows, std::size_t cols);

/// Executes the job. Data goes to `out` (or to files when spec.out is set),
/// diagnostics to `err`. Returns the process exit code.
int run_job(const JobSpec& spec, std::ostream& out, std::ostream& err);

/// 10 significant digits, '.' separator, "inf"/"-inf"/"nan" for non-finite.
std::string format_number(double v);
/// Value after a trip through format_number.
double quantize(double v);

struct CsvRow {
  double d = 0.0;
  double r = 0.0;
  std::string status;
  long pattern_index = -1;
  std::size_t u_size = 0;
  double tol = 0.0;
};

inline constexpr const char* kCsvHeader = "D,R,status,pattern_index,u_size,tol";

void write_csv_rows(std::ostream& os, const std::vector<CsvRow>& rows);
/// Reads rows written by write_csv_rows; skips the header and '#' lines.
std::vector<CsvRow> read_csv_rows(std::istream& is);
RateCurve rate_curve_from_csv(std::istream& is, const std::string& label = {});

}  // namespace simid
