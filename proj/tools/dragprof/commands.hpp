#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dragprof/analyzer.hpp"
#include "dragprof/errors.hpp"
#include "dragprof/heap.hpp"
#include "dragprof/plot.hpp"

namespace dragprof::cli {

// Each failure class has its own status.
enum ExitCode : int {
  kOk = 0,
  kInputError = 1,     // missing file, syntax error, malformed log or CSV
  kRuntimeError = 2,   // error raised by the program under test
  kOutOfMemory = 3,    // heap exhausted even after collection
  kWriteError = 4,     // an output could not be written
  kInternalError = 5,  // invariant violation inside dragprof
  kUsage = 64,         // bad command line
};

class WriteError : public Error {
 public:
  using Error::Error;
};

/// Writes through a sibling temp file and renames on success, so a failed
/// write never leaves a partial file behind. Throws WriteError.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& body);

struct RunOptions {
  std::filesystem::path source;
  std::uint64_t gc_interval = 16;
  std::size_t heap_slots = kDefaultHeapSlots;
  std::optional<std::filesystem::path> log;  // default: <source stem>.draglog
};

struct AnalyzeCommandOptions {
  std::vector<std::filesystem::path> logs;
  AnalyzeOptions analysis;
  std::filesystem::path out_dir = ".";
};

struct PlotOptions {
  std::vector<std::filesystem::path> csvs;
  PlotFormat format = PlotFormat::Svg;
  std::optional<std::filesystem::path> out_dir;  // default: next to each CSV
};

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);
int cmd_analyze(const AnalyzeCommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_plot(const PlotOptions& options, std::ostream& out, std::ostream& err);

/// Full command line, argv[0] included.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dragprof::cli
