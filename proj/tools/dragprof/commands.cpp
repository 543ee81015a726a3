#include "dragprof/commands.hpp"

#include <fstream>
#include <future>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dragprof/draglog.hpp"
#include "dragprof/interp.hpp"
#include "dragprof/report.hpp"
#include "dragprof/version.hpp"

namespace dragprof::cli {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw WriteError(fmt::format("cannot write '{}'", path.string()));
    body(out);
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw WriteError(fmt::format("write to '{}' failed", path.string()));
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw WriteError(fmt::format("cannot rename onto '{}': {}", path.string(), ec.message()));
  }
}

namespace {

std::optional<std::string> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string form_label(const Interpreter& interp, const std::string& file) {
  const TopLevelForm* form = interp.current_form();
  if (form == nullptr) return file;
  return fmt::format("{}:{}:{}: in form `{}`", file, form->pos.line, form->pos.column,
                     form->snippet);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw WriteError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
}

void write_outputs(const fs::path& dir, const DragReport& report) {
  ensure_dir(dir);
  write_file_atomic(dir / "curves.csv", [&](std::ostream& o) { write_curves_csv(o, report.curves); });
  write_file_atomic(dir / "histogram.csv",
                    [&](std::ostream& o) { write_histogram_csv(o, report.histogram); });
  write_file_atomic(dir / "report.csv", [&](std::ostream& o) {
    write_report_csv(o, std::span<const DragReport>(&report, 1));
  });
}

}  // namespace

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  const std::string file = options.source.filename().string();
  if (options.gc_interval < 1 || options.heap_slots < 16) {
    err << "error: --gc-interval must be >= 1 and --heap-slots >= 16\n";
    return kUsage;
  }
  std::optional<std::string> source = slurp(options.source);
  if (!source) {
    err << fmt::format("error: cannot read '{}'\n", options.source.string());
    return kInputError;
  }

  EvalConfig config;
  config.runtime.gc_interval = options.gc_interval;
  config.runtime.heap_slots = options.heap_slots;
  config.source_name = file;
  config.out = &out;

  fs::path log_path = options.log.value_or(fs::path(options.source.stem().string() + ".draglog"));

  Interpreter interp(config);
  Program program;
  try {
    program = interp.parse(*source);
  } catch (const SyntaxError& e) {
    err << fmt::format("{}:{}\n", file, e.what());
    return kInputError;
  }

  TraceLog log;
  std::string result;
  try {
    Value v = interp.run(std::move(program));
    result = interp.write(v);
    log = interp.finish();
  } catch (const OutOfMemory& e) {
    err << fmt::format("{}: out of memory: {}\n", form_label(interp, file), e.what());
    return kOutOfMemory;
  } catch (const RuntimeError& e) {
    err << fmt::format("{}: runtime error: {}\n", form_label(interp, file), e.what());
    return kRuntimeError;
  } catch (const IndexOutOfBounds& e) {
    err << fmt::format("{}: runtime error: {}\n", form_label(interp, file), e.what());
    return kRuntimeError;
  } catch (const NegativeLength& e) {
    err << fmt::format("{}: runtime error: {}\n", form_label(interp, file), e.what());
    return kRuntimeError;
  } catch (const Error& e) {
    err << fmt::format("{}: internal error: {}\n", form_label(interp, file), e.what());
    return kInternalError;
  }

  try {
    write_file_atomic(log_path, [&](std::ostream& o) { write_draglog(o, log); });
  } catch (const WriteError& e) {
    err << "error: " << e.what() << '\n';
    return kWriteError;
  }

  CollectionSummary s = interp.runtime().summary();
  std::size_t censored = 0;
  for (const LifetimeRecord& r : log.records) censored += r.censored ? 1 : 0;
  out << fmt::format("result: {}\n", result);
  out << fmt::format("collections: {} (interval {}, exhaustion {}, manual {})\n", s.collections,
                     s.by_interval, s.by_exhaustion, s.manual);
  out << fmt::format("objects: {} allocated, {} collected, {} censored; {} slots copied\n",
                     log.records.size(), s.objects_collected, censored, s.slots_copied);
  out << fmt::format("end tick: {}\nlog: {}\n", log.end_tick, log_path.string());
  return kOk;
}

int cmd_analyze(const AnalyzeCommandOptions& options, std::ostream& out, std::ostream& err) {
  if (options.analysis.sample_interval && *options.analysis.sample_interval == 0) {
    err << "error: --sample-interval must be >= 1\n";
    return kUsage;
  }
  for (const fs::path& p : options.logs) {
    if (!fs::is_regular_file(p)) {
      err << fmt::format("error: cannot read '{}'\n", p.string());
      return kInputError;
    }
  }

  // Logs are immutable inputs, so each is parsed and analyzed on its own worker.
  std::vector<std::future<DragReport>> jobs;
  jobs.reserve(options.logs.size());
  for (const fs::path& p : options.logs) {
    jobs.push_back(std::async(std::launch::async, [p, &options] {
      return analyze(read_draglog_file(p), options.analysis);
    }));
  }

  std::vector<DragReport> reports;
  int status = kOk;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    try {
      reports.push_back(jobs[i].get());
    } catch (const LogFormatError& e) {
      err << fmt::format("{}:{}\n", options.logs[i].string(), e.what());
      if (status == kOk) status = kInputError;
    } catch (const std::exception& e) {
      err << fmt::format("{}: {}\n", options.logs[i].string(), e.what());
      if (status == kOk) status = kInputError;
    }
  }
  if (status != kOk) return status;

  try {
    if (reports.size() == 1) {
      write_outputs(options.out_dir, reports.front());
    } else {
      std::set<std::string> used;
      for (std::size_t i = 0; i < reports.size(); ++i) {
        std::string name = options.logs[i].stem().string();
        for (int k = 2; !used.insert(name).second; ++k) {
          name = fmt::format("{}-{}", options.logs[i].stem().string(), k);
        }
        write_outputs(options.out_dir / name, reports[i]);
      }
      write_file_atomic(options.out_dir / "report.csv",
                        [&](std::ostream& o) { write_report_csv(o, reports); });
    }
    write_file_atomic(options.out_dir / "report.txt",
                      [&](std::ostream& o) { write_text_report(o, reports); });
  } catch (const WriteError& e) {
    err << "error: " << e.what() << '\n';
    return kWriteError;
  }

  write_text_report(out, reports);
  return kOk;
}

int cmd_plot(const PlotOptions& options, std::ostream& out, std::ostream& err) {
  for (const fs::path& csv : options.csvs) {
    std::ifstream in(csv, std::ios::binary);
    if (!in) {
      err << fmt::format("error: cannot read '{}'\n", csv.string());
      return kInputError;
    }
    fs::path dir = options.out_dir.value_or(csv.parent_path());
    fs::path target =
        dir / (csv.stem().string() + (options.format == PlotFormat::Svg ? ".svg" : ".gp"));
    try {
      CsvKind kind = detect_csv_kind(in);
      in.clear();
      in.seekg(0);
      if (!dir.empty()) ensure_dir(dir);
      if (kind == CsvKind::Curves) {
        auto points = read_curves_csv(in);
        write_file_atomic(target, [&](std::ostream& o) {
          plot_curves(o, points, options.format, "reachable (solid) vs live (dashed) objects");
        });
      } else {
        Histogram hist = read_histogram_csv(in);
        write_file_atomic(target, [&](std::ostream& o) {
          plot_histogram(o, hist, options.format, "distribution of drag as % of runtime");
        });
      }
    } catch (const CsvFormatError& e) {
      err << fmt::format("{}:{}\n", csv.string(), e.what());
      return kInputError;
    } catch (const WriteError& e) {
      err << "error: " << e.what() << '\n';
      return kWriteError;
    }
    out << target.string() << '\n';
  }
  return kOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"dragprof: lifetime and drag profiler for a small Scheme", "dragprof"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  RunOptions run;
  CLI::App* run_cmd = app.add_subcommand("run", "Evaluate a program and write its DRAGLOG");
  run_cmd->add_option("source", run.source, "Scheme source file")->required();
  run_cmd->add_option("--gc-interval", run.gc_interval, "Collect every K events")
      ->check(CLI::Range(std::uint64_t{1}, std::numeric_limits<std::uint64_t>::max()))
      ->capture_default_str();
  run_cmd->add_option("--heap-slots", run.heap_slots, "Semispace capacity in slots")
      ->check(CLI::Range(std::size_t{16}, std::numeric_limits<std::size_t>::max()))
      ->capture_default_str();
  std::string log_path;
  run_cmd->add_option("--log", log_path, "Output log (default: <source stem>.draglog)");

  AnalyzeCommandOptions analyze_opts;
  CLI::App* analyze_cmd =
      app.add_subcommand("analyze", "Turn one or more logs into reports and CSVs");
  analyze_cmd->add_option("logs", analyze_opts.logs, "DRAGLOG files")->required();
  Tick sample_interval = 0;
  Tick dead_threshold = 0;
  auto* si = analyze_cmd
                 ->add_option("--sample-interval", sample_interval,
                              "Ticks between curve samples (default: end_tick/500, min 1)")
                 ->check(CLI::Range(Tick{1}, std::numeric_limits<Tick>::max()));
  auto* dt = analyze_cmd->add_option("--dead-threshold", dead_threshold,
                                     "Dead means drag > threshold ticks (default: K)");
  analyze_cmd->add_option("--out-dir", analyze_opts.out_dir, "Output directory")
      ->capture_default_str();

  PlotOptions plot_opts;
  CLI::App* plot_cmd = app.add_subcommand("plot", "Render curves.csv / histogram.csv");
  plot_cmd->add_option("csvs", plot_opts.csvs, "CSV files from analyze")->required();
  std::string format = "svg";
  plot_cmd->add_option("--plot-format", format, "svg or gnuplot")
      ->check(CLI::IsMember({"svg", "gnuplot"}))
      ->capture_default_str();
  std::string plot_dir;
  plot_cmd->add_option("--out-dir", plot_dir, "Output directory (default: next to each CSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) {
      if (!log_path.empty()) run.log = log_path;
      return cmd_run(run, out, err);
    }
    if (*analyze_cmd) {
      if (*si) analyze_opts.analysis.sample_interval = sample_interval;
      if (*dt) analyze_opts.analysis.dead_threshold = dead_threshold;
      return cmd_analyze(analyze_opts, out, err);
    }
    plot_opts.format = format == "svg" ? PlotFormat::Svg : PlotFormat::Gnuplot;
    if (!plot_dir.empty()) plot_opts.out_dir = plot_dir;
    return cmd_plot(plot_opts, out, err);
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

}  // namespace dragprof::cli
