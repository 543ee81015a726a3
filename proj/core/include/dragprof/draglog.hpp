#pragma once

// DRAGLOG v1, the line-oriented trace format:
//
//   DRAGLOG 1 gc_interval=<K> heap_slots=<C> source=<name>
//   OBJ <id> <P|V> <size_slots> <create> <last_use|-1> <collect> <C|F>
//   ...
//   END <end_tick>

#include <filesystem>
#include <iosfwd>
#include <string>

#include "dragprof/profiler.hpp"

namespace dragprof {

void write_draglog(std::ostream& out, const TraceLog& log);
std::string to_draglog(const TraceLog& log);

/// Parses and validates a log. Throws LogFormatError naming the offending
/// line. Records are returned in canonical (collect_tick, id) order.
TraceLog read_draglog(std::istream& in);
TraceLog read_draglog_file(const std::filesystem::path& path);

}  // namespace dragprof
