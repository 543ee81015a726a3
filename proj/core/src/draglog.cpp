#include "dragprof/draglog.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>
#include <vector>

#include <fmt/format.h>

#include "dragprof/errors.hpp"

namespace dragprof {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::uint64_t parse_u64(std::string_view text, std::size_t line, const char* what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw LogFormatError(line, fmt::format("bad {} '{}'", what, text));
  }
  return v;
}

std::uint64_t parse_keyed(std::string_view field, std::string_view key, std::size_t line) {
  if (field.substr(0, key.size()) != key || field.size() == key.size() ||
      field[key.size()] != '=') {
    throw LogFormatError(line, fmt::format("expected {}=<n>, got '{}'", key, field));
  }
  return parse_u64(field.substr(key.size() + 1), line, key.data());
}

LogHeader parse_header(std::string_view line) {
  constexpr std::string_view kMagic = "DRAGLOG 1 ";
  if (line.substr(0, kMagic.size()) != kMagic) {
    throw LogFormatError(1, "missing 'DRAGLOG 1' header");
  }
  std::string_view rest = line.substr(kMagic.size());
  constexpr std::string_view kSource = " source=";
  auto src = rest.find(kSource);
  if (src == std::string_view::npos) throw LogFormatError(1, "header lacks source=");
  auto fields = split_fields(rest.substr(0, src));
  if (fields.size() != 2) throw LogFormatError(1, "header needs gc_interval and heap_slots");
  LogHeader h;
  h.gc_interval = parse_keyed(fields[0], "gc_interval", 1);
  h.heap_slots = parse_keyed(fields[1], "heap_slots", 1);
  h.source = std::string(rest.substr(src + kSource.size()));
  return h;
}

LifetimeRecord parse_record(std::string_view line, std::size_t lineno) {
  auto f = split_fields(line);
  if (f.size() != 8) throw LogFormatError(lineno, "OBJ line needs 7 fields");
  LifetimeRecord r;
  r.id = parse_u64(f[1], lineno, "id");
  if (f[2] == "P") {
    r.kind = ObjKind::Pair;
  } else if (f[2] == "V") {
    r.kind = ObjKind::Vector;
  } else {
    throw LogFormatError(lineno, fmt::format("bad kind '{}'", f[2]));
  }
  auto size = parse_u64(f[3], lineno, "size");
  if (size > 0xffffffffu) throw LogFormatError(lineno, "size too large");
  r.size_slots = static_cast<std::uint32_t>(size);
  if (r.kind == ObjKind::Pair && r.size_slots != 2) {
    throw LogFormatError(lineno, "pair must have 2 slots");
  }
  r.create_tick = parse_u64(f[4], lineno, "create tick");
  if (f[5] != "-1") r.last_use_tick = parse_u64(f[5], lineno, "last-use tick");
  r.collect_tick = parse_u64(f[6], lineno, "collect tick");
  if (f[7] == "C") {
    r.censored = true;
  } else if (f[7] != "F") {
    throw LogFormatError(lineno, fmt::format("bad censor flag '{}'", f[7]));
  }
  if (r.create_tick > r.collect_tick) throw LogFormatError(lineno, "create after collect");
  if (r.last_use_tick &&
      (*r.last_use_tick < r.create_tick || *r.last_use_tick > r.collect_tick)) {
    throw LogFormatError(lineno, "last use outside [create, collect]");
  }
  return r;
}

}  // namespace

void write_draglog(std::ostream& out, const TraceLog& log) {
  out << "DRAGLOG 1 gc_interval=" << log.header.gc_interval
      << " heap_slots=" << log.header.heap_slots << " source=" << log.header.source << '\n';
  std::string line;
  for (const LifetimeRecord& r : log.records) {
    line.clear();
    fmt::format_to(std::back_inserter(line), "OBJ {} {} {} {} ", r.id,
                   r.kind == ObjKind::Pair ? 'P' : 'V', r.size_slots, r.create_tick);
    if (r.last_use_tick) {
      fmt::format_to(std::back_inserter(line), "{}", *r.last_use_tick);
    } else {
      line += "-1";
    }
    fmt::format_to(std::back_inserter(line), " {} {}\n", r.collect_tick, r.censored ? 'C' : 'F');
    out << line;
  }
  out << "END " << log.end_tick << '\n';
}

std::string to_draglog(const TraceLog& log) {
  std::ostringstream out;
  write_draglog(out, log);
  return out.str();
}

TraceLog read_draglog(std::istream& in) {
  TraceLog log;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw LogFormatError(1, "empty log");
  ++lineno;
  log.header = parse_header(line);

  std::unordered_set<ObjId> seen;
  bool ended = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (ended) {
      if (line.empty()) continue;
      throw LogFormatError(lineno, "content after END");
    }
    std::string_view view = line;
    if (view.substr(0, 4) == "OBJ ") {
      LifetimeRecord r = parse_record(view, lineno);
      if (!seen.insert(r.id).second) {
        throw LogFormatError(lineno, fmt::format("duplicate object id {}", r.id));
      }
      log.records.push_back(r);
    } else if (view.substr(0, 4) == "END ") {
      log.end_tick = parse_u64(view.substr(4), lineno, "end tick");
      ended = true;
    } else {
      throw LogFormatError(lineno, fmt::format("unrecognized line '{}'", line));
    }
  }
  if (!ended) throw LogFormatError(lineno + 1, "missing END line (truncated log?)");
  for (const LifetimeRecord& r : log.records) {
    if (r.collect_tick > log.end_tick) {
      throw LogFormatError(lineno, fmt::format("object {} collected after END", r.id));
    }
    if (r.censored && r.collect_tick != log.end_tick) {
      throw LogFormatError(lineno, fmt::format("censored object {} not closed at END", r.id));
    }
  }
  std::sort(log.records.begin(), log.records.end(), [](const auto& a, const auto& b) {
    return a.collect_tick != b.collect_tick ? a.collect_tick < b.collect_tick : a.id < b.id;
  });
  return log;
}

TraceLog read_draglog_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open log '{}'", path.string()));
  return read_draglog(in);
}

}  // namespace dragprof
