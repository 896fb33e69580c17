#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsnav/sim/scenario.hpp"

namespace vsnav {

// Tick trace, format "vsnav-trace 1": run metadata, the scenario source
// embedded verbatim (so a trace can be replayed on its own), then one line
// per control tick.

struct TraceHeader {
  std::string scenario_name;
  std::string policy;
  std::uint64_t seed = 0;
  double timeout = 0.0;
  std::string scenario_text;  // empty for built-in scenarios
};

class TickTraceWriter {
 public:
  explicit TickTraceWriter(std::ostream& os, const TraceHeader& header) : os_(os) {
    os_ << "vsnav-trace 1\n";
    os_ << "scenario " << header.scenario_name << "\n";
    os_ << "policy " << header.policy << "\n";
    os_ << "seed " << header.seed << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "timeout %.9g\n", header.timeout);
    os_ << buf;
    os_ << "source-lines " << count_lines(header.scenario_text) << "\n";
    os_ << header.scenario_text;
    if (!header.scenario_text.empty() && header.scenario_text.back() != '\n') os_ << "\n";
    os_ << "columns time behaviour linear angular x y yaw z pitch roll\n";
  }

  void record(const TickRecord& tick) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "%.6f %s %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f\n", tick.time,
                  tick.behaviour, tick.command.linear, tick.command.angular,
                  tick.state.x, tick.state.y, tick.state.yaw, tick.state.z,
                  tick.state.pitch, tick.state.roll);
    os_ << buf;
  }

 private:
  static int count_lines(const std::string& text) {
    if (text.empty()) return 0;
    int n = 0;
    for (char c : text) n += c == '\n';
    if (text.back() != '\n') ++n;
    return n;
  }

  std::ostream& os_;
};

struct ParsedTick {
  double time = 0.0;
  std::string behaviour;
  VelocityCommand command;
  double x = 0, y = 0, yaw = 0, z = 0, pitch = 0, roll = 0;
};

struct ParsedTrace {
  TraceHeader header;
  std::vector<ParsedTick> ticks;
};

inline ParsedTrace read_trace(std::istream& is) {
  ParsedTrace out;
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "vsnav-trace" || version != 1)
    throw std::runtime_error("not a vsnav-trace file");
  std::string key;
  is >> key >> out.header.scenario_name;
  if (key != "scenario") throw std::runtime_error("trace: bad scenario line");
  is >> key >> out.header.policy;
  if (key != "policy") throw std::runtime_error("trace: bad policy line");
  is >> key >> out.header.seed;
  if (key != "seed") throw std::runtime_error("trace: bad seed line");
  is >> key >> out.header.timeout;
  if (key != "timeout") throw std::runtime_error("trace: bad timeout line");
  int source_lines = 0;
  is >> key >> source_lines;
  if (key != "source-lines") throw std::runtime_error("trace: bad source-lines line");
  std::string line;
  std::getline(is, line);  // finish the source-lines line
  std::ostringstream source;
  for (int i = 0; i < source_lines; ++i) {
    if (!std::getline(is, line)) throw std::runtime_error("trace: truncated source");
    source << line << "\n";
  }
  out.header.scenario_text = source.str();
  if (!std::getline(is, line) || line.rfind("columns ", 0) != 0)
    throw std::runtime_error("trace: missing columns line");

  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ParsedTick t;
    if (!(ls >> t.time >> t.behaviour >> t.command.linear >> t.command.angular >>
          t.x >> t.y >> t.yaw >> t.z >> t.pitch >> t.roll))
      throw std::runtime_error("trace: bad tick line: " + line);
    out.ticks.push_back(std::move(t));
  }
  return out;
}

inline ParsedTrace read_trace_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open trace file: " + path);
  return read_trace(f);
}

}  // namespace vsnav
