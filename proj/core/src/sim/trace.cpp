#include "apricot/sim/trace.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "apricot/core/value.hpp"

namespace apricot::sim {

namespace {

constexpr const char* kActive = ".@active";

std::string number(double v) { return std::isnan(v) ? "null" : format_real(v); }

double parse_number(const std::string& s) {
  if (s == "null" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::runtime_error("malformed number '" + s + "'");
  }
  if (used != s.size()) throw std::runtime_error("malformed number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

nlohmann::json numbers(const std::vector<double>& v) {
  auto out = nlohmann::json::array();
  for (double d : v) out.push_back(std::isnan(d) ? nlohmann::json(nullptr) : nlohmann::json(d));
  return out;
}

std::vector<double> numbers(const nlohmann::json& j) {
  std::vector<double> out;
  for (const auto& d : j) out.push_back(d.is_null() ? std::numeric_limits<double>::quiet_NaN() : d.get<double>());
  return out;
}

}  // namespace

std::optional<std::size_t> Trace::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  return std::nullopt;
}

void write_csv(const Trace& t, std::ostream& out) {
  out << "time";
  for (const auto& c : t.columns) out << ',' << c;
  for (const auto& c : t.components) out << ',' << c << kActive;
  out << '\n';
  for (const auto& s : t.samples) {
    out << format_real(s.time);
    for (double v : s.values) out << ',' << number(v);
    for (const auto& a : s.active) out << ',' << a;
    out << '\n';
  }
}

void write_events_csv(const Trace& t, std::ostream& out) {
  out << "time,kind,name,prefix\n";
  for (const auto& e : t.events) out << format_real(e.time) << ',' << e.kind << ',' << e.name << ',' << e.prefix << '\n';
}

void write_jsonl(const Trace& t, std::ostream& out) {
  nlohmann::ordered_json h;
  h["type"] = "header";
  h["columns"] = t.columns;
  h["components"] = t.components;
  out << h.dump() << '\n';
  // Samples and events interleaved by time, events first at equal times.
  std::size_t si = 0;
  std::size_t ei = 0;
  while (si < t.samples.size() || ei < t.events.size()) {
    const bool event = ei < t.events.size() && (si == t.samples.size() || t.events[ei].time <= t.samples[si].time);
    nlohmann::ordered_json j;
    if (event) {
      const auto& e = t.events[ei++];
      j["type"] = "event";
      j["time"] = e.time;
      j["kind"] = e.kind;
      j["name"] = e.name;
      j["prefix"] = e.prefix;
      if (!e.pre.empty()) j["pre"] = numbers(e.pre);
      if (!e.post.empty()) j["post"] = numbers(e.post);
    } else {
      const auto& s = t.samples[si++];
      j["type"] = "sample";
      j["time"] = s.time;
      j["values"] = numbers(s.values);
      j["active"] = s.active;
    }
    out << j.dump() << '\n';
  }
  nlohmann::ordered_json end;
  end["type"] = "end";
  end["termination"] = t.termination;
  out << end.dump() << '\n';
}

Trace read_csv(std::istream& in) {
  Trace t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace");
  auto head = split(line);
  if (head.empty() || head[0] != "time") throw std::runtime_error("trace header must start with 'time'");
  for (std::size_t i = 1; i < head.size(); ++i) {
    const auto& c = head[i];
    if (c.size() > 8 && c.ends_with(kActive))
      t.components.push_back(c.substr(0, c.size() - 8));
    else if (t.components.empty())
      t.columns.push_back(c);
    else
      throw std::runtime_error("numeric column after @active columns");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != head.size()) throw std::runtime_error("row has " + std::to_string(cells.size()) + " cells");
    Sample s;
    s.time = parse_number(cells[0]);
    for (std::size_t i = 0; i < t.columns.size(); ++i) s.values.push_back(parse_number(cells[1 + i]));
    for (std::size_t i = 0; i < t.components.size(); ++i) s.active.push_back(cells[1 + t.columns.size() + i]);
    t.samples.push_back(std::move(s));
  }
  return t;
}

Trace read_jsonl(std::istream& in) {
  Trace t;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "header") {
        t.columns = j.at("columns").get<std::vector<std::string>>();
        t.components = j.at("components").get<std::vector<std::string>>();
        header = true;
      } else if (type == "sample") {
        Sample s;
        s.time = j.at("time").get<double>();
        s.values = numbers(j.at("values"));
        s.active = j.at("active").get<std::vector<std::string>>();
        if (s.values.size() != t.columns.size()) throw std::runtime_error("sample width differs from header");
        t.samples.push_back(std::move(s));
      } else if (type == "event") {
        Event e;
        e.time = j.at("time").get<double>();
        e.kind = j.at("kind").get<std::string>();
        e.name = j.at("name").get<std::string>();
        e.prefix = j.at("prefix").get<std::string>();
        if (j.contains("pre")) e.pre = numbers(j["pre"]);
        if (j.contains("post")) e.post = numbers(j["post"]);
        t.events.push_back(std::move(e));
      } else if (type == "end") {
        t.termination = j.at("termination").get<std::string>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(std::string("malformed trace line: ") + e.what());
    }
  }
  if (!header) throw std::runtime_error("trace has no header line");
  return t;
}

Trace select_columns(const Trace& t, const std::vector<std::string>& names) {
  Trace out;
  out.events = t.events;
  out.termination = t.termination;
  std::vector<std::size_t> num;
  std::vector<std::size_t> act;
  for (const auto& n : names) {
    if (auto i = t.column(n)) {
      num.push_back(*i);
      out.columns.push_back(n);
      continue;
    }
    bool found = false;
    for (std::size_t i = 0; i < t.components.size(); ++i)
      if (n == t.components[i] + kActive || n == t.components[i]) {
        act.push_back(i);
        out.components.push_back(t.components[i]);
        found = true;
      }
    if (!found) throw std::runtime_error("unknown column '" + n + "'");
  }
  for (const auto& s : t.samples) {
    Sample r;
    r.time = s.time;
    for (auto i : num) r.values.push_back(s.values[i]);
    for (auto i : act) r.active.push_back(s.active[i]);
    out.samples.push_back(std::move(r));
  }
  return out;
}

std::vector<ColumnStats> column_stats(const Trace& t) {
  std::vector<ColumnStats> out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    ColumnStats st;
    st.name = t.columns[c];
    st.min = std::numeric_limits<double>::infinity();
    st.max = -std::numeric_limits<double>::infinity();
    double sum = 0;
    std::size_t n = 0;
    for (const auto& s : t.samples) {
      const double v = s.values[c];
      if (std::isnan(v)) continue;
      st.min = std::min(st.min, v);
      st.max = std::max(st.max, v);
      sum += v;
      ++n;
      st.final = v;
    }
    if (n == 0) st.min = st.max = st.final = std::numeric_limits<double>::quiet_NaN();
    st.mean = n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
    out.push_back(st);
  }
  return out;
}

}  // namespace apricot::sim
