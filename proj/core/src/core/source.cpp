#include "apricot/core/source.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

namespace apricot {

std::uint32_t SourceManager::add(std::string name, std::string text) {
  files_.push_back({std::move(name), std::move(text)});
  return static_cast<std::uint32_t>(files_.size() - 1);
}

std::string SourceManager::format(const Span& span) const {
  std::string out = span.file < files_.size() ? files_[span.file].name : std::string("<input>");
  out += ':' + std::to_string(span.line) + ':' + std::to_string(span.col);
  return out;
}

std::string_view to_string(Severity s) { return s == Severity::Error ? "error" : "warning"; }

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

std::string render(const Diagnostic& d, const SourceManager* sources, bool color) {
  std::string where = sources ? sources->format(d.span)
                              : "<input>:" + std::to_string(d.span.line) + ':' + std::to_string(d.span.col);
  std::string sev(to_string(d.severity));
  if (color) sev = (d.severity == Severity::Error ? "\x1b[31m" : "\x1b[33m") + sev + "\x1b[0m";
  std::string out = where + ": " + sev + ": " + d.message;
  if (!d.expected.empty()) {
    out += " (expected ";
    for (std::size_t i = 0; i < d.expected.size(); ++i) {
      if (i) out += ", ";
      out += d.expected[i];
    }
    out += ')';
  }
  if (!d.rule_id.empty()) out += " [" + d.rule_id + ']';
  return out;
}

std::string render_jsonl(const Diagnostic& d, const SourceManager* sources) {
  nlohmann::ordered_json j;
  j["rule_id"] = d.rule_id;
  j["severity"] = std::string(to_string(d.severity));
  j["file"] = sources && d.span.file < sources->size() ? sources->name(d.span.file) : "<input>";
  j["line"] = d.span.line;
  j["col"] = d.span.col;
  j["message"] = d.message;
  if (!d.expected.empty()) j["expected"] = d.expected;
  return j.dump();
}

}  // namespace apricot
