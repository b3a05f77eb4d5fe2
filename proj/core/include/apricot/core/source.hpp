#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace apricot {

/// Position of a construct in the input, 1-based line and column.
struct Span {
  std::uint32_t file = 0;
  std::uint32_t line = 0;
  std::uint32_t col = 0;

  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

/// Owns the names and contents of all compilation-unit inputs.
class SourceManager {
 public:
  std::uint32_t add(std::string name, std::string text);

  const std::string& name(std::uint32_t file) const { return files_.at(file).name; }
  const std::string& text(std::uint32_t file) const { return files_.at(file).text; }
  std::size_t size() const { return files_.size(); }

  std::string format(const Span& span) const;

 private:
  struct File {
    std::string name;
    std::string text;
  };
  std::vector<File> files_;
};

enum class Severity { Error, Warning };

std::string_view to_string(Severity s);

/// A parse diagnostic or a conformance-report entry.
struct Diagnostic {
  Severity severity = Severity::Error;
  std::string rule_id;
  std::string message;
  Span span;
  std::vector<std::string> expected;
};

bool has_errors(const std::vector<Diagnostic>& diags);

/// `file:line:col: severity: message [rule-id]`
std::string render(const Diagnostic& d, const SourceManager* sources = nullptr, bool color = false);

/// One JSON object per line: rule_id, severity, file, line, col, message.
std::string render_jsonl(const Diagnostic& d, const SourceManager* sources = nullptr);

}  // namespace apricot
