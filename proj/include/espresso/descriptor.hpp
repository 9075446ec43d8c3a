#pragma once

// Experiment descriptions: line-oriented, self-describing records whose first
// token names what the line models (DYE, TISSUE, PRINTING_CONFIGURATION, ...).
//
//   EXPERIMENT PINE_DROUGHT_GROWTH May-August,2000 "384 clones"
//   DYE CY3 "Genisphere Kit"
//   PRINTING_CONFIGURATION Stanford4x16x24 4 16 24 QUADRANTS
//
// Tokens split on whitespace except inside double quotes. Quoted fields cannot
// contain '"' (there are no escapes). Blank lines and lines starting with '#'
// are ignored and are not preserved by serialization.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace espresso::descriptor {

class Value {
 public:
  enum class Kind { Bare, Quoted, Integer, Decimal };

  // Types an unquoted token: ^[0-9]+$ is an integer, ^[0-9]*\.[0-9]+$ a
  // decimal, anything else a bare string.
  static Value from_token(std::string_view token);
  static Value quoted(std::string text);
  static Value integer(std::int64_t v);
  // A string field; quoted when it could not survive as a bare token.
  static Value string(std::string text);

  Kind kind() const noexcept { return kind_; }
  // Field text without quotes. Integers are in canonical decimal form.
  const std::string& text() const noexcept { return text_; }
  bool is_numeric() const noexcept { return kind_ == Kind::Integer || kind_ == Kind::Decimal; }
  std::optional<double> number() const;

  std::string serialize() const;

  bool operator==(const Value&) const = default;

 private:
  Value(Kind kind, std::string text) : kind_(kind), text_(std::move(text)) {}

  Kind kind_ = Kind::Bare;
  std::string text_;
};

struct Record {
  std::string keyword;
  std::vector<Value> fields;

  bool operator==(const Record&) const = default;
};

struct ExperimentDescription {
  std::vector<Record> records;

  // First field of the first EXPERIMENT record, or empty.
  std::string name() const;

  bool operator==(const ExperimentDescription&) const = default;
};

ExperimentDescription parse_description(std::string_view text);
std::string serialize_record(const Record& record);
std::string serialize_description(const ExperimentDescription& desc);

// ---- query -----------------------------------------------------------------

enum class Comparator { Eq, Ne, Lt, Le, Gt, Ge };

struct FieldPredicate {
  std::size_t index = 0;
  Comparator op = Comparator::Eq;
  Value literal = Value::string("");
};

struct Selector {
  std::string keyword;
  std::vector<FieldPredicate> predicates;
};

// "KEYWORD [INDEX OP LITERAL]..." e.g. `TISSUE 0 == D4I 1 != "x y"`.
Selector parse_selector(std::string_view text);

bool matches(const Record& record, const Selector& selector);

// Matching records across all descriptions, in document order.
std::vector<Record> query_records(std::span<const ExperimentDescription> descs,
                                  const Selector& selector);

// ---- diff ------------------------------------------------------------------

struct DiffEntry {
  enum class Kind { Changed, Added, Removed };
  using Payload = std::variant<Value, Record>;

  Kind kind = Kind::Changed;
  // Locator: keyword plus the record's ordinal among records with that keyword
  // (in `a` for changed/removed, in `b` for added).
  std::string keyword;
  std::size_t ordinal = 0;
  // Set for field-level entries, empty for whole-record entries.
  std::optional<std::size_t> field;
  std::optional<Payload> before;
  std::optional<Payload> after;
  // Index in `b` where an added record lives.
  std::optional<std::size_t> position;

  bool operator==(const DiffEntry&) const = default;
};

// Records are aligned by (keyword, ordinal). Aligned records whose relative
// order differs between a and b are reported as removed + added so that the
// diff is empty exactly when a == b.
std::vector<DiffEntry> diff_descriptions(const ExperimentDescription& a,
                                         const ExperimentDescription& b);

// Rebuilds b from a and diff_descriptions(a, b).
ExperimentDescription apply_diff(const ExperimentDescription& a,
                                 std::span<const DiffEntry> diff);

std::string render_diff(std::span<const DiffEntry> diff);

}  // namespace espresso::descriptor
