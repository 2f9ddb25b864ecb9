#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "infobot/belief_state.hpp"
#include "infobot/text.hpp"

namespace infobot {

using RowIndex = std::size_t;
using ValueId = std::int32_t;
inline constexpr ValueId kMissing = -1;

class KbError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KbParseError : public KbError {
 public:
  KbParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Parameters of a synthetic KB split.
struct KbSplitSpec {
  std::size_t n_rows = 277;
  std::size_t n_slots = 6;
  std::size_t max_vocab = 17;
  double missing_fraction = 0.2;
  std::uint64_t seed = 1;

  void validate() const;

  // "small" | "medium" | "large" | "xlarge"
  static KbSplitSpec named(std::string_view split, std::uint64_t seed = 1);
};

// Entity-centric KB: N entities by M slots with missing cells. Immutable after
// construction.
class KbTable {
 public:
  // `cells[i][j]` is the raw value or std::nullopt for a missing cell. Values
  // are normalized; each slot vocabulary is the sorted set of observed values.
  KbTable(std::vector<std::string> slot_names,
          const std::vector<std::vector<std::optional<std::string>>>& cells,
          std::vector<std::string> display_names = {});

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_slots() const { return slot_names_.size(); }

  const std::string& slot_name(std::size_t j) const { return slot_names_.at(j); }
  const std::string& display_name(std::size_t j) const { return display_names_.at(j); }
  const Tokens& display_tokens(std::size_t j) const { return display_tokens_.at(j); }
  std::optional<std::size_t> find_slot(std::string_view name) const;

  ValueId cell(RowIndex i, std::size_t j) const { return cells_[i * n_slots() + j]; }
  bool is_missing(RowIndex i, std::size_t j) const { return cell(i, j) == kMissing; }

  std::size_t vocab_size(std::size_t j) const { return vocabs_.at(j).size(); }
  const std::vector<std::string>& vocab(std::size_t j) const { return vocabs_.at(j); }
  const std::string& value(std::size_t j, ValueId v) const { return vocabs_.at(j).at(static_cast<std::size_t>(v)); }
  const Tokens& value_tokens(std::size_t j, ValueId v) const {
    return value_tokens_.at(j).at(static_cast<std::size_t>(v));
  }
  std::optional<ValueId> find_value(std::size_t j, std::string_view value) const;

  // N_j(v)
  std::size_t count(std::size_t j, ValueId v) const { return counts_.at(j).at(static_cast<std::size_t>(v)); }
  // M_j
  const std::vector<RowIndex>& missing_rows(std::size_t j) const { return missing_.at(j); }
  std::size_t missing_count(std::size_t j) const { return missing_.at(j).size(); }
  // p_j^0, proportional to N_j(v)
  std::span<const double> prior(std::size_t j) const { return priors_.at(j); }
  // Rows grouped by value id: rows_with_value(j)[v].
  const std::vector<std::vector<RowIndex>>& rows_by_value(std::size_t j) const { return by_value_.at(j); }

  // Ground truth behind the agent's copy, when known (synthetic KBs, or a
  // truth file attached to a CSV KB). Never kMissing.
  bool has_truth() const { return !truth_.empty(); }
  ValueId truth(RowIndex i, std::size_t j) const;
  void attach_truth(std::vector<ValueId> truth);  // row-major N*M

  // Dense cell matrix, row-major.
  std::span<const ValueId> cells() const { return cells_; }

 private:
  std::size_t n_rows_ = 0;
  std::vector<std::string> slot_names_;
  std::vector<std::string> display_names_;
  std::vector<Tokens> display_tokens_;
  std::vector<ValueId> cells_;
  std::vector<std::vector<std::string>> vocabs_;
  std::vector<std::vector<Tokens>> value_tokens_;
  std::vector<std::unordered_map<std::string, ValueId>> value_index_;
  std::vector<std::vector<std::size_t>> counts_;
  std::vector<std::vector<RowIndex>> missing_;
  std::vector<std::vector<double>> priors_;
  std::vector<std::vector<std::vector<RowIndex>>> by_value_;
  std::vector<ValueId> truth_;
};

inline constexpr std::string_view kDefaultMissingToken = "X";

// Parses a comma-separated KB with a header row of slot names. Quoted fields
// follow RFC 4180. Cells equal to `missing_token` become missing.
KbTable load_csv(std::istream& in, std::string_view missing_token = kDefaultMissingToken);
KbTable load_csv_file(const std::string& path, std::string_view missing_token = kDefaultMissingToken);

void save_csv(const KbTable& kb, std::ostream& out, std::string_view missing_token = kDefaultMissingToken);
// Writes the ground-truth table (no missing cells). Requires has_truth().
void save_truth_csv(const KbTable& kb, std::ostream& out);
// Reads a truth table with the same header and row count as `kb` and attaches it.
void load_truth_csv(KbTable& kb, std::istream& in);

KbTable generate_synthetic(const KbSplitSpec& spec);

struct HardKbResult {
  std::vector<RowIndex> rows;
  std::size_t bin = 0;  // 0..5, count capped at 5
};

inline constexpr double kHardKbKnowThreshold = 0.5;
inline constexpr std::size_t kHardKbBins = 6;

// Symbolic lookup: slots with q_j >= 0.5 are constrained to argmax_v p_j(v);
// missing cells match any query value.
HardKbResult hard_kb_lookup(const KbTable& kb, const BeliefState& beliefs);

}  // namespace infobot
