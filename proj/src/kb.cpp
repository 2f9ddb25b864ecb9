#include "infobot/kb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "infobot/rng.hpp"

namespace infobot {

KbParseError::KbParseError(std::size_t line, const std::string& what)
    : KbError("line " + std::to_string(line) + ": " + what), line_(line) {}

void KbSplitSpec::validate() const {
  if (n_rows < 1) throw std::invalid_argument("KbSplitSpec: n_rows must be >= 1");
  if (n_slots < 1) throw std::invalid_argument("KbSplitSpec: n_slots must be >= 1");
  if (max_vocab < 1) throw std::invalid_argument("KbSplitSpec: max_vocab must be >= 1");
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0))
    throw std::invalid_argument("KbSplitSpec: missing_fraction must be in [0, 1)");
}

KbSplitSpec KbSplitSpec::named(std::string_view split, std::uint64_t seed) {
  if (split == "small") return {277, 6, 17, 0.2, seed};
  if (split == "medium") return {428, 6, 68, 0.2, seed};
  if (split == "large") return {857, 6, 101, 0.2, seed};
  if (split == "xlarge" || split == "x-large") return {3523, 6, 251, 0.2, seed};
  throw std::invalid_argument("unknown KB split: " + std::string(split));
}

void BeliefState::validate(const KbTable& kb, double tol) const {
  if (slot_dists.size() != kb.n_slots() || know_probs.size() != kb.n_slots())
    throw std::invalid_argument("BeliefState: slot count mismatch");
  for (std::size_t j = 0; j < kb.n_slots(); ++j) {
    const auto& p = slot_dists[j];
    if (p.size() != kb.vocab_size(j)) throw std::invalid_argument("BeliefState: vocabulary size mismatch");
    double s = 0.0;
    for (double x : p) {
      if (!(x >= 0.0)) throw std::invalid_argument("BeliefState: negative probability");
      s += x;
    }
    if (std::abs(s - 1.0) > tol) throw std::invalid_argument("BeliefState: distribution does not sum to 1");
    if (!(know_probs[j] >= 0.0 && know_probs[j] <= 1.0))
      throw std::invalid_argument("BeliefState: know probability outside [0, 1]");
  }
}

KbTable::KbTable(std::vector<std::string> slot_names,
                 const std::vector<std::vector<std::optional<std::string>>>& cells,
                 std::vector<std::string> display_names)
    : n_rows_(cells.size()), slot_names_(std::move(slot_names)), display_names_(std::move(display_names)) {
  const std::size_t m = slot_names_.size();
  if (m == 0) throw KbError("KB has no slots");
  if (n_rows_ == 0) throw KbError("KB has no rows");
  for (auto& s : slot_names_) s = normalize_value(s);
  if (display_names_.empty()) {
    for (const auto& s : slot_names_) {
      std::string d = s;
      std::replace(d.begin(), d.end(), '_', ' ');
      display_names_.push_back(d);
    }
  }
  if (display_names_.size() != m) throw KbError("display name count does not match slot count");
  for (const auto& d : display_names_) display_tokens_.push_back(tokenize(d));

  vocabs_.resize(m);
  value_index_.resize(m);
  for (std::size_t i = 0; i < n_rows_; ++i) {
    if (cells[i].size() != m) throw KbError("row " + std::to_string(i) + " has wrong field count");
  }
  for (std::size_t j = 0; j < m; ++j) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < n_rows_; ++i) {
      if (cells[i][j]) seen.insert(normalize_value(*cells[i][j]));
    }
    vocabs_[j].assign(seen.begin(), seen.end());
    for (std::size_t v = 0; v < vocabs_[j].size(); ++v) value_index_[j].emplace(vocabs_[j][v], static_cast<ValueId>(v));
  }

  cells_.assign(n_rows_ * m, kMissing);
  counts_.resize(m);
  missing_.resize(m);
  priors_.resize(m);
  by_value_.resize(m);
  value_tokens_.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    counts_[j].assign(vocabs_[j].size(), 0);
    by_value_[j].resize(vocabs_[j].size());
    for (const auto& v : vocabs_[j]) value_tokens_[j].push_back(tokenize(v));
  }
  for (std::size_t i = 0; i < n_rows_; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!cells[i][j]) {
        missing_[j].push_back(i);
        continue;
      }
      const ValueId v = value_index_[j].at(normalize_value(*cells[i][j]));
      cells_[i * m + j] = v;
      ++counts_[j][static_cast<std::size_t>(v)];
      by_value_[j][static_cast<std::size_t>(v)].push_back(i);
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    const double observed = static_cast<double>(n_rows_ - missing_[j].size());
    priors_[j].resize(vocabs_[j].size());
    for (std::size_t v = 0; v < vocabs_[j].size(); ++v) {
      priors_[j][v] = static_cast<double>(counts_[j][v]) / observed;
    }
  }
}

std::optional<std::size_t> KbTable::find_slot(std::string_view name) const {
  const std::string key = normalize_value(name);
  for (std::size_t j = 0; j < slot_names_.size(); ++j)
    if (slot_names_[j] == key) return j;
  return std::nullopt;
}

std::optional<ValueId> KbTable::find_value(std::size_t j, std::string_view value) const {
  const auto& idx = value_index_.at(j);
  auto it = idx.find(normalize_value(value));
  if (it == idx.end()) return std::nullopt;
  return it->second;
}

ValueId KbTable::truth(RowIndex i, std::size_t j) const {
  if (!has_truth()) return cell(i, j);
  return truth_[i * n_slots() + j];
}

void KbTable::attach_truth(std::vector<ValueId> truth) {
  if (truth.size() != n_rows_ * n_slots()) throw KbError("truth table has wrong shape");
  for (std::size_t i = 0; i < n_rows_; ++i) {
    for (std::size_t j = 0; j < n_slots(); ++j) {
      const ValueId t = truth[i * n_slots() + j];
      if (t < 0 || static_cast<std::size_t>(t) >= vocab_size(j)) throw KbError("truth value outside slot vocabulary");
      if (!is_missing(i, j) && cell(i, j) != t) throw KbError("truth table disagrees with an observed cell");
    }
  }
  truth_ = std::move(truth);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

// Splits one logical CSV record. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      continue;
    } else if (c == '\n') {
      ++line;
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) throw KbParseError(line, "unterminated quoted field");
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

bool blank(const std::vector<std::string>& fields) {
  return fields.size() == 1 && normalize_value(fields[0]).empty();
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

KbTable load_csv(std::istream& in, std::string_view missing_token) {
  std::vector<std::string> fields;
  std::size_t line = 1;
  std::vector<std::string> header;
  while (read_record(in, fields, line)) {
    if (!blank(fields)) {
      header = fields;
      break;
    }
  }
  if (header.empty()) throw KbError("empty KB: no header row");
  const std::string missing = normalize_value(missing_token);
  std::vector<std::vector<std::optional<std::string>>> rows;
  std::size_t record_line = line;
  while (read_record(in, fields, line)) {
    if (blank(fields)) {
      record_line = line;
      continue;
    }
    if (fields.size() != header.size()) {
      throw KbParseError(record_line, "expected " + std::to_string(header.size()) + " fields, found " +
                                          std::to_string(fields.size()));
    }
    std::vector<std::optional<std::string>> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      std::string v = normalize_value(f);
      if (v == missing || v.empty()) {
        row.emplace_back(std::nullopt);
      } else {
        row.emplace_back(std::move(v));
      }
    }
    rows.push_back(std::move(row));
    record_line = line;
  }
  if (rows.empty()) throw KbError("empty KB: header but no entity rows");
  return KbTable(std::move(header), rows);
}

KbTable load_csv_file(const std::string& path, std::string_view missing_token) {
  std::ifstream in(path);
  if (!in) throw KbError("cannot open KB file: " + path);
  return load_csv(in, missing_token);
}

void save_csv(const KbTable& kb, std::ostream& out, std::string_view missing_token) {
  for (std::size_t j = 0; j < kb.n_slots(); ++j) out << (j ? "," : "") << quote_csv(kb.slot_name(j));
  out << '\n';
  for (RowIndex i = 0; i < kb.n_rows(); ++i) {
    for (std::size_t j = 0; j < kb.n_slots(); ++j) {
      if (j) out << ',';
      if (kb.is_missing(i, j)) {
        out << missing_token;
      } else {
        out << quote_csv(kb.value(j, kb.cell(i, j)));
      }
    }
    out << '\n';
  }
}

void save_truth_csv(const KbTable& kb, std::ostream& out) {
  if (!kb.has_truth()) throw KbError("KB has no ground truth to save");
  for (std::size_t j = 0; j < kb.n_slots(); ++j) out << (j ? "," : "") << quote_csv(kb.slot_name(j));
  out << '\n';
  for (RowIndex i = 0; i < kb.n_rows(); ++i) {
    for (std::size_t j = 0; j < kb.n_slots(); ++j) out << (j ? "," : "") << quote_csv(kb.value(j, kb.truth(i, j)));
    out << '\n';
  }
}

void load_truth_csv(KbTable& kb, std::istream& in) {
  std::vector<std::string> fields;
  std::size_t line = 1;
  if (!read_record(in, fields, line)) throw KbError("empty truth file");
  if (fields.size() != kb.n_slots()) throw KbParseError(1, "truth header has wrong field count");
  std::vector<std::size_t> order(kb.n_slots());
  for (std::size_t c = 0; c < fields.size(); ++c) {
    auto j = kb.find_slot(fields[c]);
    if (!j) throw KbParseError(1, "unknown slot in truth header: " + fields[c]);
    order[c] = *j;
  }
  std::vector<ValueId> truth(kb.n_rows() * kb.n_slots(), kMissing);
  RowIndex i = 0;
  std::size_t record_line = line;
  while (read_record(in, fields, line)) {
    if (blank(fields)) continue;
    if (fields.size() != kb.n_slots()) throw KbParseError(record_line, "wrong field count in truth file");
    if (i >= kb.n_rows()) throw KbParseError(record_line, "truth file has more rows than the KB");
    for (std::size_t c = 0; c < fields.size(); ++c) {
      auto v = kb.find_value(order[c], fields[c]);
      if (!v) throw KbParseError(record_line, "truth value not in slot vocabulary: " + fields[c]);
      truth[i * kb.n_slots() + order[c]] = *v;
    }
    ++i;
    record_line = line;
  }
  if (i != kb.n_rows()) throw KbError("truth file has fewer rows than the KB");
  kb.attach_truth(std::move(truth));
}

// ---------------------------------------------------------------------------
// Synthetic generation

namespace {

const std::vector<std::string> kActorFirst = {
    "bill",   "tom",    "meryl",  "denzel", "kate",   "morgan", "julia",  "brad",   "scarlett", "keanu",
    "emma",   "harrison", "sandra", "hugh", "natalie", "liam",  "viola",  "russell", "cate",   "samuel",
    "nicole", "jodie",  "gary",   "helen",  "ewan",   "judi",   "colin",  "olivia", "jeff",   "halle"};
const std::vector<std::string> kActorLast = {
    "murray", "cruise", "streep", "washington", "winslet", "freeman", "roberts", "pitt",  "johansson", "reeves",
    "stone",  "ford",   "bullock", "jackman", "portman", "neeson", "davis",  "crowe",  "blanchett", "jackson",
    "kidman", "foster", "oldman", "mirren", "mcgregor", "dench", "firth", "colman", "bridges", "berry",
    "hanks",  "hardy",  "moore",  "ruffalo"};
const std::vector<std::string> kDirectorFirst = {
    "sofia", "martin", "steven", "kathryn", "quentin", "greta", "ridley", "ang", "wes", "jane",
    "ridley", "spike", "agnes", "bong", "guillermo", "chloe", "denis", "ava", "taika", "sam",
    "alfonso", "francis", "lana", "akira", "werner", "claire", "pedro", "mira", "hayao", "sabine"};
const std::vector<std::string> kDirectorLast = {
    "coppola", "scorsese", "spielberg", "bigelow", "tarantino", "gerwig", "scott", "lee", "anderson", "campion",
    "varda", "joon-ho", "toro", "zhao", "villeneuve", "duvernay", "waititi", "raimi", "cuaron", "wachowski",
    "kurosawa", "herzog", "almodovar", "nair", "miyazaki", "kubrick", "nolan", "fincher", "lynch",
    "jarmusch", "haneke", "bergman"};
const std::vector<std::string> kGenres = {
    "comedy",   "drama",   "thriller", "horror",    "romance",  "action",  "adventure", "animation",
    "crime",    "documentary", "fantasy", "mystery", "musical", "western", "biography", "family",
    "war",      "sci-fi",  "sport",    "history",   "noir",     "satire",  "superhero", "heist"};
const std::vector<std::string> kGenreModifiers = {
    "dark", "romantic", "psychological", "historical", "epic", "teen", "absurdist", "gothic",
    "slapstick", "political", "cosmic", "urban", "folk", "silent", "erotic", "neo"};
const std::vector<std::string> kMpaa = {
    "g", "pg", "pg-13", "r", "nc-17", "unrated", "tv-g", "tv-pg", "tv-14",
    "tv-ma", "tv-y", "tv-y7", "approved", "passed", "m", "nr", "gp"};
const std::vector<std::string> kSyllables = {
    "ba", "ko", "ti", "ru", "me", "sa", "lo", "ne", "vi", "du", "pa", "zo", "fe", "ki", "mo", "ta", "gu", "ri"};

std::vector<std::string> shuffled_take(std::vector<std::string> pool, std::size_t n, Rng& rng) {
  rng.shuffle(pool.begin(), pool.end());
  if (pool.size() < n) throw std::logic_error("value pool too small");
  pool.resize(n);
  return pool;
}

std::vector<std::string> pair_pool(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& x : a)
    for (const auto& y : b)
      if (seen.insert(x + " " + y).second) out.push_back(x + " " + y);
  return out;
}

std::vector<std::string> pseudo_words(std::size_t n, std::size_t salt) {
  std::vector<std::string> out;
  const std::size_t s = kSyllables.size();
  for (std::size_t k = 0; out.size() < n; ++k) {
    const std::size_t x = k + salt * 7919;
    out.push_back(kSyllables[x % s] + kSyllables[(x / s) % s] + kSyllables[(x / (s * s)) % s]);
  }
  return out;
}

std::vector<std::string> slot_values(const std::string& slot, std::size_t n, std::size_t slot_index, Rng& rng) {
  std::vector<std::string> pool;
  if (slot == "actor") {
    pool = pair_pool(kActorFirst, kActorLast);
  } else if (slot == "director") {
    pool = pair_pool(kDirectorFirst, kDirectorLast);
  } else if (slot == "genre") {
    pool = kGenres;
    if (n > pool.size()) {
      for (const auto& m : kGenreModifiers)
        for (const auto& g : kGenres) pool.push_back(m + " " + g);
    }
  } else if (slot == "release_year") {
    for (int y = 1920; y < 1920 + static_cast<int>(std::max<std::size_t>(n, 97)); ++y) pool.push_back(std::to_string(y));
  } else if (slot == "critic_rating") {
    for (int a = 1; a <= 9; ++a)
      for (int b = 0; b <= 9; ++b) pool.push_back(std::to_string(a) + "." + std::to_string(b));
    if (n > pool.size()) {
      for (int a = 1; a <= 9; ++a)
        for (int b = 0; b <= 9; ++b)
          for (int c = 1; c <= 9; ++c) pool.push_back(std::to_string(a) + "." + std::to_string(b) + std::to_string(c));
    }
  } else if (slot == "mpaa_rating") {
    pool = kMpaa;
    for (std::size_t k = 0; pool.size() < n; ++k) pool.push_back("rated-" + std::to_string(k + 1));
  } else {
    pool = pseudo_words(n, slot_index);
  }
  return shuffled_take(std::move(pool), n, rng);
}

const std::vector<std::string> kMovieSlots = {"actor", "critic_rating", "genre", "mpaa_rating", "director",
                                              "release_year"};

}  // namespace

KbTable generate_synthetic(const KbSplitSpec& spec) {
  spec.validate();
  Rng rng(splitmix64(spec.seed));
  const std::size_t n = spec.n_rows;
  const std::size_t m = spec.n_slots;
  const auto n_missing = static_cast<std::size_t>(std::floor(spec.missing_fraction * static_cast<double>(n)));

  std::vector<std::string> slots;
  for (std::size_t j = 0; j < m; ++j)
    slots.push_back(j < kMovieSlots.size() ? kMovieSlots[j] : "attribute_" + std::to_string(j + 1));

  std::vector<std::vector<std::string>> vocab(m);
  std::vector<std::vector<std::size_t>> truth(n, std::vector<std::size_t>(m));
  std::vector<std::vector<bool>> masked(n, std::vector<bool>(m, false));
  for (std::size_t j = 0; j < m; ++j) {
    vocab[j] = slot_values(slots[j], spec.max_vocab, j, rng);
    for (std::size_t i = 0; i < n; ++i) truth[i][j] = rng.below(spec.max_vocab);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    for (std::size_t k = 0; k < n_missing; ++k) masked[order[k]][j] = true;

    // Every vocabulary value appears in at least one observed cell when there
    // is room, so max_j |V^j| reaches max_vocab and masked truths stay in V^j.
    std::vector<std::size_t> seen(spec.max_vocab, 0);
    for (std::size_t i = 0; i < n; ++i)
      if (!masked[i][j]) ++seen[truth[i][j]];
    std::vector<std::size_t> observed_rows;
    for (std::size_t i = 0; i < n; ++i)
      if (!masked[i][j]) observed_rows.push_back(i);
    rng.shuffle(observed_rows.begin(), observed_rows.end());
    std::size_t cursor = 0;
    for (std::size_t v = 0; v < spec.max_vocab; ++v) {
      if (seen[v] > 0) continue;
      while (cursor < observed_rows.size() && seen[truth[observed_rows[cursor]][j]] <= 1) ++cursor;
      if (cursor == observed_rows.size()) break;
      const std::size_t row = observed_rows[cursor++];
      --seen[truth[row][j]];
      truth[row][j] = v;
      ++seen[v];
    }
    // Masked truths must be values the agent's copy can express.
    std::vector<std::size_t> present;
    for (std::size_t v = 0; v < spec.max_vocab; ++v)
      if (seen[v] > 0) present.push_back(v);
    for (std::size_t i = 0; i < n; ++i) {
      if (masked[i][j] && seen[truth[i][j]] == 0) truth[i][j] = present[rng.below(present.size())];
    }
  }

  std::vector<std::vector<std::optional<std::string>>> cells(n, std::vector<std::optional<std::string>>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (!masked[i][j]) cells[i][j] = vocab[j][truth[i][j]];
  KbTable kb(slots, cells);

  std::vector<ValueId> truth_ids(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) truth_ids[i * m + j] = *kb.find_value(j, vocab[j][truth[i][j]]);
  kb.attach_truth(std::move(truth_ids));
  return kb;
}

// ---------------------------------------------------------------------------

HardKbResult hard_kb_lookup(const KbTable& kb, const BeliefState& beliefs) {
  const std::size_t m = kb.n_slots();
  std::vector<ValueId> query(m, kMissing);
  for (std::size_t j = 0; j < m; ++j) {
    if (beliefs.know_probs[j] < kHardKbKnowThreshold) continue;
    const auto& p = beliefs.slot_dists[j];
    query[j] = static_cast<ValueId>(std::max_element(p.begin(), p.end()) - p.begin());
  }
  HardKbResult out;
  for (RowIndex i = 0; i < kb.n_rows(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < m && match; ++j) {
      if (query[j] == kMissing) continue;
      const ValueId c = kb.cell(i, j);
      match = (c == kMissing || c == query[j]);
    }
    if (match) out.rows.push_back(i);
  }
  out.bin = std::min(out.rows.size(), kHardKbBins - 1);
  return out;
}

}  // namespace infobot
