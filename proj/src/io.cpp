#include "daycare/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace daycare {
namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  for (auto& c : out) {
    const auto first = c.find_first_not_of(" \t");
    const auto last = c.find_last_not_of(" \t");
    c = first == std::string::npos ? std::string() : c.substr(first, last - first + 1);
  }
  return out;
}

std::string where(const Table& t, std::size_t row, const std::string& col) {
  return t.source + ":" + std::to_string(t.lines[row]) + " column " + col;
}

std::int64_t int_at(const Table& t, std::size_t row, const std::string& col) {
  return parse_int(t.rows[row][t.column(col)], where(t, row, col));
}

double real_at(const Table& t, std::size_t row, const std::string& col) {
  return parse_real(t.rows[row][t.column(col)], where(t, row, col));
}

bool flag_at(const Table& t, std::size_t row, const std::string& col) {
  const std::int64_t v = int_at(t, row, col);
  if (v != 0 && v != 1) throw DataError(where(t, row, col) + ": expected 0 or 1");
  return v == 1;
}

std::string z_column(int k) { return "z_" + std::string(kCovariateNames[k]); }

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

void Metadata::set(const std::string& key, std::string value) {
  for (auto& [k, v] : entries) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries.emplace_back(key, std::move(value));
}

std::optional<std::string> Metadata::get(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string format_metadata(const Metadata& metadata) {
  std::string out;
  for (const auto& [k, v] : metadata.entries) out += "# " + k + "=" + v + "\n";
  return out;
}

std::optional<std::size_t> Table::find_column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

std::size_t Table::column(const std::string& name) const {
  if (auto c = find_column(name)) return *c;
  throw DataError(source + ": missing column '" + name + "'");
}

Table read_table(std::istream& in, const std::string& source) {
  Table t;
  t.source = source;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (t.header.empty() && eq != std::string::npos) {
        const auto start = line.find_first_not_of("# ");
        t.metadata.set(line.substr(start, eq - start), line.substr(eq + 1));
      }
      continue;
    }
    auto cells = split_row(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw DataError(source + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, found " +
                      std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
    t.lines.push_back(lineno);
  }
  if (t.header.empty()) throw DataError(source + ": missing header row");
  return t;
}

Table read_table_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_table(in, path.string());
}

std::int64_t parse_int(const std::string& text, const std::string& where) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError(where + ": expected an integer, found '" + text + "'");
  }
  return v;
}

double parse_real(const std::string& text, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError(where + ": expected a number, found '" + text + "'");
  }
  return v;
}

std::string format_real(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

Market market_from_tables(const Table& daycares, const Table& children, const Table& families,
                          const Table& rols) {
  std::vector<Daycare> dcs;
  for (std::size_t r = 0; r < daycares.rows.size(); ++r) {
    Daycare d;
    d.id = FacilityId{int_at(daycares, r, "id")};
    d.kind = facility_kind_from_string(daycares.rows[r][daycares.column("kind")]);
    d.lat = real_at(daycares, r, "lat");
    d.lon = real_at(daycares, r, "lon");
    for (int g = 0; g < kNumGrades; ++g) {
      const std::string col = "cap_age" + std::to_string(g);
      const std::string& cell = daycares.rows[r][daycares.column(col)];
      if (!cell.empty()) d.capacity[g] = static_cast<int>(parse_int(cell, where(daycares, r, col)));
    }
    dcs.push_back(d);
  }

  std::vector<Child> kids;
  std::map<FamilyId, std::vector<ChildId>> members;
  std::map<ChildId, FamilyId> owner;
  for (std::size_t r = 0; r < children.rows.size(); ++r) {
    Child c;
    c.id = ChildId{int_at(children, r, "id")};
    c.family_id = FamilyId{int_at(children, r, "family_id")};
    const std::int64_t g = int_at(children, r, "grade");
    try {
      c.grade = Grade(static_cast<int>(g));
    } catch (const DomainError& e) {
      throw DataError(where(children, r, "grade") + ": " + e.what());
    }
    c.current_placement = FacilityId{int_at(children, r, "current_placement")};
    members[c.family_id].push_back(c.id);
    owner[c.id] = c.family_id;
    kids.push_back(c);
  }

  std::map<ChildId, std::vector<std::pair<std::int64_t, FacilityId>>> lists;
  for (std::size_t r = 0; r < rols.rows.size(); ++r) {
    const ChildId c{int_at(rols, r, "child_id")};
    if (!owner.count(c)) {
      throw DataError(where(rols, r, "child_id") + ": unknown child " + std::to_string(c.value));
    }
    lists[c].emplace_back(int_at(rols, r, "rank"), FacilityId{int_at(rols, r, "facility_id")});
  }

  std::vector<Family> fams;
  for (std::size_t r = 0; r < families.rows.size(); ++r) {
    Family f;
    f.id = FamilyId{int_at(families, r, "id")};
    f.base_score = static_cast<int>(int_at(families, r, "base_score"));
    f.joint_required = flag_at(families, r, "joint_required");
    for (int k = 0; k < kNumCovariates; ++k) f.z[k] = flag_at(families, r, z_column(k));
    f.lat = real_at(families, r, "lat");
    f.lon = real_at(families, r, "lon");
    if (auto it = members.find(f.id); it != members.end()) f.children = it->second;
    for (ChildId c : f.children) {
      auto it = lists.find(c);
      if (it == lists.end()) continue;
      auto entries = it->second;
      std::stable_sort(entries.begin(), entries.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].first == entries[i - 1].first) {
          throw DataError(rols.source + ": child " + std::to_string(c.value) +
                          " has duplicate rank " + std::to_string(entries[i].first));
        }
      }
      auto& rol = f.rols[c];
      for (const auto& e : entries) rol.push_back(e.second);
    }
    fams.push_back(std::move(f));
  }

  std::optional<std::uint64_t> seed;
  if (auto s = daycares.metadata.get("seed")) {
    seed = static_cast<std::uint64_t>(parse_int(*s, daycares.source + " metadata seed"));
  }
  return Market(std::move(dcs), std::move(kids), std::move(fams), seed);
}

Market read_market(const std::filesystem::path& dir) {
  return market_from_tables(read_table_file(dir / kDaycaresFile), read_table_file(dir / kChildrenFile),
                            read_table_file(dir / kFamiliesFile), read_table_file(dir / kRolsFile));
}

void write_daycares(std::ostream& out, const Market& market) {
  out << "id,kind,lat,lon";
  for (int g = 0; g < kNumGrades; ++g) out << ",cap_age" << g;
  out << '\n';
  for (const Daycare& d : market.daycares()) {
    out << d.id.value << ',' << to_string(d.kind) << ',' << format_real(d.lat) << ','
        << format_real(d.lon);
    for (const auto& cap : d.capacity) {
      out << ',';
      if (cap) out << *cap;
    }
    out << '\n';
  }
}

void write_children(std::ostream& out, const Market& market) {
  out << "id,family_id,grade,current_placement\n";
  for (const Child& c : market.children()) {
    out << c.id.value << ',' << c.family_id.value << ',' << c.grade.value() << ','
        << c.current_placement.value << '\n';
  }
}

void write_families(std::ostream& out, const Market& market) {
  out << "id,base_score,joint_required";
  for (int k = 0; k < kNumCovariates; ++k) out << ',' << z_column(k);
  out << ",lat,lon\n";
  for (const Family& f : market.families()) {
    out << f.id.value << ',' << f.base_score << ',' << (f.joint_required ? 1 : 0);
    for (bool z : f.z) out << ',' << (z ? 1 : 0);
    out << ',' << format_real(f.lat) << ',' << format_real(f.lon) << '\n';
  }
}

void write_rols(std::ostream& out, const Market& market) {
  out << "child_id,rank,facility_id\n";
  for (const Family& f : market.families()) {
    for (const auto& [child, rol] : f.rols) {
      for (std::size_t i = 0; i < rol.size(); ++i) {
        out << child.value << ',' << i + 1 << ',' << rol[i].value << '\n';
      }
    }
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw IoError(path.string() + " exists; pass --force to overwrite");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto out = open_output(path);
  out << content;
  if (!out) throw IoError("failed writing " + path.string());
}

void write_market(const std::filesystem::path& dir, const Market& market, const Metadata& metadata,
                  bool force) {
  const std::string head = format_metadata(metadata);
  auto emit = [&](const char* name, void (*writer)(std::ostream&, const Market&)) {
    std::ostringstream body;
    writer(body, market);
    write_text_file(dir / name, head + body.str(), force);
  };
  emit(kDaycaresFile, write_daycares);
  emit(kChildrenFile, write_children);
  emit(kFamiliesFile, write_families);
  emit(kRolsFile, write_rols);
}

Matching matching_from_table(const Table& table, const Market& market) {
  Matching m = Matching::initial(market);
  std::vector<bool> seen(market.children().size(), false);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const ChildId c{int_at(table, r, "child_id")};
    auto ci = market.find_child(c);
    if (!ci) throw DataError(where(table, r, "child_id") + ": unknown child");
    const FacilityId d{int_at(table, r, "facility_id")};
    if (!market.find_facility(d)) throw DataError(where(table, r, "facility_id") + ": unknown facility");
    if (!market.is_applying(*ci) && d != market.children()[*ci].current_placement) {
      throw DataError(where(table, r, "facility_id") + ": non-applying child moved");
    }
    seen[*ci] = true;
    m.assign(*ci, d);
  }
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (!seen[c] && market.is_applying(c)) {
      throw DataError(table.source + ": no row for applying child " +
                      std::to_string(market.children()[c].id.value));
    }
  }
  return m;
}

Matching read_matching(const std::filesystem::path& path, const Market& market) {
  return matching_from_table(read_table_file(path), market);
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[h & 0xF];
    h >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

}  // namespace daycare
