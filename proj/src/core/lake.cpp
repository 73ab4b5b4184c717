#include "core/lake.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/parallel.hpp"

namespace lakeorg {

using json = nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

DataLake::DataLake(std::size_t dim, std::vector<TableRecord> records,
                   std::vector<std::string>* warnings)
    : dim_(dim) {
  auto warn = [&](std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
  };

  std::set<std::string> tag_set;
  for (auto& rec : records) {
    std::erase_if(rec.columns, [&](const TableRecord::Column& col) {
      if (col.topic.covered() && !col.values.empty()) return false;
      warn("attribute " + col.id + " of table " + rec.id + " has no embedded values; dropped");
      return true;
    });
    for (const auto& col : rec.columns) {
      if (col.topic.dim() != dim_) {
        fail(ErrorCode::dimension_mismatch,
             "attribute " + col.id + " has topic dimension " + std::to_string(col.topic.dim()));
      }
      tag_set.insert(col.tags.begin(), col.tags.end());
    }
    if (rec.columns.empty()) continue;
    tag_set.insert(rec.tags.begin(), rec.tags.end());
  }
  tag_names_.assign(tag_set.begin(), tag_set.end());
  for (TagId t = 0; t < tag_names_.size(); ++t) tag_lookup_.emplace(tag_names_[t], t);
  tag_index_.resize(tag_names_.size());

  auto tag_ids = [&](const std::vector<std::string>& names) {
    std::vector<TagId> ids;
    for (const auto& n : names) ids.push_back(tag_lookup_.at(n));
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
  };

  for (auto& rec : records) {
    if (rec.columns.empty()) {
      warn("table " + rec.id + " has no textual attribute with embedded values; excluded");
      continue;
    }
    if (table_lookup_.contains(rec.id)) fail(ErrorCode::invalid_argument, "duplicate table id " + rec.id);
    const auto ti = static_cast<TableIndex>(tables_.size());
    Table table;
    table.id = rec.id;
    table.name = rec.name;
    std::vector<std::string> all_tags = rec.tags;
    for (auto& col : rec.columns) {
      if (attr_lookup_.contains(col.id)) fail(ErrorCode::invalid_argument, "duplicate attribute id " + col.id);
      const auto ai = static_cast<AttrIndex>(attributes_.size());
      Attribute attr;
      attr.id = col.id;
      attr.table = ti;
      attr.name = col.name;
      attr.values = sorted_unique(std::move(col.values));
      attr.topic = std::move(col.topic);
      attr.tags = tag_ids(col.tags);
      all_tags.insert(all_tags.end(), col.tags.begin(), col.tags.end());
      for (TagId t : attr.tags) tag_index_[t].push_back(ai);
      attr_lookup_.emplace(attr.id, ai);
      table.attributes.push_back(ai);
      attributes_.push_back(std::move(attr));
    }
    table.tags = tag_ids(all_tags);
    table_lookup_.emplace(table.id, ti);
    tables_.push_back(std::move(table));
  }
}

std::optional<TagId> DataLake::find_tag(std::string_view name) const {
  auto it = tag_lookup_.find(std::string(name));
  if (it == tag_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<AttrIndex> DataLake::find_attribute(std::string_view id) const {
  auto it = attr_lookup_.find(std::string(id));
  if (it == attr_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<TableIndex> DataLake::find_table(std::string_view id) const {
  auto it = table_lookup_.find(std::string(id));
  if (it == table_lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> DataLake::data_of_tag(std::string_view tag) const {
  std::vector<std::string> out;
  if (auto t = find_tag(tag)) {
    for (AttrIndex a : data(*t)) out.push_back(attributes_[a].id);
  }
  return out;
}

std::size_t DataLake::association_count() const {
  std::size_t n = 0;
  for (const auto& a : attributes_) n += a.tags.size();
  return n;
}

std::vector<TableRecord> DataLake::records() const {
  std::vector<TableRecord> out;
  out.reserve(tables_.size());
  for (const auto& table : tables_) {
    TableRecord rec;
    rec.id = table.id;
    rec.name = table.name;
    for (TagId t : table.tags) rec.tags.push_back(tag_names_[t]);
    for (AttrIndex a : table.attributes) {
      const auto& attr = attributes_[a];
      TableRecord::Column col;
      col.id = attr.id;
      col.name = attr.name;
      col.values = attr.values;
      col.topic = attr.topic;
      for (TagId t : attr.tags) col.tags.push_back(tag_names_[t]);
      rec.columns.push_back(std::move(col));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

// --- CSV -------------------------------------------------------------------

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (field_started || !field.empty() || !row.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        row.clear();
        field.clear();
        field_started = false;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) fail(ErrorCode::parse, "unterminated quoted CSV field");
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_escape(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\"\r\n") != std::string_view::npos ||
      (!field.empty() && (std::isspace(static_cast<unsigned char>(field.front())) ||
                          std::isspace(static_cast<unsigned char>(field.back()))));
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

bool looks_numeric(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  double x;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

// --- ingest ----------------------------------------------------------------

namespace {

struct MetadataRecord {
  std::string table_id;
  std::string name;
  std::string csv_path;
  std::vector<std::string> tags;
  std::map<std::string, std::vector<std::string>> column_tags;
};

std::vector<MetadataRecord> read_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read metadata file " + path.string());
  std::vector<MetadataRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      MetadataRecord rec;
      rec.table_id = j.at("table_id").get<std::string>();
      rec.name = j.value("name", rec.table_id);
      rec.csv_path = j.at("csv_path").get<std::string>();
      rec.tags = j.value("tags", std::vector<std::string>{});
      if (j.contains("column_tags")) {
        rec.column_tags = j.at("column_tags").get<std::map<std::string, std::vector<std::string>>>();
      }
      out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      fail(ErrorCode::parse, path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::optional<TableRecord> read_table(const MetadataRecord& meta,
                                      const std::filesystem::path& tables_dir,
                                      const EmbeddingStore& store, const IngestOptions& options,
                                      std::vector<std::string>& notes) {
  std::filesystem::path csv = meta.csv_path;
  if (csv.is_relative()) csv = tables_dir / csv;
  if (!std::filesystem::exists(csv)) {
    notes.push_back("table " + meta.table_id + ": CSV " + csv.string() + " not found; skipped");
    return std::nullopt;
  }
  const auto rows = parse_csv(read_file(csv));
  if (rows.empty()) {
    notes.push_back("table " + meta.table_id + ": empty CSV; skipped");
    return std::nullopt;
  }
  const auto& header = rows.front();
  const std::string stem = csv.stem().string();

  TableRecord rec;
  rec.id = meta.table_id;
  rec.name = meta.name;
  rec.tags = meta.tags;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::vector<std::string> cells;
    std::size_t numeric = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (c >= rows[r].size() || trim(rows[r][c]).empty()) continue;
      if (looks_numeric(rows[r][c])) ++numeric;
      cells.push_back(rows[r][c]);
    }
    if (cells.empty()) continue;
    const double text_fraction =
        1.0 - static_cast<double>(numeric) / static_cast<double>(cells.size());
    if (text_fraction < options.text_threshold) continue;

    TableRecord::Column col;
    col.id = stem + "." + std::to_string(c);
    col.name = header[c];
    col.values = sorted_unique(std::move(cells));
    col.topic = topic_vector(col.values, store);
    auto ct = meta.column_tags.find(header[c]);
    col.tags = ct != meta.column_tags.end() ? ct->second : meta.tags;
    rec.columns.push_back(std::move(col));
  }
  if (rec.columns.empty()) {
    notes.push_back("table " + meta.table_id + ": no textual column; excluded");
  }
  return rec;
}

}  // namespace

DataLake ingest(const std::filesystem::path& tables_dir, const std::filesystem::path& metadata,
                const EmbeddingStore& store, const IngestOptions& options,
                std::vector<std::string>* warnings) {
  const auto meta = read_metadata(metadata);
  std::vector<std::optional<TableRecord>> parsed(meta.size());
  std::vector<std::vector<std::string>> notes(meta.size());
  parallel_for(meta.size(), [&](std::size_t i) {
    parsed[i] = read_table(meta[i], tables_dir, store, options, notes[i]);
  });

  std::vector<TableRecord> records;
  for (std::size_t i = 0; i < meta.size(); ++i) {
    if (warnings) warnings->insert(warnings->end(), notes[i].begin(), notes[i].end());
    if (parsed[i] && !parsed[i]->columns.empty()) records.push_back(std::move(*parsed[i]));
  }
  return DataLake(store.dim(), std::move(records), warnings);
}

void export_tables(const DataLake& lake, const std::filesystem::path& dir) {
  const auto tables_dir = dir / "tables";
  std::filesystem::create_directories(tables_dir);
  std::ofstream meta(dir / "metadata.jsonl", std::ios::binary);
  if (!meta) fail(ErrorCode::io, "cannot write " + (dir / "metadata.jsonl").string());

  for (const auto& table : lake.tables()) {
    const std::string file = table.id + ".csv";
    std::ofstream out(tables_dir / file, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write " + (tables_dir / file).string());
    std::size_t rows = 0;
    for (std::size_t c = 0; c < table.attributes.size(); ++c) {
      out << (c ? "," : "") << csv_escape(lake.attribute(table.attributes[c]).name);
      rows = std::max(rows, lake.attribute(table.attributes[c]).values.size());
    }
    out << '\n';
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < table.attributes.size(); ++c) {
        const auto& values = lake.attribute(table.attributes[c]).values;
        if (c) out << ',';
        if (r < values.size()) out << csv_escape(values[r]);
      }
      out << '\n';
    }

    json rec;
    rec["table_id"] = table.id;
    rec["name"] = table.name;
    rec["csv_path"] = file;
    std::vector<std::string> tags;
    for (TagId t : table.tags) tags.push_back(lake.tag_name(t));
    rec["tags"] = tags;
    json column_tags = json::object();
    bool differs = false;
    for (AttrIndex a : table.attributes) {
      const auto& attr = lake.attribute(a);
      std::vector<std::string> names;
      for (TagId t : attr.tags) names.push_back(lake.tag_name(t));
      column_tags[attr.name] = names;
      differs = differs || attr.tags != table.tags;
    }
    if (differs) rec["column_tags"] = column_tags;
    meta << rec.dump() << '\n';
  }
}

// --- persistence -------------------------------------------------------------

void save_lake(const DataLake& lake, const std::filesystem::path& path) {
  json j;
  j["format"] = "lakeorg-lake/1";
  j["dim"] = lake.dim();
  json tables = json::array();
  for (const auto& rec : lake.records()) {
    json t;
    t["id"] = rec.id;
    t["name"] = rec.name;
    t["tags"] = rec.tags;
    json cols = json::array();
    for (const auto& col : rec.columns) {
      cols.push_back({{"id", col.id},
                      {"name", col.name},
                      {"tags", col.tags},
                      {"values", col.values},
                      {"support", col.topic.support},
                      {"mean", col.topic.mean}});
    }
    t["attributes"] = std::move(cols);
    tables.push_back(std::move(t));
  }
  j["tables"] = std::move(tables);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << j.dump() << '\n';
}

DataLake load_lake(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    const json j = json::parse(text);
    const auto dim = j.at("dim").get<std::size_t>();
    std::vector<TableRecord> records;
    for (const auto& t : j.at("tables")) {
      TableRecord rec;
      rec.id = t.at("id").get<std::string>();
      rec.name = t.at("name").get<std::string>();
      rec.tags = t.at("tags").get<std::vector<std::string>>();
      for (const auto& c : t.at("attributes")) {
        TableRecord::Column col;
        col.id = c.at("id").get<std::string>();
        col.name = c.at("name").get<std::string>();
        col.tags = c.at("tags").get<std::vector<std::string>>();
        col.values = c.at("values").get<std::vector<std::string>>();
        col.topic.support = c.at("support").get<std::size_t>();
        col.topic.mean = c.at("mean").get<std::vector<double>>();
        rec.columns.push_back(std::move(col));
      }
      records.push_back(std::move(rec));
    }
    return DataLake(dim, std::move(records));
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, path.string() + ": " + e.what());
  }
}

DataLake subset(const DataLake& lake, std::span<const AttrIndex> keep) {
  std::set<std::string> ids;
  for (AttrIndex a : keep) ids.insert(lake.attribute(a).id);
  auto records = lake.records();
  std::vector<TableRecord> out;
  for (auto& rec : records) {
    std::erase_if(rec.columns, [&](const auto& col) { return !ids.contains(col.id); });
    if (rec.columns.empty()) continue;
    std::vector<std::string> tags;
    for (const auto& col : rec.columns) tags.insert(tags.end(), col.tags.begin(), col.tags.end());
    rec.tags = sorted_unique(std::move(tags));
    out.push_back(std::move(rec));
  }
  return DataLake(lake.dim(), std::move(out));
}

DataLake strip_tags(const DataLake& lake) {
  auto records = lake.records();
  for (auto& rec : records) {
    rec.tags.clear();
    for (auto& col : rec.columns) col.tags.clear();
  }
  return DataLake(lake.dim(), std::move(records));
}

}  // namespace lakeorg
