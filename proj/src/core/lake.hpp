#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "core/embedding.hpp"

namespace lakeorg {

using AttrIndex = std::uint32_t;
using TableIndex = std::uint32_t;
using TagId = std::uint32_t;

struct Attribute {
  std::string id;
  TableIndex table = 0;
  std::string name;
  std::vector<std::string> values;  // sorted, distinct
  TopicVector topic;
  std::vector<TagId> tags;  // sorted
};

struct Table {
  std::string id;
  std::string name;
  std::vector<AttrIndex> attributes;
  std::vector<TagId> tags;  // sorted
};

/// Flat description of one table used to assemble a lake. Tags are names.
struct TableRecord {
  struct Column {
    std::string id;
    std::string name;
    std::vector<std::string> values;
    TopicVector topic;
    std::vector<std::string> tags;
  };
  std::string id;
  std::string name;
  std::vector<std::string> tags;
  std::vector<Column> columns;
};

/// Tables, their retained textual attributes and the tag -> attributes index.
/// Immutable once assembled.
class DataLake {
 public:
  DataLake() = default;

  /// Assembles a lake. Columns with zero embedding support and tables left
  /// without columns are dropped, with a note appended to `warnings`. Table
  /// tags absorb the tags of their columns.
  DataLake(std::size_t dim, std::vector<TableRecord> records,
           std::vector<std::string>* warnings = nullptr);

  std::size_t dim() const { return dim_; }
  std::span<const Table> tables() const { return tables_; }
  std::span<const Attribute> attributes() const { return attributes_; }
  const Table& table(TableIndex i) const { return tables_[i]; }
  const Attribute& attribute(AttrIndex i) const { return attributes_[i]; }
  std::size_t tag_count() const { return tag_names_.size(); }
  const std::string& tag_name(TagId t) const { return tag_names_[t]; }
  std::span<const std::string> tag_names() const { return tag_names_; }

  std::optional<TagId> find_tag(std::string_view name) const;
  std::optional<AttrIndex> find_attribute(std::string_view id) const;
  std::optional<TableIndex> find_table(std::string_view id) const;

  /// data(t): attributes carrying tag t, ascending.
  std::span<const AttrIndex> data(TagId t) const { return tag_index_[t]; }

  /// data(t) by tag name as attribute ids; unknown tags give an empty list.
  std::vector<std::string> data_of_tag(std::string_view tag) const;

  /// Total number of attribute-tag associations.
  std::size_t association_count() const;

  /// Back to records, e.g. to derive a modified lake.
  std::vector<TableRecord> records() const;

 private:
  std::size_t dim_ = 0;
  std::vector<Table> tables_;
  std::vector<Attribute> attributes_;
  std::vector<std::string> tag_names_;
  std::vector<std::vector<AttrIndex>> tag_index_;
  std::unordered_map<std::string, TagId> tag_lookup_;
  std::unordered_map<std::string, AttrIndex> attr_lookup_;
  std::unordered_map<std::string, TableIndex> table_lookup_;
};

struct IngestOptions {
  /// A column is textual when at least this fraction of its non-empty cells
  /// fail numeric parsing.
  double text_threshold = 0.5;
};

/// Reads the newline-delimited JSON metadata and every referenced CSV.
/// Missing CSVs are skipped with a warning; an unreadable metadata file throws.
DataLake ingest(const std::filesystem::path& tables_dir, const std::filesystem::path& metadata,
                const EmbeddingStore& store, const IngestOptions& options = {},
                std::vector<std::string>* warnings = nullptr);

/// Writes one CSV per table under `dir/tables` plus `dir/metadata.jsonl`, the
/// format `ingest` reads.
void export_tables(const DataLake& lake, const std::filesystem::path& dir);

void save_lake(const DataLake& lake, const std::filesystem::path& path);
DataLake load_lake(const std::filesystem::path& path);

/// Lake restricted to the given attributes; tables left empty disappear.
DataLake subset(const DataLake& lake, std::span<const AttrIndex> keep);

/// Same lake with every table and attribute tag removed.
DataLake strip_tags(const DataLake& lake);

// CSV helpers shared with the exporter and tests.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_escape(std::string_view field);
bool looks_numeric(std::string_view cell);

}  // namespace lakeorg
