#pragma once

#include <cstddef>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sufstat/data.hpp"

namespace sufstat {

// Shortest text that parses back to the same double.
std::string format_double(double x);
// Strict full-token parse; nullopt on anything else.
std::optional<double> parse_double(std::string_view text);

// A CSV column named by header text or by zero-based index.
using ColumnRef = std::variant<std::size_t, std::string>;

struct CsvSchema {
  std::optional<ColumnRef> label;   // integer labels, -1 = unlabelled
  std::optional<ColumnRef> weight;  // non-negative row weights
  // nullopt: a header is assumed when any cell of the first line is not a number.
  std::optional<bool> header;
};

// Streams a comma-separated numeric file in batches of at most
// `batch_size` rows. Only the current batch is held in memory.
class CsvSource final : public BatchSource<DataView> {
 public:
  CsvSource(std::string path, CsvSchema schema = {}, BatchSize batch_size = std::nullopt);

  void rewind() override;
  std::optional<LoadedBatch<DataView>> next() override;

  std::size_t dim() const noexcept { return dim_; }
  bool has_labels() const noexcept { return label_col_.has_value(); }
  // Header names of the feature columns (empty without a header).
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

 private:
  std::string path_;
  std::size_t batch_size_;
  std::ifstream in_;
  std::size_t width_ = 0;
  std::size_t dim_ = 0;
  bool header_ = false;
  std::optional<std::size_t> label_col_;
  std::optional<std::size_t> weight_col_;
  std::vector<std::string> feature_names_;
  std::size_t line_no_ = 0;
  std::size_t rows_read_ = 0;
};

DataBatch read_csv(const std::string& path, const CsvSchema& schema = {});
// Writes features as x0.., then `label` and `weight` columns when present
// (weights only when some weight differs from 1).
void write_csv(std::ostream& out, const DataBatch& data);
void write_csv(const std::string& path, const DataBatch& data);

// Sequence files: blocks separated by a blank line, one comma-separated
// observation per line. Every sequence has weight 1.
class SequenceFileSource final : public BatchSource<SequenceView> {
 public:
  SequenceFileSource(std::string path, BatchSize batch_size = std::nullopt);

  void rewind() override;
  std::optional<LoadedBatch<SequenceView>> next() override;

 private:
  std::optional<Sequence> read_block();

  std::string path_;
  std::size_t batch_size_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
  std::size_t sequences_read_ = 0;
  std::optional<std::size_t> dim_;
};

SequenceBatch read_sequences(const std::string& path);
void write_sequences(std::ostream& out, const SequenceBatch& data);
void write_sequences(const std::string& path, const SequenceBatch& data);

}  // namespace sufstat
