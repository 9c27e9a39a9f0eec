#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace sufstat {

// Non-owning view of weighted rows, optionally labelled. Label -1 marks an
// unlabelled row. `offset` is the index of the first row within the epoch,
// used for error messages.
class DataView {
 public:
  DataView() = default;
  DataView(std::size_t dim, std::span<const double> values, std::span<const double> weights,
           std::span<const int> labels = {}, std::size_t offset = 0);

  std::size_t size() const noexcept { return weights_.size(); }
  bool empty() const noexcept { return weights_.empty(); }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t offset() const noexcept { return offset_; }

  std::span<const double> row(std::size_t i) const { return values_.subspan(i * dim_, dim_); }
  double weight(std::size_t i) const { return weights_[i]; }
  bool has_labels() const noexcept { return !labels_.empty(); }
  int label(std::size_t i) const { return labels_[i]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const int> labels() const noexcept { return labels_; }

  DataView slice(std::size_t begin, std::size_t end) const;

 private:
  std::size_t dim_ = 0;
  std::span<const double> values_;
  std::span<const double> weights_;
  std::span<const int> labels_;
  std::size_t offset_ = 0;
};

// Owning row-major table of weighted rows.
struct DataBatch {
  std::size_t dim = 0;
  std::vector<double> values;
  std::vector<double> weights;
  std::vector<int> labels;  // empty, or one per row

  DataBatch() = default;
  explicit DataBatch(std::size_t d) : dim(d) {}

  static DataBatch from_rows(const std::vector<std::vector<double>>& rows,
                             std::vector<double> weights = {}, std::vector<int> labels = {});

  std::size_t size() const noexcept { return weights.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * dim, dim);
  }
  void add_row(std::span<const double> x, double weight = 1.0);
  void add_row(std::span<const double> x, double weight, int label);

  DataView view() const { return DataView(dim, values, weights, labels); }
};

// Throws Error on non-finite values, negative or non-finite weights, or
// labels below -1. Every summarize entry point calls this.
void validate_rows(const DataView& view);

// One observation sequence: `length()` rows of `dim` values. Categorical
// models store integer symbols as doubles with dim 1.
struct Sequence {
  std::size_t dim = 1;
  std::vector<double> values;

  std::size_t length() const noexcept { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const double> at(std::size_t t) const {
    return std::span<const double>(values).subspan(t * dim, dim);
  }
  static Sequence from_symbols(std::span<const int> symbols);
  static Sequence from_rows(const std::vector<std::vector<double>>& rows);
};

class SequenceView {
 public:
  SequenceView() = default;
  SequenceView(std::span<const Sequence> sequences, std::span<const double> weights,
               std::size_t offset = 0)
      : sequences_(sequences), weights_(weights), offset_(offset) {}

  std::size_t size() const noexcept { return sequences_.size(); }
  bool empty() const noexcept { return sequences_.empty(); }
  std::size_t offset() const noexcept { return offset_; }
  const Sequence& sequence(std::size_t i) const { return sequences_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const Sequence> sequences() const noexcept { return sequences_; }

  SequenceView slice(std::size_t begin, std::size_t end) const {
    return SequenceView(sequences_.subspan(begin, end - begin), weights_.subspan(begin, end - begin),
                        offset_ + begin);
  }

 private:
  std::span<const Sequence> sequences_;
  std::span<const double> weights_;
  std::size_t offset_ = 0;
};

struct SequenceBatch {
  std::vector<Sequence> sequences;
  std::vector<double> weights;

  std::size_t size() const noexcept { return sequences.size(); }
  void add(Sequence s, double weight = 1.0) {
    sequences.push_back(std::move(s));
    weights.push_back(weight);
  }
  SequenceView view() const { return SequenceView(sequences, weights); }
};

void validate_sequences(const SequenceView& view);

// A batch handed out by a source. `owner` keeps the storage behind `view`
// alive; it is null when the view borrows from storage the source's caller
// already owns.
template <class View>
struct LoadedBatch {
  View view;
  std::shared_ptr<const void> owner;
};

// Pull-based producer of batches. Every epoch (delimited by rewind) yields
// each row exactly once. Sources are single-consumer.
template <class View>
class BatchSource {
 public:
  virtual ~BatchSource() = default;
  virtual void rewind() = 0;
  virtual std::optional<LoadedBatch<View>> next() = 0;
};

// nullopt means "everything in one batch".
using BatchSize = std::optional<std::size_t>;

// Batches over an in-memory table. The table must outlive the source.
class MemorySource final : public BatchSource<DataView> {
 public:
  MemorySource(const DataBatch& data, BatchSize batch_size = std::nullopt);
  void rewind() override { cursor_ = 0; }
  std::optional<LoadedBatch<DataView>> next() override;

 private:
  DataView data_;
  std::size_t batch_size_;
  std::size_t cursor_ = 0;
};

// Batches of whole sequences over an in-memory corpus.
class MemorySequenceSource final : public BatchSource<SequenceView> {
 public:
  MemorySequenceSource(const SequenceBatch& data, BatchSize batch_size = std::nullopt);
  void rewind() override { cursor_ = 0; }
  std::optional<LoadedBatch<SequenceView>> next() override;

 private:
  SequenceView data_;
  std::size_t batch_size_;
  std::size_t cursor_ = 0;
};

}  // namespace sufstat
