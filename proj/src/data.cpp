#include "sufstat/data.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sufstat/error.hpp"

namespace sufstat {

DataView::DataView(std::size_t dim, std::span<const double> values,
                   std::span<const double> weights, std::span<const int> labels,
                   std::size_t offset)
    : dim_(dim), values_(values), weights_(weights), labels_(labels), offset_(offset) {
  if (values.size() != dim * weights.size())
    throw Error("data view has " + std::to_string(values.size()) + " values for " +
                std::to_string(weights.size()) + " rows of width " + std::to_string(dim));
  if (!labels.empty() && labels.size() != weights.size())
    throw Error("label column length does not match row count");
}

DataView DataView::slice(std::size_t begin, std::size_t end) const {
  return DataView(dim_, values_.subspan(begin * dim_, (end - begin) * dim_),
                  weights_.subspan(begin, end - begin),
                  labels_.empty() ? labels_ : labels_.subspan(begin, end - begin),
                  offset_ + begin);
}

DataBatch DataBatch::from_rows(const std::vector<std::vector<double>>& rows,
                               std::vector<double> weights, std::vector<int> labels) {
  DataBatch batch(rows.empty() ? 0 : rows.front().size());
  for (const auto& r : rows) {
    if (r.size() != batch.dim) throw Error("ragged rows");
    batch.values.insert(batch.values.end(), r.begin(), r.end());
  }
  if (weights.empty()) weights.assign(rows.size(), 1.0);
  if (weights.size() != rows.size()) throw Error("weight count does not match row count");
  if (!labels.empty() && labels.size() != rows.size())
    throw Error("label count does not match row count");
  batch.weights = std::move(weights);
  batch.labels = std::move(labels);
  return batch;
}

void DataBatch::add_row(std::span<const double> x, double weight) {
  if (x.size() != dim) throw Error("row width does not match table width");
  values.insert(values.end(), x.begin(), x.end());
  weights.push_back(weight);
}

void DataBatch::add_row(std::span<const double> x, double weight, int label) {
  if (labels.size() != weights.size()) throw Error("cannot mix labelled and unlabelled rows");
  add_row(x, weight);
  labels.push_back(label);
}

void validate_rows(const DataView& view) {
  for (std::size_t i = 0; i < view.size(); ++i) {
    double w = view.weight(i);
    if (!std::isfinite(w) || w < 0.0)
      throw Error("row " + std::to_string(view.offset() + i) + ": weight must be finite and >= 0");
    for (double x : view.row(i))
      if (!std::isfinite(x))
        throw Error("row " + std::to_string(view.offset() + i) + ": non-finite value");
    if (view.has_labels() && view.label(i) < -1)
      throw Error("row " + std::to_string(view.offset() + i) + ": label below -1");
  }
}

Sequence Sequence::from_symbols(std::span<const int> symbols) {
  Sequence s;
  s.dim = 1;
  s.values.assign(symbols.begin(), symbols.end());
  return s;
}

Sequence Sequence::from_rows(const std::vector<std::vector<double>>& rows) {
  Sequence s;
  s.dim = rows.empty() ? 1 : rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != s.dim) throw Error("ragged observation rows in sequence");
    s.values.insert(s.values.end(), r.begin(), r.end());
  }
  return s;
}

void validate_sequences(const SequenceView& view) {
  for (std::size_t i = 0; i < view.size(); ++i) {
    const Sequence& s = view.sequence(i);
    double w = view.weight(i);
    std::string where = "sequence " + std::to_string(view.offset() + i);
    if (!std::isfinite(w) || w < 0.0) throw Error(where + ": weight must be finite and >= 0");
    if (s.length() == 0) throw Error(where + ": empty sequence");
    if (s.dim == 0 || s.values.size() % s.dim != 0) throw Error(where + ": ragged observations");
    for (double x : s.values)
      if (!std::isfinite(x)) throw Error(where + ": non-finite value");
  }
}

MemorySource::MemorySource(const DataBatch& data, BatchSize batch_size)
    : data_(data.view()), batch_size_(batch_size.value_or(data.size())) {
  if (batch_size && *batch_size == 0) throw Error("batch_size must be >= 1");
  if (batch_size_ == 0) batch_size_ = 1;
}

std::optional<LoadedBatch<DataView>> MemorySource::next() {
  if (cursor_ >= data_.size()) return std::nullopt;
  std::size_t end = std::min(data_.size(), cursor_ + batch_size_);
  LoadedBatch<DataView> out{data_.slice(cursor_, end), nullptr};
  cursor_ = end;
  return out;
}

MemorySequenceSource::MemorySequenceSource(const SequenceBatch& data, BatchSize batch_size)
    : data_(data.view()), batch_size_(batch_size.value_or(data.size())) {
  if (batch_size && *batch_size == 0) throw Error("batch_size must be >= 1");
  if (batch_size_ == 0) batch_size_ = 1;
}

std::optional<LoadedBatch<SequenceView>> MemorySequenceSource::next() {
  if (cursor_ >= data_.size()) return std::nullopt;
  std::size_t end = std::min(data_.size(), cursor_ + batch_size_);
  LoadedBatch<SequenceView> out{data_.slice(cursor_, end), nullptr};
  cursor_ = end;
  return out;
}

}  // namespace sufstat
