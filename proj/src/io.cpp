#include "sufstat/io.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>

#include "sufstat/error.hpp"

namespace sufstat {
namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool blank(std::string_view s) { return trim(s).empty(); }

std::ifstream open_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return in;
}

std::size_t resolve(const ColumnRef& ref, const std::vector<std::string>& names, std::size_t width,
                    const std::string& path, const char* role) {
  if (const auto* idx = std::get_if<std::size_t>(&ref)) {
    if (*idx >= width)
      throw Error(path + ": " + role + " column index " + std::to_string(*idx) + " but the file has " +
                  std::to_string(width) + " columns");
    return *idx;
  }
  const auto& name = std::get<std::string>(ref);
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  if (names.empty()) {
    // Allow numeric strings as indices when there is no header.
    if (auto v = parse_double(name); v && *v >= 0 && *v == std::floor(*v) && *v < static_cast<double>(width))
      return static_cast<std::size_t>(*v);
    throw Error(path + ": " + role + " column '" + name + "' needs a header line");
  }
  throw Error(path + ": no " + role + " column named '" + name + "'");
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

CsvSource::CsvSource(std::string path, CsvSchema schema, BatchSize batch_size)
    : path_(std::move(path)),
      batch_size_(batch_size.value_or(std::numeric_limits<std::size_t>::max())) {
  if (batch_size && *batch_size == 0) throw Error("batch_size must be >= 1");
  in_ = open_file(path_);
  std::string first;
  while (std::getline(in_, first)) {
    ++line_no_;
    if (!blank(first)) break;
  }
  if (blank(first)) throw Error(path_ + ": file has no rows");
  const auto cells = split_commas(first);
  width_ = cells.size();
  bool numeric = true;
  for (auto c : cells) numeric = numeric && parse_double(c).has_value();
  header_ = schema.header.value_or(!numeric);
  std::vector<std::string> names;
  if (header_)
    for (auto c : cells) names.emplace_back(trim(c));
  if (schema.label) label_col_ = resolve(*schema.label, names, width_, path_, "label");
  if (schema.weight) weight_col_ = resolve(*schema.weight, names, width_, path_, "weight");
  if (label_col_ && weight_col_ && *label_col_ == *weight_col_)
    throw Error(path_ + ": label and weight refer to the same column");
  dim_ = width_ - (label_col_ ? 1 : 0) - (weight_col_ ? 1 : 0);
  if (dim_ == 0) throw Error(path_ + ": no feature columns");
  for (std::size_t i = 0; i < names.size(); ++i)
    if (i != label_col_ && i != weight_col_) feature_names_.push_back(names[i]);
  rewind();
}

void CsvSource::rewind() {
  in_.clear();
  in_.seekg(0);
  line_no_ = 0;
  rows_read_ = 0;
  if (header_) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!blank(line)) break;
    }
  }
}

std::optional<LoadedBatch<DataView>> CsvSource::next() {
  auto batch = std::make_shared<DataBatch>(dim_);
  std::vector<double> row(dim_);
  std::string line;
  while (batch->size() < batch_size_ && std::getline(in_, line)) {
    ++line_no_;
    if (blank(line)) continue;
    const auto cells = split_commas(line);
    const std::string where = path_ + ":" + std::to_string(line_no_) + ": ";
    if (cells.size() != width_)
      throw Error(where + "expected " + std::to_string(width_) + " columns, found " +
                  std::to_string(cells.size()));
    std::size_t f = 0;
    double weight = 1.0;
    int label = -1;
    for (std::size_t c = 0; c < width_; ++c) {
      const auto v = parse_double(cells[c]);
      if (!v) throw Error(where + "column " + std::to_string(c) + ": '" + std::string(trim(cells[c])) +
                          "' is not a number");
      if (c == label_col_) {
        if (*v != std::floor(*v) || *v < -1.0 || *v > static_cast<double>(std::numeric_limits<int>::max()))
          throw Error(where + "label must be an integer >= -1");
        label = static_cast<int>(*v);
      } else if (c == weight_col_) {
        if (!std::isfinite(*v) || *v < 0.0) throw Error(where + "weight must be finite and >= 0");
        weight = *v;
      } else {
        if (!std::isfinite(*v)) throw Error(where + "column " + std::to_string(c) + " is not finite");
        row[f++] = *v;
      }
    }
    if (label_col_)
      batch->add_row(row, weight, label);
    else
      batch->add_row(row, weight);
  }
  if (batch->size() == 0) return std::nullopt;
  const DataView view(batch->dim, batch->values, batch->weights, batch->labels, rows_read_);
  rows_read_ += batch->size();
  return LoadedBatch<DataView>{view, batch};
}

DataBatch read_csv(const std::string& path, const CsvSchema& schema) {
  CsvSource source(path, schema);
  DataBatch out(source.dim());
  while (auto b = source.next()) {
    const auto& v = b->view;
    out.values.insert(out.values.end(), v.values().begin(), v.values().end());
    out.weights.insert(out.weights.end(), v.weights().begin(), v.weights().end());
    out.labels.insert(out.labels.end(), v.labels().begin(), v.labels().end());
  }
  return out;
}

void write_csv(std::ostream& out, const DataBatch& data) {
  const bool labels = !data.labels.empty();
  bool weights = false;
  for (double w : data.weights) weights = weights || w != 1.0;
  for (std::size_t j = 0; j < data.dim; ++j) out << (j ? "," : "") << 'x' << j;
  if (labels) out << ",label";
  if (weights) out << ",weight";
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << format_double(row[j]);
    if (labels) out << ',' << data.labels[i];
    if (weights) out << ',' << format_double(data.weights[i]);
    out << '\n';
  }
}

void write_csv(const std::string& path, const DataBatch& data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_csv(out, data);
  if (!out) throw Error("write failed: " + path);
}

SequenceFileSource::SequenceFileSource(std::string path, BatchSize batch_size)
    : path_(std::move(path)),
      batch_size_(batch_size.value_or(std::numeric_limits<std::size_t>::max())) {
  if (batch_size && *batch_size == 0) throw Error("batch_size must be >= 1");
  in_ = open_file(path_);
}

void SequenceFileSource::rewind() {
  in_.clear();
  in_.seekg(0);
  line_no_ = 0;
  sequences_read_ = 0;
}

std::optional<Sequence> SequenceFileSource::read_block() {
  std::string line;
  Sequence seq;
  bool started = false;
  std::size_t blanks = 0;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (blank(line)) {
      if (started) break;
      // A blank line right after a separator means an empty block; blanks
      // at the start of the file are tolerated.
      if (sequences_read_ > 0 && ++blanks > 1) {
        std::string rest;
        while (std::getline(in_, rest)) {
          ++line_no_;
          if (!blank(rest))
            throw Error(path_ + ":" + std::to_string(line_no_) + ": empty sequence block before this line");
        }
        return std::nullopt;
      }
      continue;
    }
    const auto cells = split_commas(line);
    const std::string where = path_ + ":" + std::to_string(line_no_) + ": ";
    if (!dim_) dim_ = cells.size();
    if (cells.size() != *dim_)
      throw Error(where + "ragged row: expected " + std::to_string(*dim_) + " values, found " +
                  std::to_string(cells.size()));
    for (auto c : cells) {
      const auto v = parse_double(c);
      if (!v || !std::isfinite(*v)) throw Error(where + "'" + std::string(trim(c)) + "' is not a finite number");
      seq.values.push_back(*v);
    }
    seq.dim = *dim_;
    started = true;
  }
  if (!started) return std::nullopt;
  return seq;
}

std::optional<LoadedBatch<SequenceView>> SequenceFileSource::next() {
  auto batch = std::make_shared<SequenceBatch>();
  while (batch->size() < batch_size_) {
    auto seq = read_block();
    if (!seq) break;
    batch->add(std::move(*seq));
    ++sequences_read_;
  }
  if (batch->size() == 0) return std::nullopt;
  const SequenceView view(batch->sequences, batch->weights, sequences_read_ - batch->size());
  return LoadedBatch<SequenceView>{view, batch};
}

SequenceBatch read_sequences(const std::string& path) {
  SequenceFileSource source(path);
  SequenceBatch out;
  while (auto b = source.next())
    for (std::size_t i = 0; i < b->view.size(); ++i) out.add(b->view.sequence(i), b->view.weight(i));
  return out;
}

void write_sequences(std::ostream& out, const SequenceBatch& data) {
  for (std::size_t s = 0; s < data.size(); ++s) {
    if (s) out << '\n';
    const Sequence& seq = data.sequences[s];
    for (std::size_t t = 0; t < seq.length(); ++t) {
      const auto x = seq.at(t);
      for (std::size_t j = 0; j < x.size(); ++j) out << (j ? "," : "") << format_double(x[j]);
      out << '\n';
    }
  }
}

void write_sequences(const std::string& path, const SequenceBatch& data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_sequences(out, data);
  if (!out) throw Error("write failed: " + path);
}

}  // namespace sufstat
