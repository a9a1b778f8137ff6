#include "fedfair/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace fedfair {

namespace {

bool is_missing(const std::string& value) {
  return value.empty() || value == "?" || value == "NA";
}

std::string trim(const std::string& s) {
  std::size_t first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  std::size_t last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream stream(line);
  while (std::getline(stream, field, ',')) {
    fields.push_back(trim(field));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

bool parse_double(const std::string& text, double* out) {
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || !std::isfinite(value)) return false;
  *out = value;
  return true;
}

ColumnKind kind_from_string(const std::string& s) {
  if (s == "numeric") return ColumnKind::Numeric;
  if (s == "categorical") return ColumnKind::Categorical;
  throw std::runtime_error("unknown column kind: " + s);
}

ColumnRole role_from_string(const std::string& s) {
  if (s == "feature") return ColumnRole::Feature;
  if (s == "sensitive") return ColumnRole::Sensitive;
  if (s == "label") return ColumnRole::Label;
  throw std::runtime_error("unknown column role: " + s);
}

}  // namespace

Schema schema_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  Schema schema;
  for (const auto& col : j.at("columns")) {
    ColumnSpec spec;
    spec.name = col.at("name").get<std::string>();
    spec.kind = kind_from_string(col.at("kind").get<std::string>());
    spec.role = role_from_string(col.at("role").get<std::string>());
    if (col.contains("positive_value")) {
      spec.positive_value = col.at("positive_value").get<std::string>();
    }
    schema.columns.push_back(std::move(spec));
  }
  return schema;
}

Schema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schema " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return schema_from_json(buffer.str());
}

RawDataset load_dataset(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path);
  std::string line;
  if (!std::getline(in, line)) throw EmptyDataset(path + " has no header");
  const auto header = split_csv_line(line);

  // map each schema column to its position in the file
  std::vector<std::size_t> positions;
  for (const auto& col : schema.columns) {
    const auto it = std::find(header.begin(), header.end(), col.name);
    if (it == header.end()) {
      throw MissingColumn(col.name + " not in header of " + path);
    }
    positions.push_back(static_cast<std::size_t>(it - header.begin()));
  }

  RawDataset data;
  data.schema = schema;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      ++data.dropped_rows;  // malformed row, row-wise deletion policy
      continue;
    }
    std::vector<std::string> row;
    row.reserve(schema.columns.size());
    bool missing = false;
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
      const std::string& cell = fields[positions[i]];
      if (is_missing(cell)) {
        missing = true;
        break;
      }
      if (schema.columns[i].kind == ColumnKind::Numeric) {
        double value;
        if (!parse_double(cell, &value)) {
          throw UnparseableRow("line " + std::to_string(line_number) + " of " +
                               path + ": '" + cell + "' in numeric column " +
                               schema.columns[i].name);
        }
      }
      row.push_back(cell);
    }
    if (missing) {
      ++data.dropped_rows;
      continue;
    }
    data.rows.push_back(std::move(row));
  }
  if (data.rows.empty()) throw EmptyDataset(path + " has no usable rows");
  return data;
}

Preprocessor Preprocessor::fit(const RawDataset& train) {
  Preprocessor prep;
  bool saw_sensitive = false;
  bool saw_label = false;
  for (std::size_t i = 0; i < train.schema.columns.size(); ++i) {
    const auto& col = train.schema.columns[i];
    if (col.role == ColumnRole::Sensitive) {
      prep.sensitive_index = i;
      prep.sensitive_positive = col.positive_value;
      saw_sensitive = true;
      continue;
    }
    if (col.role == ColumnRole::Label) {
      prep.label_index = i;
      prep.label_positive = col.positive_value;
      saw_label = true;
      continue;
    }
    if (col.kind == ColumnKind::Numeric) {
      double sum = 0.0, sum_sq = 0.0;
      std::set<double> distinct;
      for (const auto& row : train.rows) {
        double value;
        parse_double(row[i], &value);
        sum += value;
        sum_sq += value * value;
        if (distinct.size() <= 2) distinct.insert(value);
      }
      const double n = static_cast<double>(train.rows.size());
      const double mean = sum / n;
      const double variance = std::max(sum_sq / n - mean * mean, 0.0);
      if (distinct.size() <= 1) {
        prep.dropped_constant_columns.push_back(col.name);
        continue;
      }
      NumericColumn numeric;
      numeric.schema_index = i;
      // binary columns pass through so the encoding is idempotent
      numeric.standardize = distinct.size() > 2;
      numeric.mean = mean;
      numeric.stddev = std::sqrt(variance);
      prep.numeric_columns.push_back(numeric);
    } else {
      std::set<std::string> levels;
      for (const auto& row : train.rows) levels.insert(row[i]);
      if (levels.size() <= 1) {
        prep.dropped_constant_columns.push_back(col.name);
        continue;
      }
      CategoricalColumn categorical;
      categorical.schema_index = i;
      categorical.levels.assign(levels.begin(), levels.end());
      prep.categorical_columns.push_back(std::move(categorical));
    }
  }
  if (!saw_sensitive || !saw_label) {
    throw MissingColumn("schema needs one sensitive and one label column");
  }
  return prep;
}

Dataset Preprocessor::transform(const RawDataset& data) const {
  Dataset out;
  out.num_rows = data.rows.size();

  // feature layout: schema order, numerics first within their position
  std::vector<std::pair<std::size_t, int>> order;  // (schema index, -1=numeric, >=0 cat idx)
  for (std::size_t n = 0; n < numeric_columns.size(); ++n) {
    order.emplace_back(numeric_columns[n].schema_index, -static_cast<int>(n) - 1);
  }
  for (std::size_t c = 0; c < categorical_columns.size(); ++c) {
    order.emplace_back(categorical_columns[c].schema_index, static_cast<int>(c));
  }
  std::sort(order.begin(), order.end());

  for (const auto& [schema_index, tag] : order) {
    if (tag < 0) {
      out.feature_names.push_back(data.schema.columns[schema_index].name);
    } else {
      const auto& cat = categorical_columns[static_cast<std::size_t>(tag)];
      for (std::size_t l = 1; l < cat.levels.size(); ++l) {
        out.feature_names.push_back(data.schema.columns[schema_index].name +
                                    "=" + cat.levels[l]);
      }
    }
  }
  out.num_features = out.feature_names.size();
  out.features.resize(out.num_rows * out.num_features);
  out.sensitive.resize(out.num_rows);
  out.labels.resize(out.num_rows);

  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    const auto& row = data.rows[r];
    out.sensitive[r] = row[sensitive_index] == sensitive_positive ? 1 : 0;
    out.labels[r] = row[label_index] == label_positive ? 1 : 0;
    double* dest = &out.features[r * out.num_features];
    std::size_t j = 0;
    for (const auto& [schema_index, tag] : order) {
      if (tag < 0) {
        const auto& numeric = numeric_columns[static_cast<std::size_t>(-tag) - 1];
        double value;
        if (!parse_double(row[schema_index], &value)) {
          throw UnparseableRow("'" + row[schema_index] + "' in numeric column " +
                               data.schema.columns[schema_index].name);
        }
        dest[j++] = numeric.standardize
                        ? (value - numeric.mean) / numeric.stddev
                        : value;
      } else {
        const auto& cat = categorical_columns[static_cast<std::size_t>(tag)];
        const auto it = std::find(cat.levels.begin(), cat.levels.end(),
                                  row[schema_index]);
        if (it == cat.levels.end()) {
          throw UnknownCategory("'" + row[schema_index] + "' in column " +
                                data.schema.columns[schema_index].name);
        }
        const std::size_t level = static_cast<std::size_t>(it - cat.levels.begin());
        for (std::size_t l = 1; l < cat.levels.size(); ++l) {
          dest[j++] = l == level ? 1.0 : 0.0;
        }
      }
    }
  }
  return out;
}

DatasetSplits preprocess_splits(const RawDataset& train, const RawDataset& test) {
  DatasetSplits splits;
  splits.preprocessor = Preprocessor::fit(train);
  splits.train = splits.preprocessor.transform(train);
  splits.test = splits.preprocessor.transform(test);
  return splits;
}

std::pair<RawDataset, RawDataset> seeded_split(const RawDataset& data,
                                               double train_fraction,
                                               std::uint64_t seed) {
  std::vector<std::size_t> order(data.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(splitmix64(seed));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t cut =
      static_cast<std::size_t>(train_fraction * static_cast<double>(order.size()));
  RawDataset train, test;
  train.schema = data.schema;
  test.schema = data.schema;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < cut ? train : test).rows.push_back(data.rows[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

Dataset subset_dataset(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.num_rows = rows.size();
  out.num_features = data.num_features;
  out.feature_names = data.feature_names;
  out.features.resize(rows.size() * data.num_features);
  out.sensitive.resize(rows.size());
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t src = rows[i];
    std::copy_n(data.features.begin() +
                    static_cast<std::ptrdiff_t>(src * data.num_features),
                data.num_features,
                out.features.begin() +
                    static_cast<std::ptrdiff_t>(i * data.num_features));
    out.sensitive[i] = data.sensitive[src];
    out.labels[i] = data.labels[src];
  }
  return out;
}

}  // namespace fedfair
