#include "cfpred/io.hpp"

#include "cfpred/format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace cfpred {

using nlohmann::json;

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

bool parse_number(const std::string& text, double& value) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  return res.ec == std::errc{} && res.ptr == last && first != last;
}

// ---------------------------------------------------------------------------
// Schema

Schema parse_schema(const json& doc) {
  if (!doc.is_object() || !doc.contains("columns") || !doc["columns"].is_array()) {
    throw ValidationError("schema: expected an object with a \"columns\" array");
  }
  Schema schema;
  std::set<std::string> seen;
  for (const auto& col : doc["columns"]) {
    if (!col.is_object() || !col.contains("name") || !col["name"].is_string() ||
        !col.contains("type") || !col["type"].is_string()) {
      throw ValidationError("schema: every column needs a string \"name\" and \"type\"");
    }
    const auto name = col["name"].get<std::string>();
    const auto type = col["type"].get<std::string>();
    if (name == "exposure" || name == "outcome") {
      throw ValidationError("schema: '" + name + "' is reserved");
    }
    if (!seen.insert(name).second) throw ValidationError("schema: duplicate column '" + name + "'");
    if (type == "continuous") {
      schema.push_back(ColumnSchema::continuous(name));
    } else if (type == "binary") {
      schema.push_back(ColumnSchema::binary(name));
    } else if (type == "categorical") {
      if (!col.contains("categories") || !col["categories"].is_number_integer()) {
        throw ValidationError("schema: categorical column '" + name +
                              "' needs an integer \"categories\"");
      }
      schema.push_back(ColumnSchema::categorical(name, col["categories"].get<int>()));
    } else {
      throw ValidationError("schema: column '" + name + "' has unknown type '" + type + "'");
    }
  }
  return schema;
}

json schema_to_json(const Schema& schema) {
  json cols = json::array();
  for (const auto& c : schema) {
    json col{{"name", c.name}};
    switch (c.kind) {
      case ColumnKind::binary: col["type"] = "binary"; break;
      case ColumnKind::continuous: col["type"] = "continuous"; break;
      case ColumnKind::categorical:
        col["type"] = "categorical";
        col["categories"] = c.categories;
        break;
    }
    cols.push_back(std::move(col));
  }
  return json{{"columns", std::move(cols)}};
}

Schema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open schema file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ValidationError("schema file '" + path + "': " + e.what());
  }
  return parse_schema(doc);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

Dataset read_csv(std::istream& in, const std::optional<Schema>& schema, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw ValidationError(source + ": empty file");
  }
  const auto header = split_fields(line);
  std::map<std::string, std::size_t> position;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!position.emplace(header[c], c).second) {
      throw ValidationError(source + ": duplicate column '" + header[c] + "'");
    }
  }
  for (const char* required : {"exposure", "outcome"}) {
    if (!position.count(required)) {
      throw ValidationError(source + ": missing column '" + std::string(required) + "'");
    }
  }

  std::vector<std::string> covariate_names;
  for (const auto& h : header) {
    if (h != "exposure" && h != "outcome") covariate_names.push_back(h);
  }
  if (schema) {
    std::set<std::string> known;
    for (const auto& c : *schema) {
      known.insert(c.name);
      if (!position.count(c.name)) {
        throw ValidationError(source + ": missing column '" + c.name + "'");
      }
    }
    for (const auto& name : covariate_names) {
      if (!known.count(name)) {
        throw ValidationError(source + ": column '" + name + "' is not in the schema");
      }
    }
    covariate_names.clear();
    for (const auto& c : *schema) covariate_names.push_back(c.name);
  }

  std::vector<std::int64_t> raw_exposure;
  std::vector<double> outcomes;
  std::vector<std::vector<double>> columns(covariate_names.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = source + ":" + std::to_string(row);
    if (fields.size() != header.size()) {
      throw ValidationError(where + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(fields.size()));
    }
    const auto number = [&](const std::string& column) {
      double v = 0.0;
      if (!parse_number(fields[position.at(column)], v) || !std::isfinite(v)) {
        throw ValidationError(where + ", column '" + column + "': cannot parse '" +
                              fields[position.at(column)] + "' as a number");
      }
      return v;
    };
    const double z = number("exposure");
    if (z != std::floor(z) || std::abs(z) > 9.0e15) {
      throw ValidationError(where + ", column 'exposure': label must be an integer");
    }
    raw_exposure.push_back(static_cast<std::int64_t>(z));
    outcomes.push_back(number("outcome"));
    for (std::size_t j = 0; j < covariate_names.size(); ++j) {
      columns[j].push_back(number(covariate_names[j]));
    }
  }
  if (outcomes.empty()) throw ValidationError(source + ": no data rows");

  Dataset data;
  if (schema) {
    data.schema = *schema;
  } else {
    for (std::size_t j = 0; j < covariate_names.size(); ++j) {
      const bool binary = std::all_of(columns[j].begin(), columns[j].end(),
                                      [](double v) { return v == 0.0 || v == 1.0; });
      data.schema.push_back(binary ? ColumnSchema::binary(covariate_names[j])
                                   : ColumnSchema::continuous(covariate_names[j]));
    }
  }

  std::set<std::int64_t> labels(raw_exposure.begin(), raw_exposure.end());
  data.exposure_labels.assign(labels.begin(), labels.end());
  const auto n = static_cast<Eigen::Index>(outcomes.size());
  data.exposure.resize(outcomes.size());
  data.outcome = Eigen::Map<const Eigen::VectorXd>(outcomes.data(), n);
  data.covariates.resize(n, static_cast<Eigen::Index>(columns.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto it = std::lower_bound(data.exposure_labels.begin(), data.exposure_labels.end(),
                                     raw_exposure[static_cast<std::size_t>(i)]);
    data.exposure[i] = static_cast<int>(it - data.exposure_labels.begin());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      data.covariates(i, static_cast<Eigen::Index>(j)) = columns[j][static_cast<std::size_t>(i)];
    }
  }

  try {
    validate(data);
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return data;
}

Dataset load_csv(const std::string& path, const std::optional<Schema>& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open data file '" + path + "'");
  return read_csv(in, schema, path);
}

void write_csv(std::ostream& out, const Dataset& data) {
  out << "exposure,outcome";
  for (const auto& c : data.schema) out << ',' << c.name;
  out << '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    out << data.exposure_labels[static_cast<std::size_t>(data.exposure[i])] << ','
        << format_number(data.outcome(i));
    for (Eigen::Index j = 0; j < data.dimension(); ++j) {
      out << ',' << format_number(data.covariates(i, j));
    }
    out << '\n';
  }
}

void save_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  write_csv(out, data);
}

// ---------------------------------------------------------------------------
// Units and results

Eigen::VectorXd parse_unit(const json& unit, const Schema& schema,
                           std::vector<std::string>* warnings) {
  if (!unit.is_object()) throw ValidationError("unit: expected a JSON object keyed by column name");
  std::set<std::string> names;
  for (const auto& c : schema) names.insert(c.name);
  for (const auto& [key, value] : unit.items()) {
    if (key != "__all__" && !names.count(key)) {
      throw ValidationError("unit: unknown column '" + key + "'");
    }
    if (!value.is_number() && !value.is_boolean()) {
      throw ValidationError("unit: value for '" + key + "' must be a number");
    }
  }
  const auto value_of = [](const json& v) {
    return v.is_boolean() ? (v.get<bool>() ? 1.0 : 0.0) : v.get<double>();
  };

  Eigen::VectorXd x(static_cast<Eigen::Index>(schema.size()));
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto& col = schema[j];
    double v = 0.0;
    if (unit.contains(col.name)) {
      v = value_of(unit[col.name]);
    } else if (unit.contains("__all__")) {
      v = value_of(unit["__all__"]);
    } else if (col.kind == ColumnKind::continuous) {
      throw ValidationError("unit: missing value for continuous column '" + col.name + "'");
    } else if (warnings != nullptr) {
      warnings->push_back("unit: column '" + col.name + "' not given, using category 0");
    }
    x(static_cast<Eigen::Index>(j)) = v;
  }
  validate_row(schema, x, "unit");
  return x;
}

json weights_to_json(const WeightVector& w) {
  json out = json::array();
  for (Eigen::Index j = 0; j < w.size(); ++j) out.push_back(w(j));
  return out;
}

json knots_to_json(const FeatureMapSpec& spec) {
  json columns = json::object();
  for (const auto& plan : spec.columns) {
    if (plan.column.kind != ColumnKind::continuous) continue;
    columns[plan.column.name] = json{{"knots", plan.knots}, {"cap", plan.cap}};
  }
  return json{{"requested", spec.knots_requested},
              {"p", spec.p},
              {"cap_mode", spec.cap_mode == CapMode::continuous ? "continuous" : "literal"},
              {"columns", std::move(columns)}};
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (std::isnan(m(r, c))) {
        row.push_back(nullptr);
      } else {
        row.push_back(m(r, c));
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

json analysis_to_json(const AnalysisReport& report) {
  const auto& model = *report.model;
  const auto& grid = model.grid();
  json out;
  out["grid"] = json{{"lo", grid.lo}, {"hi", grid.hi}, {"size", grid.size()}, {"step", grid.step()}};
  out["beta"] = report.beta;

  json exposures = json::array();
  for (const auto& a : report.analyses) {
    const PredictionSet set = prediction_set(a.scores, report.beta);
    json intervals = json::array();
    for (const auto& [lo, hi] : set.intervals) intervals.push_back(json::array({lo, hi}));
    const auto& fit = model.exposures()[static_cast<std::size_t>(a.exposure)].fit;
    exposures.push_back(json{{"z", a.label},
                             {"n", a.n},
                             {"point", a.point},
                             {"mean", a.mean},
                             {"beta", report.beta},
                             {"intervals", std::move(intervals)},
                             {"weights", weights_to_json(a.weights)},
                             {"converged", fit.converged},
                             {"sweeps", fit.sweeps}});
  }
  out["exposures"] = std::move(exposures);

  if (report.analyses.size() >= 2) {
    const ConfidenceTable table = pairwise_table(report.analyses);
    out["confidence_table"] = matrix_to_json(table.confidence);
    out["effects"] = matrix_to_json(table.effects);
  } else {
    out["confidence_table"] = json::array();
    out["effects"] = json::array();
  }
  out["knots"] = knots_to_json(model.spec());
  out["warnings"] = report.warnings;
  return out;
}

void print_confidence_table(std::ostream& out, const ConfidenceTable& table) {
  const auto k = table.confidence.rows();
  out << std::setw(8) << "z" << " |";
  for (Eigen::Index h = 0; h + 1 < k; ++h) out << std::setw(6) << table.exposures[h];
  out << '\n' << std::string(10 + 6 * static_cast<std::size_t>(std::max<Eigen::Index>(k - 1, 0)), '-')
      << '\n';
  for (Eigen::Index g = 1; g < k; ++g) {
    out << std::setw(8) << table.exposures[g] << " |";
    for (Eigen::Index h = 0; h + 1 < k; ++h) {
      if (h < g) {
        const long pct = std::lround(100.0 * table.confidence(g, h));
        out << std::setw(5) << pct << '%';
      } else {
        out << std::setw(6) << "--";
      }
    }
    out << '\n';
  }
}

void write_analysis_scores_csv(std::ostream& out, const std::vector<ExposureAnalysis>& analyses) {
  out << "exposure,y_grid,pi,prediction_at\n";
  for (const auto& a : analyses) {
    for (std::size_t k = 0; k < a.scores.grid.size(); ++k) {
      out << a.label << ',' << format_number(a.scores.grid.points[k]) << ','
          << format_number(a.scores.pi(k)) << ',' << format_number(a.scores.prediction_at[k])
          << '\n';
    }
  }
}

json coverage_to_json(const CoverageReport& report) {
  json exposures = json::array();
  for (int z = 0; z < 2; ++z) {
    exposures.push_back(json{{"z", z},
                             {"covered", report.covered[z]},
                             {"coverage", report.coverage[z]},
                             {"mean_width", report.mean_width[z]}});
  }
  return json{{"experiment", to_string(report.experiment)},
              {"beta", report.beta},
              {"runs", report.runs},
              {"seed", report.seed},
              {"exposures", std::move(exposures)}};
}

void print_coverage(std::ostream& out, const CoverageReport& report) {
  out << "experiment " << to_string(report.experiment) << "  beta " << report.beta << "  runs "
      << report.runs << "  seed " << report.seed << '\n';
  out << std::setw(9) << "exposure" << std::setw(10) << "covered" << std::setw(11) << "coverage"
      << std::setw(12) << "mean width" << '\n';
  for (int z = 0; z < 2; ++z) {
    out << std::setw(9) << z << std::setw(10) << report.covered[z] << std::setw(11)
        << std::fixed << std::setprecision(3) << report.coverage[z] << std::setw(12)
        << std::setprecision(3) << report.mean_width[z] << '\n';
    out.unsetf(std::ios::fixed);
    out << std::setprecision(6);
  }
}

}  // namespace cfpred
