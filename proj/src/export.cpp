#include "storynet/export.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "storynet/csv.hpp"

namespace storynet::io {

namespace {

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const csv::Table& table, std::size_t line) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw csv::FileError(table.source, line, "expected a number, got '" + text + "'");
  return v;
}

}  // namespace

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  write_atomic(path, value.dump(2) + "\n");
}

std::string edge_list_csv(const NetworkSlice& slice) {
  std::ostringstream out;
  csv::write_row(out, {"char_a", "char_b", "raw_weight", "norm_weight"});
  for (const auto& e : slice.edges)
    csv::write_row(out, {slice.vertices[e.a], slice.vertices[e.b], std::to_string(e.raw_weight),
                         num(e.norm_weight)});
  return out.str();
}

std::string dynamic_csv(const DynamicNetwork& dyn) {
  std::ostringstream out;
  csv::write_row(out, {"slice", "unit_id", "char_a", "char_b", "raw_weight", "norm_weight"});
  for (std::size_t t = 0; t < dyn.slices.size(); ++t) {
    const auto& s = dyn.slices[t];
    for (const auto& e : s.edges)
      csv::write_row(out, {std::to_string(t), dyn.unit_ids[t], s.vertices[e.a], s.vertices[e.b],
                           std::to_string(e.raw_weight), num(e.norm_weight)});
  }
  return out.str();
}

nlohmann::json slice_summary(const NetworkSlice& slice, std::string_view medium, std::string_view period) {
  const GraphStats st = compute_stats(slice);
  return {{"mode", "static"},
          {"medium", medium},
          {"period", period},
          {"vertices", slice.vertices.size()},
          {"edges", slice.edges.size()},
          {"covered_units", slice.covered_units},
          {"stats",
           {{"n", st.n},
            {"L", st.L},
            {"density", st.density},
            {"mean_degree", st.mean_degree},
            {"mean_path_length", st.mean_path_length},
            {"clustering", st.clustering},
            {"assortativity", st.assortativity},
            {"modularity", st.modularity}}}};
}

nlohmann::json dynamic_summary(const DynamicNetwork& dyn) {
  nlohmann::json slices = nlohmann::json::array();
  for (std::size_t t = 0; t < dyn.slices.size(); ++t)
    slices.push_back({{"slice", t},
                      {"unit_id", dyn.unit_ids[t]},
                      {"vertices", dyn.slices[t].vertices.size()},
                      {"edges", dyn.slices[t].edges.size()},
                      {"covered_units", dyn.slices[t].covered_units}});
  return {{"mode", dyn.mode == SliceMode::Instant ? "instant" : "cumulative"},
          {"medium", dyn.medium},
          {"unit_kind", to_string(dyn.unit_kind)},
          {"period", dyn.period},
          {"slices", slices}};
}

std::string matching_csv(const Matching& m) {
  std::ostringstream out;
  csv::write_row(out, {"char_side1", "char_side2", "confidence", "is_seed"});
  for (std::size_t i = 0; i < m.map.size(); ++i) {
    if (m.map[i] < 0) continue;
    csv::write_row(out, {m.labels1[i], m.labels2[m.map[i]], num(m.confidence[i]), m.seed[i] ? "1" : "0"});
  }
  return out.str();
}

std::map<std::string, std::string> read_correspondence(const std::filesystem::path& path) {
  const csv::Table table = csv::read_file(path);
  const bool by_name = table.column("name_side1").has_value();
  const std::size_t c1 = table.require_column(by_name ? "name_side1" : "char_side1");
  const std::size_t c2 = table.require_column(by_name ? "name_side2" : "char_side2");
  std::map<std::string, std::string> out;
  for (const auto& row : table.rows) {
    const auto [it, inserted] = out.emplace(normalize_name(row.fields[c1]), normalize_name(row.fields[c2]));
    if (!inserted) throw csv::FileError(table.source, row.line, "character '" + it->first + "' listed twice");
  }
  return out;
}

std::string matrix_csv(std::span<const std::string> rows, std::span<const std::string> cols,
                       const Eigen::Ref<const Eigen::MatrixXd>& values, std::string_view corner) {
  std::ostringstream out;
  std::vector<std::string> fields{std::string(corner)};
  fields.insert(fields.end(), cols.begin(), cols.end());
  csv::write_row(out, fields);
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    fields.assign(1, rows[i]);
    for (Eigen::Index j = 0; j < values.cols(); ++j) fields.push_back(num(values(i, j)));
    csv::write_row(out, fields);
  }
  return out.str();
}

std::string pgm_heatmap(const Eigen::Ref<const Eigen::MatrixXd>& values) {
  const Eigen::MatrixXd scaled = minmax_normalize(values);
  std::ostringstream out;
  out << "P2\n" << values.cols() << ' ' << values.rows() << "\n255\n";
  for (Eigen::Index i = 0; i < scaled.rows(); ++i) {
    for (Eigen::Index j = 0; j < scaled.cols(); ++j)
      out << (j ? " " : "") << static_cast<int>(std::lround(scaled(i, j) * 255.0));
    out << '\n';
  }
  return out.str();
}

std::string pgm_binary(const BinaryMatrix& cells) {
  std::ostringstream out;
  out << "P2\n" << cells.cols() << ' ' << cells.rows() << "\n1\n";
  for (Eigen::Index i = 0; i < cells.rows(); ++i) {
    for (Eigen::Index j = 0; j < cells.cols(); ++j) out << (j ? " " : "") << (cells(i, j) ? 1 : 0);
    out << '\n';
  }
  return out.str();
}

std::string pgm_confusion(const BinaryMatrix& predicted, const BinaryMatrix& gold) {
  if (predicted.rows() != gold.rows() || predicted.cols() != gold.cols())
    throw std::invalid_argument("pgm_confusion: alignment and gold differ in shape");
  std::ostringstream out;
  out << "P2\n" << predicted.cols() << ' ' << predicted.rows() << "\n3\n";
  for (Eigen::Index i = 0; i < predicted.rows(); ++i) {
    for (Eigen::Index j = 0; j < predicted.cols(); ++j)
      out << (j ? " " : "") << (predicted(i, j) ? (gold(i, j) ? 3 : 2) : (gold(i, j) ? 1 : 0));
    out << '\n';
  }
  return out.str();
}

std::string profiles_csv(const CentralityProfile& profiles) {
  std::ostringstream out;
  std::vector<std::string> fields{"character"};
  for (auto name : kMetricNames) fields.emplace_back(name);
  for (auto name : kMetricNames) fields.push_back(std::string(name) + "_z");
  csv::write_row(out, fields);
  for (std::size_t i = 0; i < profiles.characters.size(); ++i) {
    fields.assign(1, profiles.characters[i]);
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index c = 0; c < profiles.raw.cols(); ++c) fields.push_back(num(profiles.raw(r, c)));
    for (Eigen::Index c = 0; c < profiles.z.cols(); ++c) fields.push_back(num(profiles.z(r, c)));
    csv::write_row(out, fields);
  }
  return out.str();
}

std::string partition_csv(const Partition& partition) {
  std::ostringstream out;
  csv::write_row(out, {"character", "cluster"});
  for (std::size_t i = 0; i < partition.elements.size(); ++i)
    csv::write_row(out, {partition.elements[i], std::to_string(partition.cluster[i])});
  return out.str();
}

std::string centroids_csv(const Eigen::Ref<const Eigen::MatrixXd>& centroids) {
  std::ostringstream out;
  std::vector<std::string> fields{"cluster"};
  for (auto name : kMetricNames) fields.emplace_back(name);
  csv::write_row(out, fields);
  for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
    fields.assign(1, std::to_string(k));
    for (Eigen::Index c = 0; c < centroids.cols(); ++c) fields.push_back(num(centroids(k, c)));
    csv::write_row(out, fields);
  }
  return out.str();
}

std::string alignment_csv(std::span<const std::string> rows, std::span<const std::string> cols,
                          const BinaryMatrix& cells) {
  std::ostringstream out;
  csv::write_row(out, {"row_unit_id", "col_unit_id"});
  for (Eigen::Index i = 0; i < cells.rows(); ++i)
    for (Eigen::Index j = 0; j < cells.cols(); ++j)
      if (cells(i, j)) csv::write_row(out, {rows[i], cols[j]});
  return out.str();
}

std::map<std::string, std::string> read_summaries(const std::filesystem::path& path) {
  const csv::Table table = csv::read_file(path);
  const std::size_t id = table.require_column("unit_id");
  const std::size_t text = table.require_column("text");
  std::map<std::string, std::string> out;
  for (const auto& row : table.rows)
    if (!out.emplace(row.fields[id], row.fields[text]).second)
      throw csv::FileError(table.source, row.line, "unit '" + row.fields[id] + "' listed twice");
  return out;
}

std::map<std::string, Eigen::VectorXd> read_embeddings(const std::filesystem::path& path) {
  const csv::Table table = csv::read_file(path);
  const std::size_t id = table.require_column("unit_id");
  if (table.header.size() < 2) throw csv::FileError(table.source, 1, "embedding file has no dimension columns");
  std::map<std::string, Eigen::VectorXd> out;
  for (const auto& row : table.rows) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(table.header.size() - 1));
    Eigen::Index k = 0;
    for (std::size_t c = 0; c < row.fields.size(); ++c)
      if (c != id) v(k++) = parse_double(row.fields[c], table, row.line);
    if (!out.emplace(row.fields[id], std::move(v)).second)
      throw csv::FileError(table.source, row.line, "unit '" + row.fields[id] + "' listed twice");
  }
  return out;
}

}  // namespace storynet::io
