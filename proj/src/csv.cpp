#include "cofed/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cofed::csv {
namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string_view>> rows;
  std::vector<std::size_t> line_numbers;
  std::string text;
};

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
    cells.push_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_double(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return v;
}

std::string where(const std::filesystem::path& path, std::size_t line, std::size_t column) {
  return path.string() + ": row " + std::to_string(line) + ", column " + std::to_string(column);
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Table t;
  std::ostringstream buf;
  buf << in.rdbuf();
  t.text = buf.str();

  std::string_view all(t.text);
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (!all.empty()) {
    auto nl = all.find('\n');
    auto line = all.substr(0, nl);
    all.remove_prefix(nl == std::string_view::npos ? all.size() : nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto cells = split(line);
    const bool first = t.header.empty() && t.rows.empty();
    if (first && !parse_double(cells.front())) {
      for (auto c : cells) t.header.emplace_back(c);
      width = cells.size();
      continue;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      throw std::runtime_error(path.string() + ": row " + std::to_string(line_no) + " has " +
                               std::to_string(cells.size()) + " cells, expected " + std::to_string(width));
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (cells[c].empty()) throw std::runtime_error(where(path, line_no, c + 1) + ": missing cell");
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(line_no);
  }
  return t;
}

Eigen::MatrixXd features_of(const Table& t, std::size_t n_features, const std::filesystem::path& path) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(n_features));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < n_features; ++c) {
      auto v = parse_double(t.rows[r][c]);
      if (!v) throw std::runtime_error(where(path, t.line_numbers[r], c + 1) + ": non-numeric cell '" +
                                       std::string(t.rows[r][c]) + "'");
      if (!std::isfinite(*v)) throw std::runtime_error(where(path, t.line_numbers[r], c + 1) + ": non-finite value");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
    }
  }
  return m;
}

std::size_t width_of(const Table& t) {
  if (!t.header.empty()) return t.header.size();
  return t.rows.empty() ? 0 : t.rows.front().size();
}

void write_header(std::ostream& out, Eigen::Index dim, bool labeled) {
  for (Eigen::Index j = 0; j < dim; ++j) out << (j ? "," : "") << 'x' << j;
  if (labeled) out << (dim ? "," : "") << "label";
  out << '\n';
}

void write_row(std::ostream& out, const Eigen::MatrixXd& m, Eigen::Index r) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(r, j));
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("float formatting failed");
  return std::string(buf, ptr);
}

void save(const LabeledDataset& data, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_header(out, data.dim(), true);
  for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
    write_row(out, data.features, r);
    out << (data.dim() ? "," : "") << data.labels[static_cast<std::size_t>(r)].value << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void save(const UnlabeledDataset& data, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_header(out, data.dim(), false);
  for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
    write_row(out, data.features, r);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

LabeledDataset load_labeled(const std::filesystem::path& path, const std::optional<LabelSpace>& space) {
  const auto t = read_table(path);
  const auto width = width_of(t);
  if (width < 2) throw std::runtime_error(path.string() + ": labeled data needs at least one feature and a label");
  LabeledDataset out;
  out.provenance = path.filename().string();
  out.features = features_of(t, width - 1, path);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto cell = t.rows[r][width - 1];
    std::uint32_t label = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), label);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
      throw std::runtime_error(where(path, t.line_numbers[r], width) + ": label '" + std::string(cell) +
                               "' is not a non-negative integer");
    if (space && !space->contains(CategoryId(label)))
      throw std::runtime_error(where(path, t.line_numbers[r], width) + ": label " + std::to_string(label) +
                               " is outside the declared label space");
    out.labels.emplace_back(label);
  }
  return out;
}

UnlabeledDataset load_unlabeled(const std::filesystem::path& path) {
  const auto t = read_table(path);
  UnlabeledDataset out;
  out.features = features_of(t, width_of(t), path);
  return out;
}

std::variant<LabeledDataset, UnlabeledDataset> load(const std::filesystem::path& path) {
  const auto t = read_table(path);
  if (!t.header.empty() && t.header.back() == "label") return load_labeled(path);
  return load_unlabeled(path);
}

}  // namespace cofed::csv
