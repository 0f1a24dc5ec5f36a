#include "contiv/io.hpp"

#include "contiv/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

namespace contiv::io {

namespace {

std::string_view
trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view>
split(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

std::optional<double>
parse_number(std::string_view s)
{
  if (s.empty()) {
    return std::nullopt;
  }
  if (s.front() == '+') {
    s.remove_prefix(1);
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::optional<std::size_t>
covariate_index(std::string_view name)
{
  if (name.size() < 2 || name[0] != 'x') {
    return std::nullopt;
  }
  std::size_t k = 0;
  const auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), k);
  if (ec != std::errc() || ptr != name.data() + name.size() || k == 0) {
    return std::nullopt;
  }
  return k;
}

} // namespace

Dataset
read_csv(std::istream& in, const IngestOptions& options, const std::string& origin)
{
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  if (!have_header) {
    throw Error(Errc::EmptyFile, origin + ": no header row");
  }
  const std::string header_line = line;
  const auto header = split(header_line);
  std::map<std::string, std::size_t, std::less<>> col;
  std::map<std::size_t, std::size_t> xcols;
  for (std::size_t j = 0; j < header.size(); ++j) {
    col.emplace(std::string(header[j]), j);
    if (const auto k = covariate_index(header[j])) {
      xcols.emplace(*k, j);
    }
  }
  auto require = [&](const char* name) {
    const auto it = col.find(name);
    if (it == col.end()) {
      throw Error(Errc::MissingColumn, origin + ": missing column \"" + name + "\"");
    }
    return it->second;
  };
  const auto cz = require("z");
  const auto ca = require("a");
  const auto cy = require("y");
  std::size_t expect = 1;
  for (const auto& [k, j] : xcols) {
    if (k != expect) {
      throw Error(Errc::MissingColumn, origin + ": missing column \"x" + std::to_string(expect) + "\"");
    }
    ++expect;
  }
  const std::size_t d = xcols.size();

  std::vector<double> xs;
  std::vector<double> z;
  std::vector<double> a;
  std::vector<double> y;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) {
      continue;
    }
    ++row;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw Error(Errc::NonNumericCell, origin + ": row " + std::to_string(row) + " has " +
                                          std::to_string(cells.size()) + " cells, header has " +
                                          std::to_string(header.size()));
    }
    auto value = [&](std::size_t j) {
      const auto v = parse_number(cells[j]);
      if (!v) {
        throw Error(Errc::NonNumericCell, origin + ": row " + std::to_string(row) + ", column \"" +
                                            std::string(header[j]) + "\": \"" + std::string(cells[j]) +
                                            "\" is not a finite number");
      }
      return *v;
    };
    for (const auto& [k, j] : xcols) {
      xs.push_back(value(j));
    }
    z.push_back(value(cz));
    const double av = value(ca);
    if (options.treatment == TreatmentKind::Binary && av != 0.0 && av != 1.0) {
      throw Error(Errc::NonBinaryTreatment, origin + ": row " + std::to_string(row) +
                                              ": treatment a = " + std::string(cells[ca]) +
                                              " is not 0 or 1");
    }
    a.push_back(av);
    y.push_back(value(cy));
  }
  if (z.empty()) {
    throw Error(Errc::EmptyFile, origin + ": no data rows");
  }
  RowMatrix x(static_cast<Eigen::Index>(z.size()), static_cast<Eigen::Index>(d));
  std::copy(xs.begin(), xs.end(), x.data());
  return Dataset(std::move(x), std::move(z), std::move(a), std::move(y));
}

Dataset
ingest_csv(const std::filesystem::path& path, const IngestOptions& options)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::FileNotFound, "cannot open " + path.string());
  }
  return read_csv(in, options, path.string());
}

void
write_csv(std::ostream& out, const Dataset& data)
{
  const auto d = data.dim();
  for (std::size_t j = 0; j < d; ++j) {
    out << 'x' << (j + 1) << ',';
  }
  out << "z,a,y\n";
  char buf[40];
  auto put = [&](double v, char end) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << end;
  };
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      put(x[j], ',');
    }
    put(data.z()[i], ',');
    put(data.a()[i], ',');
    put(data.y()[i], '\n');
  }
}

} // namespace contiv::io
