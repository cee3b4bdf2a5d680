#include "ehub/series.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ehub {
namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool is_index_name(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  return name == "period" || name == "hour" || name == "t" || name == "time";
}

double to_number(const std::string& text, const std::filesystem::path& file, std::size_t line) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw HubError(file.string() + ":" + std::to_string(line) + ": not a number: '" + text + "'");
  return v;
}

}  // namespace

std::vector<double> read_csv_column(const std::filesystem::path& file, const std::optional<std::string>& column) {
  std::ifstream in(file);
  if (!in) throw HubError("cannot open series file '" + file.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw HubError("series file '" + file.string() + "' is empty");
  const auto header = split_fields(line);

  std::size_t col = 0;
  if (column) {
    auto it = std::find(header.begin(), header.end(), *column);
    if (it == header.end()) throw HubError("series file '" + file.string() + "' has no column '" + *column + "'");
    col = static_cast<std::size_t>(it - header.begin());
  } else {
    std::vector<std::size_t> data_cols;
    for (std::size_t i = 0; i < header.size(); ++i)
      if (!(i == 0 && is_index_name(header[i]))) data_cols.push_back(i);
    if (data_cols.size() != 1)
      throw HubError("series file '" + file.string() + "' has several columns; name one with '#column'");
    col = data_cols.front();
  }

  std::vector<double> values;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (col >= fields.size())
      throw HubError(file.string() + ":" + std::to_string(lineno) + ": missing column " + std::to_string(col + 1));
    values.push_back(to_number(fields[col], file, lineno));
  }
  return values;
}

std::size_t SeriesData::periods() const {
  std::size_t t = 0;
  bool first = true;
  for (const auto* group : {&prices, &demands})
    for (const auto& s : *group) {
      t = first ? s.size() : std::min(t, s.size());
      first = false;
    }
  return t;
}

SeriesData load_series(const HubTopology& hub, const std::optional<std::filesystem::path>& series_dir,
                       std::optional<std::size_t> horizon) {
  const std::filesystem::path base = series_dir ? *series_dir : hub.base_dir;
  auto resolve = [&](const std::string& ref, const std::string& owner) {
    if (ref.empty()) throw HubError(owner + " has no series reference");
    std::string target = ref;
    for (const auto& [name, path] : hub.series)
      if (name == ref) target = path;
    std::optional<std::string> column;
    if (auto hash = target.find('#'); hash != std::string::npos) {
      column = target.substr(hash + 1);
      target = target.substr(0, hash);
    }
    std::filesystem::path file(target);
    if (file.is_relative()) file = base / file;
    auto values = read_csv_column(file, column);
    if (horizon) {
      if (values.size() < *horizon)
        throw HubError("series '" + ref + "' for " + owner + " has " + std::to_string(values.size()) +
                       " periods, horizon needs " + std::to_string(*horizon));
      values.resize(*horizon);
    }
    return values;
  };

  SeriesData data;
  for (const auto& in : hub.inputs) data.prices.push_back(resolve(in.price_series, "input '" + in.name + "'"));
  for (const auto& out : hub.outputs) data.demands.push_back(resolve(out.demand_series, "output '" + out.name + "'"));
  if (!horizon) {
    const std::size_t t = data.periods();
    for (auto* group : {&data.prices, &data.demands})
      for (auto& s : *group)
        if (s.size() != t)
          throw HubError("series lengths differ (" + std::to_string(s.size()) + " vs " + std::to_string(t) +
                         "); pass a horizon to truncate");
  }
  return data;
}

}  // namespace ehub
