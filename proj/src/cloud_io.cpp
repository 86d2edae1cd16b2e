#include "logseg/cloud_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "logseg/error.hpp"

namespace logseg {
namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

double parse_number(std::string_view token, std::size_t line) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) parse_fail(line, "not a number: '" + std::string(token) + "'");
  return v;
}

bool parse_label(std::string_view token, std::size_t line) {
  const double v = parse_number(token, line);
  if (v != 0.0 && v != 1.0) parse_fail(line, "label must be 0 or 1");
  return v != 0.0;
}

// Line reader that tracks 1-based line numbers.
class Lines {
 public:
  explicit Lines(std::string_view text) : text_(text) {}

  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    const std::size_t end = std::min(text_.find('\n', pos_), text_.size());
    line = text_.substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = end + 1;
    ++number_;
    return true;
  }
  std::size_t number() const noexcept { return number_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t number_ = 0;
};

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CloudFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".ply") return CloudFormat::Ply;
  if (ext == ".xyz" || ext == ".txt") return CloudFormat::Xyz;
  throw Error(ErrorKind::InvalidArgument, "cannot infer cloud format from '" + path.string() + "'");
}

PointCloud parse_xyz(const std::string& text) {
  PointCloud cloud;
  std::vector<bool> labels;
  std::optional<bool> labeled;
  Lines lines(text);
  std::string_view line;
  while (lines.next(line)) {
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 3 && tokens.size() != 4) {
      parse_fail(lines.number(), "expected 3 or 4 columns, found " + std::to_string(tokens.size()));
    }
    const bool has_label = tokens.size() == 4;
    if (labeled && *labeled != has_label) parse_fail(lines.number(), "label column present on some lines only");
    labeled = has_label;
    cloud.points.push_back({parse_number(tokens[0], lines.number()), parse_number(tokens[1], lines.number()),
                            parse_number(tokens[2], lines.number())});
    if (has_label) labels.push_back(parse_label(tokens[3], lines.number()));
  }
  if (labeled.value_or(false)) cloud.labels = std::move(labels);
  return cloud;
}

PointCloud parse_ply(const std::string& text) {
  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> properties;
  };
  Lines lines(text);
  std::string_view line;
  if (!lines.next(line) || line != "ply") parse_fail(1, "missing 'ply' magic");
  std::vector<Element> elements;
  bool ended = false;
  while (lines.next(line)) {
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens[0] == "format") {
      if (tokens.size() < 2 || tokens[1] != "ascii") parse_fail(lines.number(), "only ASCII PLY is supported");
    } else if (tokens[0] == "comment" || tokens[0] == "obj_info") {
      continue;
    } else if (tokens[0] == "element") {
      if (tokens.size() != 3) parse_fail(lines.number(), "malformed element line");
      const double count = parse_number(tokens[2], lines.number());
      if (count < 0 || count != std::floor(count)) parse_fail(lines.number(), "bad element count");
      elements.push_back({std::string(tokens[1]), static_cast<std::size_t>(count), {}});
    } else if (tokens[0] == "property") {
      if (elements.empty()) parse_fail(lines.number(), "property before any element");
      if (tokens.size() >= 2 && tokens[1] == "list") {
        if (tokens.size() != 5) parse_fail(lines.number(), "malformed list property");
        elements.back().properties.push_back("list:" + std::string(tokens[4]));
      } else {
        if (tokens.size() != 3) parse_fail(lines.number(), "malformed property line");
        elements.back().properties.emplace_back(tokens[2]);
      }
    } else if (tokens[0] == "end_header") {
      ended = true;
      break;
    } else {
      parse_fail(lines.number(), "unknown header keyword '" + std::string(tokens[0]) + "'");
    }
  }
  if (!ended) parse_fail(lines.number(), "missing end_header");

  const auto vertex = std::find_if(elements.begin(), elements.end(), [](const Element& e) { return e.name == "vertex"; });
  if (vertex == elements.end()) throw Error(ErrorKind::MissingProperty, "no vertex element");
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(vertex->properties.begin(), vertex->properties.end(), name);
    if (it == vertex->properties.end()) return std::nullopt;
    return static_cast<std::size_t>(it - vertex->properties.begin());
  };
  for (const char* axis : {"x", "y", "z"}) {
    if (!column(axis)) throw Error(ErrorKind::MissingProperty, std::string("vertex property '") + axis + "' missing");
  }
  const std::size_t cx = *column("x"), cy = *column("y"), cz = *column("z");
  const auto cl = column("label");

  PointCloud cloud;
  std::vector<bool> labels;
  for (const Element& e : elements) {
    const bool is_vertex = &e == &*vertex;
    const bool has_list = std::any_of(e.properties.begin(), e.properties.end(),
                                      [](const std::string& p) { return p.starts_with("list:"); });
    for (std::size_t row = 0; row < e.count; ++row) {
      do {
        if (!lines.next(line)) {
          parse_fail(lines.number(), "element '" + e.name + "' declares " + std::to_string(e.count) +
                                         " rows but the file ends after " + std::to_string(row));
        }
      } while (split_ws(line).empty());
      if (!is_vertex) continue;
      const auto tokens = split_ws(line);
      if (has_list || tokens.size() != e.properties.size()) {
        if (has_list) parse_fail(lines.number(), "list properties on vertices are not supported");
        parse_fail(lines.number(), "expected " + std::to_string(e.properties.size()) + " values, found " +
                                       std::to_string(tokens.size()));
      }
      cloud.points.push_back({parse_number(tokens[cx], lines.number()), parse_number(tokens[cy], lines.number()),
                              parse_number(tokens[cz], lines.number())});
      if (cl) labels.push_back(parse_label(tokens[*cl], lines.number()));
    }
  }
  while (lines.next(line)) {
    if (!split_ws(line).empty()) parse_fail(lines.number(), "data after the last declared element");
  }
  if (cl) cloud.labels = std::move(labels);
  return cloud;
}

namespace {

const std::vector<bool>* label_column(const PointCloud& cloud, const std::vector<bool>* mask) {
  if (mask) {
    if (mask->size() != cloud.size()) throw Error(ErrorKind::LengthMismatch, "mask does not match the cloud");
    return mask;
  }
  return cloud.labels ? &*cloud.labels : nullptr;
}

}  // namespace

std::string format_ply(const PointCloud& cloud, const std::vector<bool>* mask) {
  const auto* labels = label_column(cloud, mask);
  std::ostringstream os;
  os << "ply\nformat ascii 1.0\n";
  if (!cloud.id.empty()) os << "comment id " << cloud.id << '\n';
  os << "element vertex " << cloud.size() << "\nproperty double x\nproperty double y\nproperty double z\n";
  if (labels) os << "property uchar label\n";
  os << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    os << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z);
    if (labels) os << ' ' << ((*labels)[i] ? 1 : 0);
    os << '\n';
  }
  return os.str();
}

std::string format_xyz(const PointCloud& cloud, const std::vector<bool>* mask) {
  const auto* labels = label_column(cloud, mask);
  std::ostringstream os;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    os << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z);
    if (labels) os << ' ' << ((*labels)[i] ? 1 : 0);
    os << '\n';
  }
  return os.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::IoError, "failed reading '" + path.string() + "'");
  return os.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorKind::IoError, "failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::IoError, "cannot move output into '" + path.string() + "'");
  }
}

PointCloud read_cloud(const std::filesystem::path& path, CloudFormat format) {
  const std::string text = read_file(path);
  PointCloud cloud = format == CloudFormat::Ply ? parse_ply(text) : parse_xyz(text);
  cloud.id = path.stem().string();
  return cloud;
}

PointCloud read_cloud(const std::filesystem::path& path) { return read_cloud(path, format_from_path(path)); }

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format,
                 const std::vector<bool>* mask) {
  write_file_atomic(path, format == CloudFormat::Ply ? format_ply(cloud, mask) : format_xyz(cloud, mask));
}

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path, const std::vector<bool>* mask) {
  write_cloud(cloud, path, format_from_path(path), mask);
}

}  // namespace logseg
