#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "logseg/geometry.hpp"

namespace logseg {

enum class CloudFormat { Ply, Xyz };

/// From the extension (.ply / .xyz / .txt); throws InvalidArgument otherwise.
CloudFormat format_from_path(const std::filesystem::path& path);

/// ASCII PLY with a vertex element carrying x, y, z and an optional label
/// property (nonzero = inlier). Other vertex properties are skipped, other
/// elements are consumed. Throws ParseError (with the line number) or
/// MissingProperty.
PointCloud parse_ply(const std::string& text);
/// "x y z [label]" per line; blank lines and '#' comments are ignored. The
/// label column must be present on every point line or none.
PointCloud parse_xyz(const std::string& text);

std::string format_ply(const PointCloud& cloud, const std::vector<bool>* mask = nullptr);
std::string format_xyz(const PointCloud& cloud, const std::vector<bool>* mask = nullptr);

/// Throws IoError when the file cannot be read. The id is the file stem.
PointCloud read_cloud(const std::filesystem::path& path);
PointCloud read_cloud(const std::filesystem::path& path, CloudFormat format);

/// Writes coordinates with 17 significant digits. The label column holds the
/// mask when given, else the cloud's labels when present, else is omitted.
void write_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                 const std::vector<bool>* mask = nullptr);
void write_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format,
                 const std::vector<bool>* mask = nullptr);

/// Writes to a sibling temporary file and renames it over the target, so a
/// failed write never leaves a partial file behind. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace logseg
