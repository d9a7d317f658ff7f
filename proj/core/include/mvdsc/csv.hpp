#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace mvdsc {

/// Formats a double with 17 significant digits, enough for an exact
/// text -> binary -> text round trip of any finite IEEE-754 double.
std::string format_double(double value);

/// Reads a headerless rectangular CSV of decimal floats, one row per line.
/// Throws std::runtime_error naming the file and line on malformed input.
Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path);

void write_csv_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// Reads one integer per line.
std::vector<int> read_csv_labels(const std::filesystem::path& path);

void write_csv_labels(const std::filesystem::path& path, const std::vector<int>& labels);

}  // namespace mvdsc
