#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dnrr/dynamics.hpp"

namespace dnrr::io {

/// Shortest decimal form that parses back to the same double (17 significant digits).
std::string format_double(double v);

/// Trajectory CSV: `# key: value` header lines carrying metadata and the
/// initial block, then one value per line.
void write_trajectory(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_trajectory(const std::filesystem::path& path);

std::vector<double> parse_list(const std::string& text, char sep = ';');

/// Header row of column names followed by one row per draw.
void write_matrix_csv(const std::filesystem::path& path, const std::vector<std::string>& columns,
                      const Eigen::MatrixXd& rows);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path, std::vector<std::string>* columns = nullptr);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Quotes a CSV field when it holds a comma, quote or newline.
std::string csv_field(const std::string& s);

/// Git blob object id (SHA-1 of "blob <size>\0" + content), lowercase hex.
std::string git_blob_hash(const std::string& content);

}  // namespace dnrr::io
