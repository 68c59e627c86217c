#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hirevae::io {

// Raw array files: little-endian float32, row-major, no header. Shapes live
// in the JSON manifest next to them.

void write_f32(const std::filesystem::path& file, const std::vector<double>& data);
std::vector<double> read_f32(const std::filesystem::path& file);

void write_u8(const std::filesystem::path& file, const std::vector<std::uint8_t>& data);
std::vector<std::uint8_t> read_u8(const std::filesystem::path& file);

void write_i32(const std::filesystem::path& file, const std::vector<std::int32_t>& data);
std::vector<std::int32_t> read_i32(const std::filesystem::path& file);

void write_mat_f32(const std::filesystem::path& file, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_mat_f32(const std::filesystem::path& file, Eigen::Index rows,
                             Eigen::Index cols);

std::string read_text(const std::filesystem::path& file);
void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace hirevae::io
