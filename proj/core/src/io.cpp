#include "hirevae/io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace hirevae::io {

namespace {

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + file.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + file.string());
  return in;
}

void put_le32(std::ofstream& out, std::uint32_t w) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(w & 0xff),
      static_cast<unsigned char>((w >> 8) & 0xff),
      static_cast<unsigned char>((w >> 16) & 0xff),
      static_cast<unsigned char>((w >> 24) & 0xff),
  };
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_le32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_f32(const std::filesystem::path& file, const std::vector<double>& data) {
  auto out = open_out(file);
  for (double d : data) {
    const float f = static_cast<float>(d);
    std::uint32_t w;
    std::memcpy(&w, &f, 4);
    put_le32(out, w);
  }
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

std::vector<double> read_f32(const std::filesystem::path& file) {
  auto in = open_in(file);
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  if (bytes % 4 != 0) throw std::runtime_error("f32 file has ragged size: " + file.string());
  std::vector<unsigned char> buf(bytes);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw std::runtime_error("read failed: " + file.string());
  std::vector<double> out(bytes / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint32_t w = get_le32(buf.data() + 4 * i);
    float f;
    std::memcpy(&f, &w, 4);
    out[i] = static_cast<double>(f);
  }
  return out;
}

void write_u8(const std::filesystem::path& file, const std::vector<std::uint8_t>& data) {
  auto out = open_out(file);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

std::vector<std::uint8_t> read_u8(const std::filesystem::path& file) {
  auto in = open_in(file);
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> out(bytes);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw std::runtime_error("read failed: " + file.string());
  return out;
}

void write_i32(const std::filesystem::path& file, const std::vector<std::int32_t>& data) {
  auto out = open_out(file);
  for (std::int32_t v : data) put_le32(out, static_cast<std::uint32_t>(v));
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

std::vector<std::int32_t> read_i32(const std::filesystem::path& file) {
  auto in = open_in(file);
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  if (bytes % 4 != 0) throw std::runtime_error("i32 file has ragged size: " + file.string());
  std::vector<unsigned char> buf(bytes);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw std::runtime_error("read failed: " + file.string());
  std::vector<std::int32_t> out(bytes / 4);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::int32_t>(get_le32(buf.data() + 4 * i));
  return out;
}

void write_mat_f32(const std::filesystem::path& file, const Eigen::MatrixXd& m) {
  std::vector<double> flat(static_cast<std::size_t>(m.size()));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat[k++] = m(i, j);
  write_f32(file, flat);
}

Eigen::MatrixXd read_mat_f32(const std::filesystem::path& file, Eigen::Index rows,
                             Eigen::Index cols) {
  auto flat = read_f32(file);
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols)
    throw std::runtime_error("array size mismatch in " + file.string());
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = flat[k++];
  return m;
}

std::string read_text(const std::filesystem::path& file) {
  auto in = open_in(file);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  auto out = open_out(file);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

}  // namespace hirevae::io
