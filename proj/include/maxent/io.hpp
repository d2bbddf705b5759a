#pragma once

#include <Eigen/Dense>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "maxent/errors.hpp"
#include "maxent/priors.hpp"

namespace maxent::io {

// ---------------------------------------------------------------------------
// Delimited text

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Writes through a sibling temporary so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " into place");
  }
}

inline std::string format_double(double v) {
  std::array<char, 40> buf{};
  const int len = std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return std::string(buf.data(), static_cast<std::size_t>(len));
}

}  // namespace detail

/// Parses comma-separated decimal rows; blank lines are ignored.
inline std::vector<std::vector<double>> parse_csv_rows(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::vector<double> row;
    std::size_t col = 0;
    while (true) {
      const auto comma = line.find(',');
      const auto field = detail::trim(line.substr(0, comma));
      ++col;
      double value = 0.0;
      const char* begin = field.data();
      const char* end = field.data() + field.size();
      if (!field.empty() && *begin == '+') ++begin;
      const auto [ptr, ec] = std::from_chars(begin, end, value);
      if (field.empty() || ec != std::errc() || ptr != end) {
        throw ParseError("not a number at row " + std::to_string(line_no) + ", column " +
                             std::to_string(col) + ": '" + std::string(field) + "'",
                         line_no, col);
      }
      row.push_back(value);
      if (comma == std::string_view::npos) break;
      line = line.substr(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ShapeError("ragged CSV: row " + std::to_string(line_no) + " has " +
                       std::to_string(row.size()) + " fields, expected " +
                       std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd parse_matrix_csv(std::string_view text) {
  const auto rows = parse_csv_rows(text);
  if (rows.empty()) throw ShapeError("CSV matrix is empty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

/// A vector is either one value per line or a single comma-separated row.
inline Eigen::VectorXd parse_vector_csv(std::string_view text) {
  const Eigen::MatrixXd m = parse_matrix_csv(text);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw ShapeError("CSV vector must be a single row or a single column");
}

inline Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  return parse_matrix_csv(detail::read_file(path));
}

inline Eigen::VectorXd read_vector_csv(const std::filesystem::path& path) {
  return parse_vector_csv(detail::read_file(path));
}

inline std::string format_matrix_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += detail::format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

inline void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  detail::write_file_atomic(path, format_matrix_csv(m));
}

/// One value per line.
inline void write_vector_csv(const std::filesystem::path& path, const Eigen::VectorXd& v) {
  detail::write_file_atomic(path, format_matrix_csv(v));
}

// ---------------------------------------------------------------------------
// IDX3 image archives

struct ImageBatch {
  std::size_t count = 0;
  std::size_t side = 0;
  std::vector<Eigen::VectorXd> pixels;  ///< row-major, bytes / 255
};

inline constexpr std::uint32_t idx3_magic = 0x00000803;

/// Reads at most `limit` images from an uncompressed IDX3 file (square
/// images of unsigned bytes).
inline ImageBatch read_idx_images(const std::filesystem::path& path, std::size_t limit) {
  const std::string bytes = detail::read_file(path);
  auto be32 = [&](std::size_t off) {
    if (off + 4 > bytes.size()) throw TruncatedFile(path.string() + ": header is truncated");
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[off + i]);
    return v;
  };
  const auto magic = be32(0);
  if (magic != idx3_magic) {
    std::ostringstream msg;
    msg << path.string() << ": bad IDX magic 0x" << std::hex << magic
        << " (expected 0x00000803 for unsigned-byte images)";
    throw FormatError(msg.str());
  }
  const std::size_t count = be32(4);
  const std::size_t rows = be32(8);
  const std::size_t cols = be32(12);
  if (rows != cols || rows == 0) throw FormatError(path.string() + ": images are not square");

  ImageBatch batch;
  batch.side = rows;
  batch.count = std::min(limit, count);
  const std::size_t per = rows * cols;
  if (16 + batch.count * per > bytes.size()) {
    throw TruncatedFile(path.string() + ": pixel data is truncated");
  }
  batch.pixels.reserve(batch.count);
  for (std::size_t k = 0; k < batch.count; ++k) {
    Eigen::VectorXd img(static_cast<Eigen::Index>(per));
    for (std::size_t i = 0; i < per; ++i) {
      img[static_cast<Eigen::Index>(i)] =
          static_cast<unsigned char>(bytes[16 + k * per + i]) / 255.0;
    }
    batch.pixels.push_back(std::move(img));
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Binary graymaps

/// round(255 v) with halves away from zero. Without `clamp`, values outside
/// [0, 1] raise RangeError; with it they are clipped. Returns the number of
/// clipped pixels.
inline std::size_t write_pgm(const std::filesystem::path& path, std::span<const double> image,
                             std::size_t side, bool clamp) {
  if (image.size() != side * side) throw ShapeError("write_pgm: image length is not side^2");
  std::string out = "P5\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    double v = image[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      if (!clamp || std::isnan(v)) {
        throw RangeError("write_pgm: pixel " + std::to_string(i) + " outside [0,1]");
      }
      v = v < 0.0 ? 0.0 : 1.0;
      ++clipped;
    }
    out += static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v)));
  }
  detail::write_file_atomic(path, out);
  return clipped;
}

struct Graymap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> bytes;
};

/// Reads the P5 files produced by write_pgm (maxval 255, no comments).
inline Graymap read_pgm(const std::filesystem::path& path) {
  const std::string data = detail::read_file(path);
  std::istringstream in(data);
  std::string magic;
  int maxval = 0;
  Graymap g;
  in >> magic >> g.width >> g.height >> maxval;
  if (!in || magic != "P5" || maxval != 255) throw FormatError(path.string() + ": not a P5/255 graymap");
  const auto offset = static_cast<std::size_t>(in.tellg()) + 1;
  if (offset + g.width * g.height > data.size()) throw TruncatedFile(path.string() + ": short raster");
  g.bytes.assign(data.begin() + static_cast<std::ptrdiff_t>(offset),
                 data.begin() + static_cast<std::ptrdiff_t>(offset + g.width * g.height));
  return g;
}

// ---------------------------------------------------------------------------
// JSON run reports

using Json = nlohmann::ordered_json;

/// Report skeleton with the fixed leading keys
/// {command, parameters, residual_inf, iterations, entropy, [clipped_pixels,]
/// timings_ms}. Entropy is null when the reconstruction is not positive;
/// timings are null unless measured. Commands append their own keys after.
inline Json make_report(std::string_view command, Json parameters, double residual_inf,
                        long iterations, const std::optional<EntropyReport>& entropy,
                        std::optional<std::size_t> clipped_pixels = std::nullopt,
                        Json timings_ms = nullptr) {
  Json r;
  r["command"] = command;
  r["parameters"] = std::move(parameters);
  r["residual_inf"] = residual_inf;
  r["iterations"] = iterations;
  if (entropy) {
    r["entropy"] = {{"h_ds", entropy->h_ds}, {"h_s", entropy->h_s}, {"h_e", entropy->h_e}};
  } else {
    r["entropy"] = nullptr;
  }
  if (clipped_pixels) r["clipped_pixels"] = *clipped_pixels;
  r["timings_ms"] = std::move(timings_ms);
  return r;
}

inline void write_json(const std::filesystem::path& path, const Json& report) {
  detail::write_file_atomic(path, report.dump(2) + "\n");
}

}  // namespace maxent::io
