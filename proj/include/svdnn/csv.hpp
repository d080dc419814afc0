#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "svdnn/matrix.hpp"

namespace svdnn {

/// Formats a double with 17 significant digits (exact round trip).
std::string format_double(double v);

/// Parses a headerless CSV matrix, one row per line. Ragged rows, empty
/// input, unparsable fields and non-finite values raise InvalidInput.
Matrix parse_matrix_csv(std::string_view text);
std::string format_matrix_csv(const Matrix& m);

Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

/// Reads a whole file; throws IoError when unreadable.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace svdnn
