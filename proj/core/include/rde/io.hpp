#pragma once

#include <string>
#include <vector>

#include "rde/models.hpp"
#include "rde/types.hpp"

namespace rde {

/// Deterministic "%.12g" rendering used by every CSV/JSON writer.
std::string format_double(double value);

/// 8-bit PGM (P2 ASCII or P5 binary); values map linearly onto [0,1].
Signal read_pgm(const std::string& path);

/// Writes a single-channel image as ASCII P2, clamping values into [0,1].
void write_pgm(const std::string& path, std::span<const double> values, std::size_t height,
               std::size_t width);

/// One CSV row; fields are joined with commas (fields must not contain them).
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::vector<std::vector<std::string>> read_csv(const std::string& path, bool skip_header);

/// Self-describing layered weight format:
/// {task, input_shape, layers: [{type, shape, stride?, values: [...]}]}
/// with row-major values (weights then bias per layer).
void save_model_json(const ModelSpec& model, const std::string& path);
ModelSpec load_model_json(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace rde
