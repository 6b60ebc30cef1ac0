#include "rde/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace rde {

namespace {

using nlohmann::json;

int next_pgm_token(std::istream& in, std::string& token) {
  token.clear();
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) return 1;
      continue;
    }
    token.push_back(c);
  }
  return token.empty() ? 0 : 1;
}

json shape_to_json(const Shape& shape) {
  json j;
  if (shape.is_composite()) {
    json parts = json::array();
    for (const auto& [name, dims] : shape.parts) parts.push_back({{"name", name}, {"dims", dims}});
    j["parts"] = parts;
  } else {
    j["dims"] = shape.dims;
  }
  return j;
}

Shape shape_from_json(const json& j) {
  Shape shape;
  if (j.contains("parts")) {
    for (const auto& part : j.at("parts")) {
      shape.parts.emplace_back(part.at("name").get<std::string>(),
                               part.at("dims").get<std::vector<std::size_t>>());
    }
  } else {
    shape.dims = j.at("dims").get<std::vector<std::size_t>>();
  }
  return shape;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

Signal read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("read_pgm: cannot open " + path);
  std::string token;
  if (!next_pgm_token(in, token)) fail("read_pgm: missing magic in " + path);
  const bool ascii = token == "P2";
  if (!ascii && token != "P5") fail("read_pgm: unsupported magic '" + token + "' in " + path);

  std::size_t dims[3];
  for (std::size_t& d : dims) {
    if (!next_pgm_token(in, token)) fail("read_pgm: truncated header in " + path);
    d = static_cast<std::size_t>(std::stoul(token));
  }
  const std::size_t width = dims[0];
  const std::size_t height = dims[1];
  const std::size_t maxval = dims[2];
  if (maxval == 0 || maxval > 255) fail("read_pgm: only 8-bit images are supported");

  std::vector<double> values(width * height);
  if (ascii) {
    for (double& v : values) {
      if (!next_pgm_token(in, token)) fail("read_pgm: truncated pixel data in " + path);
      v = std::stod(token) / static_cast<double>(maxval);
    }
  } else {
    std::vector<unsigned char> raw(width * height);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      fail("read_pgm: truncated pixel data in " + path);
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
      values[i] = static_cast<double>(raw[i]) / static_cast<double>(maxval);
    }
  }
  return Signal(std::move(values), Shape::image(height, width, 1));
}

void write_pgm(const std::string& path, std::span<const double> values, std::size_t height,
               std::size_t width) {
  if (values.size() != height * width) fail("write_pgm: value count does not match dimensions");
  std::ofstream out(path);
  if (!out) fail("write_pgm: cannot open " + path);
  out << "P2\n" << width << " " << height << "\n255\n";
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double v = std::clamp(values[y * width + x], 0.0, 1.0);
      const int level = static_cast<int>(std::lround(v * 255.0));
      out << level << (x + 1 == width ? "\n" : " ");
    }
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) fail("write_csv: cannot open " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << header[i] << (i + 1 == header.size() ? "\n" : ",");
  }
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << row[i] << (i + 1 == row.size() ? "\n" : ",");
    }
  }
}

std::vector<std::vector<std::string>> read_csv(const std::string& path, bool skip_header) {
  std::ifstream in(path);
  if (!in) fail("read_csv: cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && skip_header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) continue;
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(field);
    rows.push_back(std::move(row));
  }
  return rows;
}

void save_model_json(const ModelSpec& model, const std::string& path) {
  json j;
  j["task"] = model.task == Task::classification ? "classification" : "regression";
  j["input_shape"] = shape_to_json(model.input_shape);
  json layers = json::array();
  for (const Layer& layer : model.layers) {
    json l;
    switch (layer.type) {
      case LayerType::dense:
        l["type"] = "dense";
        l["shape"] = {layer.out, layer.in};
        break;
      case LayerType::relu:
        l["type"] = "relu";
        l["shape"] = json::array();
        break;
      case LayerType::conv2d:
        l["type"] = "conv2d";
        l["shape"] = {layer.out_ch, layer.in_ch, layer.kernel, layer.kernel};
        l["stride"] = layer.stride;
        break;
      case LayerType::flatten:
        l["type"] = "flatten";
        l["shape"] = json::array();
        break;
    }
    std::vector<double> values;
    values.reserve(layer.param_count());
    values.insert(values.end(), layer.weights.begin(), layer.weights.end());
    values.insert(values.end(), layer.bias.begin(), layer.bias.end());
    l["values"] = values;
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);
  write_text_file(path, j.dump(2) + "\n");
}

ModelSpec load_model_json(const std::string& path) {
  const json j = json::parse(read_text_file(path));
  ModelSpec model;
  const std::string task = j.at("task").get<std::string>();
  if (task == "classification") {
    model.task = Task::classification;
  } else if (task == "regression") {
    model.task = Task::regression;
  } else {
    fail("load_model_json: unknown task '" + task + "'");
  }
  model.input_shape = shape_from_json(j.at("input_shape"));
  for (const auto& l : j.at("layers")) {
    const std::string type = l.at("type").get<std::string>();
    Layer layer;
    if (type == "dense") {
      const auto shape = l.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2) fail("load_model_json: dense shape must be [out, in]");
      layer = Layer::dense(shape[1], shape[0]);
    } else if (type == "conv2d") {
      const auto shape = l.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 4 || shape[2] != shape[3]) {
        fail("load_model_json: conv2d shape must be [out_ch, in_ch, k, k]");
      }
      layer = Layer::conv2d(shape[1], shape[0], shape[2],
                            l.value("stride", static_cast<std::size_t>(1)));
    } else if (type == "relu") {
      layer = Layer::relu();
    } else if (type == "flatten") {
      layer = Layer::flatten();
    } else {
      fail("load_model_json: unknown layer type '" + type + "'");
    }
    const auto values = l.at("values").get<std::vector<double>>();
    if (values.size() != layer.param_count()) {
      std::ostringstream os;
      os << "load_model_json: layer '" << type << "' has " << values.size()
         << " values, expected " << layer.param_count();
      fail(os.str());
    }
    std::copy(values.begin(), values.begin() + static_cast<long>(layer.weights.size()),
              layer.weights.begin());
    std::copy(values.begin() + static_cast<long>(layer.weights.size()), values.end(),
              layer.bias.begin());
    model.layers.push_back(std::move(layer));
  }
  return model;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("write_text_file: cannot open " + path);
  out << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("read_text_file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace rde
