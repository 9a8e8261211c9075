#include "land/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace land::io {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

double parse_double(const std::string& s, const std::string& path, size_t line) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  }
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

LabeledDataset read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  std::vector<std::string> header = split(trim(line));
  bool labeled = !header.empty() && trim(header.back()) == "label";
  const size_t d = header.size() - (labeled ? 1 : 0);
  if (d < 1) throw std::runtime_error(path + ": header has no coordinate columns");
  for (size_t c = 0; c < d; ++c) {
    if (trim(header[c]) != "x" + std::to_string(c + 1)) {
      throw std::runtime_error(path + ": expected header x1,...,xD[,label]");
    }
  }
  std::vector<double> values;
  std::vector<int> labels;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": wrong number of fields");
    }
    for (size_t c = 0; c < d; ++c) values.push_back(parse_double(trim(cells[c]), path, line_no));
    if (labeled) labels.push_back(static_cast<int>(parse_double(trim(cells[d]), path, line_no)));
  }
  LabeledDataset out;
  const Index n = static_cast<Index>(values.size() / d);
  out.points.resize(n, static_cast<Index>(d));
  for (Index i = 0; i < n; ++i) {
    for (size_t c = 0; c < d; ++c) out.points(i, static_cast<Index>(c)) = values[static_cast<size_t>(i) * d + c];
  }
  out.labels = std::move(labels);
  return out;
}

void write_csv(const std::string& path, const LabeledDataset& data) {
  std::ofstream out = open_out(path);
  for (Index c = 0; c < data.points.cols(); ++c) out << (c > 0 ? "," : "") << "x" << c + 1;
  if (data.has_labels()) out << ",label";
  out << "\n";
  for (Index i = 0; i < data.points.rows(); ++i) {
    for (Index c = 0; c < data.points.cols(); ++c) out << (c > 0 ? "," : "") << format_double(data.points(i, c));
    if (data.has_labels()) out << "," << data.labels[static_cast<size_t>(i)];
    out << "\n";
  }
}

void write_table(const std::string& path, const std::vector<std::string>& header, const Matrix& rows) {
  std::ofstream out = open_out(path);
  for (size_t c = 0; c < header.size(); ++c) out << (c > 0 ? "," : "") << header[c];
  out << "\n";
  for (Index i = 0; i < rows.rows(); ++i) {
    for (Index c = 0; c < rows.cols(); ++c) out << (c > 0 ? "," : "") << format_double(rows(i, c));
    out << "\n";
  }
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx.get(), buf, static_cast<size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

Json to_json(const Vector& v) {
  Json j = Json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Json to_json(const Matrix& m) {
  Json j = Json::array();
  for (Index i = 0; i < m.rows(); ++i) j.push_back(to_json(Vector(m.row(i).transpose())));
  return j;
}

Vector vector_from_json(const Json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j.at(i).get<double>();
  return v;
}

Matrix matrix_from_json(const Json& j) {
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows > 0 ? static_cast<Index>(j.at(0).size()) : 0;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j.at(static_cast<size_t>(i));
    if (static_cast<Index>(row.size()) != cols) throw std::runtime_error("ragged matrix in JSON");
    for (Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<size_t>(c)).get<double>();
  }
  return m;
}

Json component_to_json(const LandParams& p) {
  Json j;
  j["mu"] = to_json(p.mu());
  j["A"] = to_json(p.factor());
  j["covariance"] = to_json(p.sigma());
  j["norm_const"] = p.norm_const;
  j["S"] = p.norm_const_samples;
  return j;
}

LandParams component_from_json(const Json& j) {
  LandParams p = LandParams::from_factor(vector_from_json(j.at("mu")), matrix_from_json(j.at("A")));
  p.norm_const = j.at("norm_const").get<double>();
  p.norm_const_samples = j.at("S").get<int>();
  return p;
}

Json mixture_to_json(const LandMixture& mix) {
  Json j;
  j["K"] = mix.size();
  j["weights"] = to_json(mix.weights);
  j["components"] = Json::array();
  for (const auto& c : mix.components) j["components"].push_back(component_to_json(c));
  return j;
}

LandMixture mixture_from_json(const Json& j) {
  LandMixture mix;
  mix.weights = vector_from_json(j.at("weights"));
  for (const auto& c : j.at("components")) mix.components.push_back(component_from_json(c));
  if (j.at("K").get<int>() != mix.size()) throw std::runtime_error("mixture JSON: K disagrees with components");
  return mix;
}

Json metric_record(const std::string& model, int k, std::uint64_t seed, const std::string& name,
                   double value) {
  Json j;
  j["model"] = model;
  j["K"] = k;
  j["seed"] = seed;
  j["metric_name"] = name;
  j["value"] = value;
  return j;
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

Json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return Json::parse(in);
}

}  // namespace land::io
