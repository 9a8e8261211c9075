#pragma once

// CSV datasets, JSON model documents and file hashing.

#include "land/eval.hpp"
#include "land/land.hpp"
#include "land/mixture.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace land::io {

using Json = nlohmann::ordered_json;

/// Reads a CSV with header x1,...,xD[,label]. Throws std::runtime_error on
/// malformed input.
LabeledDataset read_csv(const std::string& path);

/// Writes the dataset with the same header layout; doubles round-trip.
void write_csv(const std::string& path, const LabeledDataset& data);

/// Generic numeric table with the given header.
void write_table(const std::string& path, const std::vector<std::string>& header, const Matrix& rows);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// Lowercase hex SHA-256 of the file contents.
std::string sha256_file(const std::string& path);

Json to_json(const Vector& v);
Json to_json(const Matrix& m);
Vector vector_from_json(const Json& j);
Matrix matrix_from_json(const Json& j);

/// {mu, A, covariance, norm_const, S}
Json component_to_json(const LandParams& p);
LandParams component_from_json(const Json& j);

/// {K, weights, components}
Json mixture_to_json(const LandMixture& mix);
LandMixture mixture_from_json(const Json& j);

/// {model, K, seed, metric_name, value}
Json metric_record(const std::string& model, int k, std::uint64_t seed, const std::string& name,
                   double value);

/// Writes indented JSON followed by a newline.
void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

}  // namespace land::io
