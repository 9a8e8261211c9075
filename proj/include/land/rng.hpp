#pragma once

#include "land/types.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>

namespace land::rng {

/// Independent engine for the stream named by (seed, keys...). The same key
/// tuple always yields the same sequence, regardless of which thread asks.
std::mt19937_64 stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

/// rows x cols standard normal draws; row r comes from stream(seed, keys..., r).
Matrix standard_normal_rows(std::uint64_t seed, std::initializer_list<std::uint64_t> keys,
                            Index rows, Index cols);

/// Shifts and whitens the rows so the sample mean is exactly zero and the
/// sample covariance (1/S normalization) is exactly the identity.
/// Requires rows > cols.
void moment_match(Matrix& z);

}  // namespace land::rng
