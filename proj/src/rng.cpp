#include "land/rng.hpp"

#include <vector>

namespace land::rng {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> keys,
                            const std::uint64_t* extra) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (keys.size() + 2));
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto k : keys) push(k);
  if (extra != nullptr) push(*extra);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

std::mt19937_64 stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  return make_engine(seed, keys, nullptr);
}

Matrix standard_normal_rows(std::uint64_t seed, std::initializer_list<std::uint64_t> keys,
                            Index rows, Index cols) {
  Matrix z(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto idx = static_cast<std::uint64_t>(r);
    auto eng = make_engine(seed, keys, &idx);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index c = 0; c < cols; ++c) z(r, c) = normal(eng);
  }
  return z;
}

void moment_match(Matrix& z) {
  const Index s = z.rows(), d = z.cols();
  if (s <= d) throw std::invalid_argument("moment_match: need more rows than columns");
  const Eigen::RowVectorXd mean = z.colwise().mean();
  z.rowwise() -= mean;
  const Matrix cov = (z.transpose() * z) / static_cast<double>(s);
  const Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw std::runtime_error("moment_match: singular sample covariance");
  // z <- z L^{-T}, so that (1/S) z^T z = L^{-1} C L^{-T} = I.
  const Matrix zt = llt.matrixL().solve(z.transpose());
  z = zt.transpose();
}

}  // namespace land::rng
