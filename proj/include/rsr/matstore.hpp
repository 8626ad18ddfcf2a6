#pragma once

// Matrix storage, synthetic data generation and incoherence estimation.

#include "rsr/common.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

namespace rsr {

/// Observed matrix D = L + C (+ N) with optional ground truth.
struct DataInstance {
  DenseMatrix observed;
  std::optional<DenseMatrix> truth_low_rank;
  std::optional<DenseMatrix> truth_outliers;
  std::optional<DenseMatrix> truth_noise;
  std::optional<IndexList> outlier_indices;  // sorted ascending
  std::optional<Index> true_rank;

  Index rows() const { return observed.rows(); }
  Index cols() const { return observed.cols(); }
  bool has_truth() const { return truth_low_rank.has_value() && outlier_indices.has_value(); }
};

/// Checks the data-model invariants of an instance; throws InvalidParameter.
inline void check_consistency(const DataInstance& inst) {
  const auto& d = inst.observed;
  require(d.rows() >= 1 && d.cols() >= 1, "instance: empty observed matrix");
  require_finite(d, "instance.observed");
  if (inst.outlier_indices) {
    const auto& idx = *inst.outlier_indices;
    require(std::is_sorted(idx.begin(), idx.end()) &&
                std::adjacent_find(idx.begin(), idx.end()) == idx.end(),
            "instance: outlier indices must be strictly increasing");
    for (Index i : idx) require(i >= 0 && i < d.cols(), "instance: outlier index out of range");
    if (inst.truth_low_rank)
      for (Index i : idx)
        require(inst.truth_low_rank->col(i).isZero(0.0),
                "instance: low-rank truth must vanish on outlier columns");
  }
  if (inst.truth_low_rank && inst.truth_outliers) {
    DenseMatrix sum = *inst.truth_low_rank + *inst.truth_outliers;
    if (inst.truth_noise) sum += *inst.truth_noise;
    const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
    require((sum - d).cwiseAbs().maxCoeff() <= 1e-12 * scale,
            "instance: observed != low_rank + outliers (+ noise)");
  }
}

// ---------------------------------------------------------------------------
// Synthetic generators

struct SyntheticParams {
  Index n1 = 0;
  Index n2 = 0;
  Index rank = 0;
  double outlier_prob = 0.0;
  double outlier_sigma = 20.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  /// When set, exactly this many outlier columns are drawn uniformly instead
  /// of the per-column Bernoulli(outlier_prob) designation.
  std::optional<Index> fixed_outlier_count;
};

/// L = U V^T with i.i.d. N(0,1) factors; outlier columns of L are zeroed and
/// replaced in C by i.i.d. N(0, outlier_sigma^2) entries.
inline DataInstance generate_synthetic(const SyntheticParams& p) {
  require(p.n1 >= 1 && p.n2 >= 1, "generate_synthetic: dimensions must be positive");
  require(p.rank >= 0 && p.rank <= std::min(p.n1, p.n2),
          "generate_synthetic: rank must not exceed min(n1, n2)");
  require(p.outlier_prob >= 0.0 && p.outlier_prob < 1.0,
          "generate_synthetic: outlier probability must lie in [0, 1)");
  require(p.outlier_sigma >= 0.0 && p.noise_sigma >= 0.0,
          "generate_synthetic: standard deviations must be nonnegative");
  if (p.fixed_outlier_count)
    require(*p.fixed_outlier_count >= 0 && *p.fixed_outlier_count <= p.n2,
            "generate_synthetic: fixed outlier count out of range");

  Rng rng(p.seed);
  const DenseMatrix u = gaussian_matrix(p.n1, p.rank, 1.0, rng);
  const DenseMatrix v = gaussian_matrix(p.n2, p.rank, 1.0, rng);

  IndexList outliers;
  if (p.fixed_outlier_count) {
    IndexList perm(static_cast<std::size_t>(p.n2));
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index i = 0; i < *p.fixed_outlier_count; ++i) {
      std::uniform_int_distribution<Index> pick(i, p.n2 - 1);
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
    }
    outliers.assign(perm.begin(), perm.begin() + *p.fixed_outlier_count);
    std::sort(outliers.begin(), outliers.end());
  } else {
    std::bernoulli_distribution coin(p.outlier_prob);
    for (Index j = 0; j < p.n2; ++j)
      if (coin(rng)) outliers.push_back(j);
  }

  DataInstance inst;
  DenseMatrix low_rank = u * v.transpose();
  DenseMatrix outlier_part = DenseMatrix::Zero(p.n1, p.n2);
  std::normal_distribution<double> outlier_entry(0.0, p.outlier_sigma);
  for (Index j : outliers) {
    low_rank.col(j).setZero();
    for (Index i = 0; i < p.n1; ++i) outlier_part(i, j) = outlier_entry(rng);
  }
  inst.observed = low_rank + outlier_part;
  if (p.noise_sigma > 0.0) {
    DenseMatrix noise = gaussian_matrix(p.n1, p.n2, p.noise_sigma, rng);
    inst.observed += noise;
    inst.truth_noise = std::move(noise);
  }
  inst.truth_low_rank = std::move(low_rank);
  inst.truth_outliers = std::move(outlier_part);
  inst.outlier_indices = std::move(outliers);
  inst.true_rank = p.rank;
  return inst;
}

/// Block layout of the clustered-row construction: L = G^T, G = [G_1 ... G_n],
/// G_i = U_i Q_i with U_i (ambient x per_cluster_dims) and Q_i
/// (per_cluster_dims x sizes[i]).
struct ClusteredRowsParams {
  Index n_clusters = 1;
  Index per_cluster_dims = 1;
  IndexList sizes;
  Index ambient = 0;
  std::uint64_t seed = 0;
};

/// Block sizes for the two-regime layout: the first half of the blocks is
/// five times as populated as the second half (100r/n versus 20r/n columns
/// per block at full scale), rescaled to `total_rows` with largest-remainder
/// rounding.
inline IndexList two_regime_sizes(Index n_clusters, Index total_rows) {
  require(n_clusters >= 1, "two_regime_sizes: need at least one cluster");
  require(total_rows >= n_clusters, "two_regime_sizes: fewer rows than clusters");
  std::vector<double> weight(static_cast<std::size_t>(n_clusters));
  for (Index i = 0; i < n_clusters; ++i)
    weight[static_cast<std::size_t>(i)] = (n_clusters == 1 || i < n_clusters / 2) ? 100.0 : 20.0;
  const double total_weight = std::accumulate(weight.begin(), weight.end(), 0.0);

  IndexList sizes(weight.size());
  std::vector<std::pair<double, std::size_t>> remainder;
  Index assigned = 0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    const double exact = weight[i] / total_weight * static_cast<double>(total_rows);
    sizes[i] = static_cast<Index>(std::floor(exact));
    assigned += sizes[i];
    remainder.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainder.begin(), remainder.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (Index k = 0; k < total_rows - assigned; ++k) ++sizes[remainder[static_cast<std::size_t>(k)].second];
  return sizes;
}

/// Returns L = G^T whose rows lie in a union of low-dimensional subspaces.
inline DenseMatrix generate_clustered_rows(const ClusteredRowsParams& p) {
  require(p.n_clusters >= 1 && p.per_cluster_dims >= 1 && p.ambient >= 1,
          "generate_clustered_rows: counts must be positive");
  require(static_cast<Index>(p.sizes.size()) == p.n_clusters,
          "generate_clustered_rows: one size per cluster required");
  for (Index s : p.sizes)
    require(s >= p.per_cluster_dims, "generate_clustered_rows: block smaller than its rank");
  require(p.n_clusters * p.per_cluster_dims <= p.ambient,
          "generate_clustered_rows: total rank exceeds ambient dimension");

  const Index rows = std::accumulate(p.sizes.begin(), p.sizes.end(), Index{0});
  Rng rng(p.seed);
  DenseMatrix g(p.ambient, rows);
  Index offset = 0;
  for (Index i = 0; i < p.n_clusters; ++i) {
    const Index width = p.sizes[static_cast<std::size_t>(i)];
    const DenseMatrix u = gaussian_matrix(p.ambient, p.per_cluster_dims, 1.0, rng);
    const DenseMatrix q = gaussian_matrix(p.per_cluster_dims, width, 1.0, rng);
    g.middleCols(offset, width) = u * q;
    offset += width;
  }
  return g.transpose();
}

// ---------------------------------------------------------------------------
// Incoherence

/// Tight incoherence parameters of a low-rank matrix (each bound achieved
/// with equality by some row of the corresponding orthonormal basis).
struct CoherenceStats {
  double mu_v = 0.0;
  double mu_v_prime = 0.0;
  double mu_u = 0.0;
  double eta_v = 0.0;
  double eta_u = 0.0;
  double gamma = 0.0;
  Index rank_used = 0;
};

namespace detail {

struct CompactSvd {
  DenseMatrix u;
  DenseMatrix v;
  Vector singular_values;
  Index rank = 0;
};

inline CompactSvd compact_svd(const DenseMatrix& m, double rank_tol) {
  Eigen::BDCSVD<DenseMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  CompactSvd out;
  out.singular_values = s;
  if (s.size() == 0 || s(0) <= 0.0) return out;
  const double cut = rank_tol * s(0);
  while (out.rank < s.size() && s(out.rank) > cut) ++out.rank;
  out.u = svd.matrixU().leftCols(out.rank);
  out.v = svd.matrixV().leftCols(out.rank);
  return out;
}

inline double max_row_energy(const DenseMatrix& basis) {
  return basis.rowwise().squaredNorm().maxCoeff();
}

}  // namespace detail

inline CoherenceStats estimate_coherence(const DenseMatrix& low_rank, double rank_tol = 1e-9) {
  require(rank_tol > 0.0 && rank_tol < 1.0, "estimate_coherence: rank_tol must lie in (0, 1)");
  require_finite(low_rank, "estimate_coherence");
  if (low_rank.isZero(0.0)) throw DegenerateInput("estimate_coherence: zero matrix");

  const auto svd = detail::compact_svd(low_rank, rank_tol);
  const double r = static_cast<double>(svd.rank);
  const double n1 = static_cast<double>(low_rank.rows());
  const double n2 = static_cast<double>(low_rank.cols());

  CoherenceStats stats;
  stats.rank_used = svd.rank;
  stats.mu_v = n2 / r * detail::max_row_energy(svd.v);
  stats.mu_u = n1 / r * detail::max_row_energy(svd.u);
  stats.eta_v = std::sqrt(n2) * svd.v.cwiseAbs().maxCoeff();
  stats.eta_u = std::sqrt(n1) * svd.u.cwiseAbs().maxCoeff();

  // Nonzero columns relative to the largest column norm.
  const Vector col_norms = low_rank.colwise().norm().transpose();
  const double zero_cut = rank_tol * col_norms.maxCoeff();
  IndexList nonzero;
  for (Index j = 0; j < col_norms.size(); ++j)
    if (col_norms(j) > zero_cut) nonzero.push_back(j);
  const double n2_prime = static_cast<double>(nonzero.size());

  double gamma_energy = 0.0;
  for (Index j : nonzero) gamma_energy = std::max(gamma_energy, svd.v.row(j).squaredNorm());
  stats.gamma = n2_prime / r * gamma_energy;

  if (static_cast<Index>(nonzero.size()) == low_rank.cols()) {
    stats.mu_v_prime = stats.mu_v;
  } else {
    const DenseMatrix reduced = low_rank(Eigen::all, nonzero);
    const auto svd_prime = detail::compact_svd(reduced, rank_tol);
    stats.mu_v_prime = n2_prime / static_cast<double>(svd_prime.rank) *
                       detail::max_row_energy(svd_prime.v);
  }
  return stats;
}

// ---------------------------------------------------------------------------
// File formats
//
// CSV: first line "<rows>,<cols>", then one comma-separated line per row with
// shortest round-trip decimal representations.
// Binary: magic "RMAT1", rows and cols as little-endian uint64, then the
// entries row-major as little-endian IEEE-754 binary64.

inline constexpr std::array<char, 5> kBinaryMagic{'R', 'M', 'A', 'T', '1'};

namespace detail {

inline std::string format_double(double x) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view token) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r'))
    token.remove_suffix(1);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
    throw InvalidParameter("matrix file: malformed number '" + std::string(token) + "'");
  return value;
}

inline Index parse_count(std::string_view token) {
  const double v = parse_double(token);
  if (v < 1 || v != std::floor(v)) throw InvalidParameter("matrix file: bad dimension");
  return static_cast<Index>(v);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xffU);
  out.write(b.data(), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 8))
    throw InvalidParameter("matrix file: truncated binary data");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

}  // namespace detail

inline void write_csv(std::ostream& out, const DenseMatrix& m) {
  out << m.rows() << ',' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << detail::format_double(m(i, j));
    }
    out << '\n';
  }
}

inline DenseMatrix read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidParameter("csv: missing header");
  const auto comma = line.find(',');
  if (comma == std::string::npos) throw InvalidParameter("csv: header must be 'rows,cols'");
  const Index rows = detail::parse_count(std::string_view(line).substr(0, comma));
  const Index cols = detail::parse_count(std::string_view(line).substr(comma + 1));
  DenseMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) throw InvalidParameter("csv: fewer rows than declared");
    std::string_view rest(line);
    for (Index j = 0; j < cols; ++j) {
      const auto pos = rest.find(',');
      if ((pos == std::string_view::npos) != (j == cols - 1))
        throw InvalidParameter("csv: wrong number of columns in row " + std::to_string(i));
      m(i, j) = detail::parse_double(rest.substr(0, pos));
      if (pos != std::string_view::npos) rest.remove_prefix(pos + 1);
    }
  }
  require_finite(m, "csv");
  return m;
}

inline void write_binary(std::ostream& out, const DenseMatrix& m) {
  out.write(kBinaryMagic.data(), static_cast<std::streamsize>(kBinaryMagic.size()));
  detail::put_u64(out, static_cast<std::uint64_t>(m.rows()));
  detail::put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      std::uint64_t bits = 0;
      const double x = m(i, j);
      std::memcpy(&bits, &x, sizeof bits);
      detail::put_u64(out, bits);
    }
}

inline DenseMatrix read_binary(std::istream& in) {
  std::array<char, 5> magic{};
  if (!in.read(magic.data(), static_cast<std::streamsize>(magic.size())) || magic != kBinaryMagic)
    throw InvalidParameter("binary matrix: bad magic");
  const auto rows = detail::get_u64(in);
  const auto cols = detail::get_u64(in);
  if (rows == 0 || cols == 0 || rows > (1ULL << 32) || cols > (1ULL << 32))
    throw InvalidParameter("binary matrix: bad dimensions");
  DenseMatrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      const std::uint64_t bits = detail::get_u64(in);
      double x = 0.0;
      std::memcpy(&x, &bits, sizeof x);
      m(i, j) = x;
    }
  require_finite(m, "binary matrix");
  return m;
}

enum class MatrixFormat { csv, binary };

inline MatrixFormat format_for_path(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0 ? MatrixFormat::csv
                                                                          : MatrixFormat::binary;
}

inline void write_matrix(const std::string& path, const DenseMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidParameter("cannot open '" + path + "' for writing");
  if (format_for_path(path) == MatrixFormat::csv)
    write_csv(out, m);
  else
    write_binary(out, m);
  if (!out) throw Error("write failed: " + path);
}

inline DenseMatrix read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidParameter("cannot open '" + path + "'");
  return format_for_path(path) == MatrixFormat::csv ? read_csv(in) : read_binary(in);
}

/// Sidecar index list: one decimal index per line.
inline void write_indices(std::ostream& out, const IndexList& idx) {
  for (Index i : idx) out << i << '\n';
}

inline IndexList read_indices(std::istream& in) {
  IndexList idx;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    Index v = 0;
    const char* end = line.data() + line.size();
    if (line.back() == '\r') --end;
    auto res = std::from_chars(line.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end || v < 0)
      throw InvalidParameter("index list: malformed line '" + line + "'");
    idx.push_back(v);
  }
  return idx;
}

inline void write_indices(const std::string& path, const IndexList& idx) {
  std::ofstream out(path);
  if (!out) throw InvalidParameter("cannot open '" + path + "' for writing");
  write_indices(out, idx);
}

inline IndexList read_indices(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open '" + path + "'");
  return read_indices(in);
}

}  // namespace rsr
