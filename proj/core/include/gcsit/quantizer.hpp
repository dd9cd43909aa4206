#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gcsit/linalg.hpp"

namespace gcsit {

/// Largest codebook exponent accepted at desk scale (2^22 entries).
inline constexpr int kMaxCodebookBits = 22;

/// Immutable list of 2^bits points on G(n, p), stored contiguously.
class Codebook {
 public:
  Codebook(Index n, Index p, int bits, std::uint64_t seed, std::vector<Complex> data);

  Index n() const { return n_; }
  Index p() const { return p_; }
  int bits() const { return bits_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return std::size_t{1} << bits_; }

  CMatrix entry_matrix(std::size_t k) const;
  GrassmannPoint entry(std::size_t k) const { return GrassmannPoint(entry_matrix(k)); }

  /// Column-major n x p block of entry k.
  std::span<const Complex> raw_entry(std::size_t k) const;
  std::span<const Complex> raw() const { return data_; }

 private:
  Index n_;
  Index p_;
  int bits_;
  std::uint64_t seed_;
  std::vector<Complex> data_;
};

/// RVQ codebook: 2^bits i.i.d. Haar points on G(n, p), reproducible from
/// `seed`. Throws ResourceError for bits > kMaxCodebookBits.
Codebook build_rvq_codebook(Index n, Index p, int bits, std::uint64_t seed);

struct QuantizationResult {
  std::size_t index = 0;
  GrassmannPoint point;
  double distance = 0.0;  // chordal distance from the source to `point`
};

/// Nearest codeword in chordal distance; ties go to the lowest index.
QuantizationResult quantize(const GrassmannPoint& f, const Codebook& cb);

/// Real dimension 2 p (n - p) of G(n, p).
int grassmann_real_dimension(int n, int p);

/// Bits ceil((G/2) log2 P), floored at zero.
int bit_scaling(double power, int real_dimension);

/// Codebook on a product of `factors` copies of G(length, 1): 2^bits tuples of
/// unit vectors, quantized jointly.
class CompositeCodebook {
 public:
  CompositeCodebook(Index factors, Index length, int bits, std::uint64_t seed,
                    std::vector<Complex> data);

  Index factors() const { return factors_; }
  Index length() const { return length_; }
  int bits() const { return bits_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return std::size_t{1} << bits_; }

  /// Unit vector for factor `l` of tuple `k`.
  CVector component(std::size_t k, Index l) const;
  std::span<const Complex> raw() const { return data_; }

 private:
  Index factors_;
  Index length_;
  int bits_;
  std::uint64_t seed_;
  std::vector<Complex> data_;
};

CompositeCodebook build_composite_codebook(Index factors, Index length, int bits,
                                           std::uint64_t seed);

struct CompositeQuantization {
  std::size_t index = 0;
  std::vector<CMatrix> channels;   // unit-Frobenius reconstructions, same shape as inputs
  double squared_distance = 0.0;   // sum over factors of d_c^2
};

/**
 * Baseline channel sharing: each cross channel is vectorized (column-major),
 * normalized and treated as a line; the tuple minimizing the summed squared
 * chordal distance is selected and reshaped back.
 */
CompositeQuantization nc_cgq_quantize(std::span<const CMatrix> cross_channels,
                                      const CompositeCodebook& cb);

struct VectorizedQuantization {
  std::size_t index = 0;
  CMatrix direction;      // M x d, unit Frobenius norm
  double distance = 0.0;  // chordal distance on G(Md, 1)
};

/// Quantizes vec(V)/||V|| as a line on G(Md, 1) and reshapes the codeword.
VectorizedQuantization quantize_precoder_vectorized(const CMatrix& v, const Codebook& cb);

/// Column-major vec(V) / ||V||_F as a point on G(rows*cols, 1).
GrassmannPoint vectorize_direction(const CMatrix& v);

/// Binary dump: magic "GCSITCB1", n, p, bits (u32), seed (u64), then entries
/// as (re, im) doubles in host byte order.
void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

/// Canonical cache file name for a codebook key.
std::filesystem::path codebook_cache_name(Index n, Index p, int bits, std::uint64_t seed);

}  // namespace gcsit
