#include "gcsit/quantizer.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>

#include "gcsit/errors.hpp"
#include "gcsit/rng.hpp"

namespace gcsit {
namespace {

void check_bits(int bits) {
  if (bits < 0) throw DimensionError("codebook bits must be non-negative");
  if (bits > kMaxCodebookBits) {
    throw ResourceError("codebook with " + std::to_string(bits) + " bits exceeds the " +
                        std::to_string(kMaxCodebookBits) + "-bit guard");
  }
}

// ||S^H F||_F^2 for column-major n x p blocks.
double overlap(const Complex* s, const Complex* f, Index n, Index p) {
  double total = 0.0;
  for (Index a = 0; a < p; ++a) {
    const Complex* sa = s + a * n;
    for (Index b = 0; b < p; ++b) {
      const Complex* fb = f + b * n;
      double re = 0.0;
      double im = 0.0;
      for (Index r = 0; r < n; ++r) {
        const double sr = sa[r].real();
        const double si = sa[r].imag();
        const double fr = fb[r].real();
        const double fi = fb[r].imag();
        re += sr * fr + si * fi;
        im += sr * fi - si * fr;
      }
      total += re * re + im * im;
    }
  }
  return total;
}

}  // namespace

Codebook::Codebook(Index n, Index p, int bits, std::uint64_t seed, std::vector<Complex> data)
    : n_(n), p_(p), bits_(bits), seed_(seed), data_(std::move(data)) {
  check_bits(bits);
  if (p < 1 || p > n) throw DimensionError("Codebook: need 1 <= p <= n");
  if (data_.size() != size() * static_cast<std::size_t>(n * p)) {
    throw DimensionError("Codebook: data size does not match 2^bits entries");
  }
}

std::span<const Complex> Codebook::raw_entry(std::size_t k) const {
  const auto stride = static_cast<std::size_t>(n_ * p_);
  return std::span<const Complex>(data_).subspan(k * stride, stride);
}

CMatrix Codebook::entry_matrix(std::size_t k) const {
  if (k >= size()) throw DimensionError("Codebook: entry index out of range");
  return Eigen::Map<const CMatrix>(raw_entry(k).data(), n_, p_);
}

Codebook build_rvq_codebook(Index n, Index p, int bits, std::uint64_t seed) {
  check_bits(bits);
  if (p < 1 || p > n) throw DimensionError("build_rvq_codebook: need 1 <= p <= n");
  Rng rng(seed);
  const std::size_t count = std::size_t{1} << bits;
  const auto stride = static_cast<std::size_t>(n * p);
  std::vector<Complex> data(count * stride);
  for (std::size_t k = 0; k < count; ++k) {
    const CMatrix e = haar_truncated_unitary(n, p, rng).basis();
    std::memcpy(static_cast<void*>(data.data() + k * stride), e.data(), stride * sizeof(Complex));
  }
  return Codebook(n, p, bits, seed, std::move(data));
}

QuantizationResult quantize(const GrassmannPoint& f, const Codebook& cb) {
  if (f.n() != cb.n() || f.p() != cb.p()) {
    throw DimensionError("quantize: point and codebook live on different manifolds");
  }
  const CMatrix& fb = f.basis();
  const Complex* base = cb.raw().data();
  const auto stride = static_cast<std::size_t>(cb.n() * cb.p());
  std::size_t best = 0;
  double best_overlap = -1.0;
  for (std::size_t k = 0; k < cb.size(); ++k) {
    // d_c^2 = p - ||S^H F||^2, so the largest overlap is the nearest entry.
    const double o = overlap(base + k * stride, fb.data(), cb.n(), cb.p());
    if (o > best_overlap) {
      best_overlap = o;
      best = k;
    }
  }
  QuantizationResult out;
  out.index = best;
  out.point = cb.entry(best);
  out.distance = chordal_distance(f, out.point);
  return out;
}

int grassmann_real_dimension(int n, int p) {
  if (p < 0 || p > n) throw DimensionError("grassmann_real_dimension: need 0 <= p <= n");
  return 2 * p * (n - p);
}

int bit_scaling(double power, int real_dimension) {
  if (!(power > 0.0)) throw DimensionError("bit_scaling: power must be positive");
  if (real_dimension < 0) throw DimensionError("bit_scaling: negative dimension");
  const double exact = 0.5 * real_dimension * std::log2(power);
  // Absorb round-off so P = 2^A lands exactly on (G/2) A.
  const double bits = std::ceil(exact - 1e-9);
  return bits > 0.0 ? static_cast<int>(bits) : 0;
}

CompositeCodebook::CompositeCodebook(Index factors, Index length, int bits, std::uint64_t seed,
                                     std::vector<Complex> data)
    : factors_(factors), length_(length), bits_(bits), seed_(seed), data_(std::move(data)) {
  check_bits(bits);
  if (factors < 1 || length < 1) throw DimensionError("CompositeCodebook: empty factor");
  if (data_.size() != size() * static_cast<std::size_t>(factors * length)) {
    throw DimensionError("CompositeCodebook: data size does not match 2^bits tuples");
  }
}

CVector CompositeCodebook::component(std::size_t k, Index l) const {
  if (k >= size() || l < 0 || l >= factors_) {
    throw DimensionError("CompositeCodebook: index out of range");
  }
  const auto offset = (k * static_cast<std::size_t>(factors_) + static_cast<std::size_t>(l)) *
                      static_cast<std::size_t>(length_);
  return Eigen::Map<const CVector>(data_.data() + offset, length_);
}

CompositeCodebook build_composite_codebook(Index factors, Index length, int bits,
                                           std::uint64_t seed) {
  check_bits(bits);
  if (factors < 1 || length < 1) throw DimensionError("build_composite_codebook: empty factor");
  Rng rng(seed);
  const std::size_t count = std::size_t{1} << bits;
  std::vector<Complex> data;
  data.reserve(count * static_cast<std::size_t>(factors * length));
  for (std::size_t k = 0; k < count; ++k) {
    for (Index l = 0; l < factors; ++l) {
      CVector v = complex_gaussian(length, 1, rng).col(0);
      v.normalize();
      data.insert(data.end(), v.data(), v.data() + length);
    }
  }
  return CompositeCodebook(factors, length, bits, seed, std::move(data));
}

GrassmannPoint vectorize_direction(const CMatrix& v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw RankError("vectorize_direction: zero or non-finite matrix");
  }
  CMatrix line = Eigen::Map<const CMatrix>(v.data(), v.size(), 1) / norm;
  return GrassmannPoint(std::move(line));
}

CompositeQuantization nc_cgq_quantize(std::span<const CMatrix> cross_channels,
                                      const CompositeCodebook& cb) {
  if (static_cast<Index>(cross_channels.size()) != cb.factors()) {
    throw DimensionError("nc_cgq_quantize: channel count does not match codebook factors");
  }
  const Index rows = cross_channels.front().rows();
  const Index cols = cross_channels.front().cols();
  std::vector<CVector> lines;
  for (const auto& h : cross_channels) {
    if (h.rows() != rows || h.cols() != cols || h.size() != cb.length()) {
      throw DimensionError("nc_cgq_quantize: channel size does not match codebook length");
    }
    lines.push_back(vectorize_direction(h).basis().col(0));
  }

  const Complex* base = cb.raw().data();
  const auto L = static_cast<std::size_t>(cb.length());
  const auto F = static_cast<std::size_t>(cb.factors());
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t k = 0; k < cb.size(); ++k) {
    double score = 0.0;
    for (std::size_t l = 0; l < F; ++l) {
      score += overlap(base + (k * F + l) * L, lines[l].data(), cb.length(), 1);
    }
    if (score > best_score) {
      best_score = score;
      best = k;
    }
  }

  CompositeQuantization out;
  out.index = best;
  for (std::size_t l = 0; l < F; ++l) {
    const CVector c = cb.component(best, static_cast<Index>(l));
    out.channels.emplace_back(Eigen::Map<const CMatrix>(c.data(), rows, cols));
    out.squared_distance += 1.0 - std::norm(c.dot(lines[l]));
  }
  return out;
}

VectorizedQuantization quantize_precoder_vectorized(const CMatrix& v, const Codebook& cb) {
  if (cb.p() != 1 || cb.n() != v.size()) {
    throw DimensionError("quantize_precoder_vectorized: codebook must live on G(Md, 1)");
  }
  const QuantizationResult q = quantize(vectorize_direction(v), cb);
  VectorizedQuantization out;
  out.index = q.index;
  out.distance = q.distance;
  out.direction = Eigen::Map<const CMatrix>(q.point.basis().data(), v.rows(), v.cols());
  return out;
}

namespace {
constexpr std::array<char, 8> kMagic{'G', 'C', 'S', 'I', 'T', 'C', 'B', '1'};
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const std::uint32_t header[3] = {static_cast<std::uint32_t>(cb.n()),
                                   static_cast<std::uint32_t>(cb.p()),
                                   static_cast<std::uint32_t>(cb.bits())};
  const std::uint64_t seed = cb.seed();
  out.write(kMagic.data(), kMagic.size());
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(&seed), sizeof(seed));
  out.write(reinterpret_cast<const char*>(cb.raw().data()),
            static_cast<std::streamsize>(cb.raw().size() * sizeof(Complex)));
  if (!out) throw Error("short write to " + path.string());
}

Codebook load_codebook(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::array<char, 8> magic{};
  std::uint32_t header[3] = {};
  std::uint64_t seed = 0;
  in.read(magic.data(), magic.size());
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  in.read(reinterpret_cast<char*>(&seed), sizeof(seed));
  if (!in || magic != kMagic) throw Error(path.string() + " is not a codebook file");
  const auto n = static_cast<Index>(header[0]);
  const auto p = static_cast<Index>(header[1]);
  const auto bits = static_cast<int>(header[2]);
  check_bits(bits);
  std::vector<Complex> data((std::size_t{1} << bits) * static_cast<std::size_t>(n * p));
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(Complex)));
  if (!in) throw Error(path.string() + " is truncated");
  return Codebook(n, p, bits, seed, std::move(data));
}

std::filesystem::path codebook_cache_name(Index n, Index p, int bits, std::uint64_t seed) {
  return "codebook_n" + std::to_string(n) + "_p" + std::to_string(p) + "_b" +
         std::to_string(bits) + "_s" + std::to_string(seed) + ".bin";
}

}  // namespace gcsit
