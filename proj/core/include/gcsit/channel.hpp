#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gcsit/linalg.hpp"
#include "gcsit/rng.hpp"

namespace gcsit {

/// Symmetric K-cell MIMO interference channel: K BS/user pairs, M antennas per
/// BS, N per user, d streams per user.
struct SystemDims {
  int K = 0;
  int M = 0;
  int N = 0;
  int d = 0;

  /// Throws DimensionError unless every field is positive and d <= min(M, N).
  void validate() const;

  /// Rows of a BS's stacked interference matrix, (K-1) N.
  int stack_rows() const { return (K - 1) * N; }

  /// (K-1) N > M: the stack is tall, so its column space is a proper
  /// subspace and sharing it is cheaper than sharing the channels.
  bool stack_is_tall() const { return stack_rows() > M; }

  friend bool operator==(const SystemDims&, const SystemDims&) = default;
};

/// One channel realization. at(i, j) is the N x M channel from BS j to user i.
class ChannelSet {
 public:
  ChannelSet(SystemDims dims, std::vector<CMatrix> blocks);

  const SystemDims& dims() const { return dims_; }
  const CMatrix& at(int user, int bs) const;

 private:
  SystemDims dims_;
  std::vector<CMatrix> blocks_;  // row-major over (user, bs)
};

/// Draws every H_ij (direct links included) with i.i.d. CN(0, 1) entries.
ChannelSet generate_channel_set(const SystemDims& dims, Rng& rng);

/// Position of user i's row block inside BS j's stack (users in ascending
/// order with j skipped). Requires i != j.
int stack_block_index(int user, int bs);

/// H_j = [H_1j; ...; H_{j-1,j}; H_{j+1,j}; ...; H_Kj], a (K-1)N x M matrix.
CMatrix stacked_interference_matrix(const ChannelSet& cs, int bs);

/// JSON dump used for regression fixtures:
/// {"K":..,"M":..,"N":..,"d":..,"H":[[H_00, H_01, ...], ...]} where each H_ij
/// is a list of rows and each entry is an [re, im] pair.
std::string channel_set_to_json(const ChannelSet& cs);
ChannelSet channel_set_from_json(std::string_view text);

void save_channel_set(const ChannelSet& cs, const std::filesystem::path& path);
ChannelSet load_channel_set(const std::filesystem::path& path);

}  // namespace gcsit
