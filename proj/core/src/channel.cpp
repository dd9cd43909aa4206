#include "gcsit/channel.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "gcsit/errors.hpp"

namespace gcsit {

using nlohmann::json;

void SystemDims::validate() const {
  if (K < 2 || M < 1 || N < 1 || d < 1) {
    throw DimensionError("SystemDims: need K >= 2 and M, N, d >= 1");
  }
  if (d > M || d > N) {
    throw DimensionError("SystemDims: d must not exceed min(M, N)");
  }
}

ChannelSet::ChannelSet(SystemDims dims, std::vector<CMatrix> blocks)
    : dims_(dims), blocks_(std::move(blocks)) {
  dims_.validate();
  if (blocks_.size() != static_cast<std::size_t>(dims_.K * dims_.K)) {
    throw DimensionError("ChannelSet: expected K*K channel blocks");
  }
  for (const auto& h : blocks_) {
    if (h.rows() != dims_.N || h.cols() != dims_.M) {
      throw DimensionError("ChannelSet: every block must be N x M");
    }
    if (!h.allFinite()) {
      throw DimensionError("ChannelSet: non-finite channel entry");
    }
  }
}

const CMatrix& ChannelSet::at(int user, int bs) const {
  if (user < 0 || user >= dims_.K || bs < 0 || bs >= dims_.K) {
    throw DimensionError("ChannelSet::at: index out of range");
  }
  return blocks_[static_cast<std::size_t>(user * dims_.K + bs)];
}

ChannelSet generate_channel_set(const SystemDims& dims, Rng& rng) {
  dims.validate();
  std::vector<CMatrix> blocks;
  blocks.reserve(static_cast<std::size_t>(dims.K * dims.K));
  for (int i = 0; i < dims.K; ++i) {
    for (int j = 0; j < dims.K; ++j) {
      blocks.push_back(complex_gaussian(dims.N, dims.M, rng));
    }
  }
  return ChannelSet(dims, std::move(blocks));
}

int stack_block_index(int user, int bs) {
  if (user == bs) {
    throw DimensionError("stack_block_index: direct link is not part of the stack");
  }
  return user < bs ? user : user - 1;
}

CMatrix stacked_interference_matrix(const ChannelSet& cs, int bs) {
  const auto& dims = cs.dims();
  if (bs < 0 || bs >= dims.K) {
    throw DimensionError("stacked_interference_matrix: BS index out of range");
  }
  CMatrix stack(dims.stack_rows(), dims.M);
  for (int i = 0; i < dims.K; ++i) {
    if (i == bs) continue;
    stack.middleRows(stack_block_index(i, bs) * dims.N, dims.N) = cs.at(i, bs);
  }
  return stack;
}

namespace {

json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) {
      row.push_back({m(r, c).real(), m(r, c).imag()});
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from_json(const json& j, int rows, int cols) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(rows)) {
    throw DimensionError("channel JSON: wrong row count");
  }
  CMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(cols)) {
      throw DimensionError("channel JSON: wrong column count");
    }
    for (int c = 0; c < cols; ++c) {
      const auto& e = row[static_cast<std::size_t>(c)];
      if (!e.is_array() || e.size() != 2) {
        throw DimensionError("channel JSON: entries must be [re, im] pairs");
      }
      m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

}  // namespace

std::string channel_set_to_json(const ChannelSet& cs) {
  const auto& dims = cs.dims();
  json h = json::array();
  for (int i = 0; i < dims.K; ++i) {
    json row = json::array();
    for (int j = 0; j < dims.K; ++j) {
      row.push_back(matrix_to_json(cs.at(i, j)));
    }
    h.push_back(std::move(row));
  }
  json doc = {{"K", dims.K}, {"M", dims.M}, {"N", dims.N}, {"d", dims.d}, {"H", std::move(h)}};
  return doc.dump(1);
}

ChannelSet channel_set_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
    SystemDims dims{doc.at("K").get<int>(), doc.at("M").get<int>(), doc.at("N").get<int>(),
                    doc.at("d").get<int>()};
    dims.validate();
    const auto& h = doc.at("H");
    if (!h.is_array() || h.size() != static_cast<std::size_t>(dims.K)) {
      throw DimensionError("channel JSON: H must have K rows");
    }
    std::vector<CMatrix> blocks;
    for (int i = 0; i < dims.K; ++i) {
      const auto& row = h[static_cast<std::size_t>(i)];
      if (!row.is_array() || row.size() != static_cast<std::size_t>(dims.K)) {
        throw DimensionError("channel JSON: H rows must have K entries");
      }
      for (int j = 0; j < dims.K; ++j) {
        blocks.push_back(matrix_from_json(row[static_cast<std::size_t>(j)], dims.N, dims.M));
      }
    }
    return ChannelSet(dims, std::move(blocks));
  } catch (const json::exception& e) {
    throw DimensionError(std::string("channel JSON: ") + e.what());
  }
}

void save_channel_set(const ChannelSet& cs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << channel_set_to_json(cs) << '\n';
}

ChannelSet load_channel_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return channel_set_from_json(buf.str());
}

}  // namespace gcsit
