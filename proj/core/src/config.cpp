#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gcsit/errors.hpp"
#include "gcsit/harness.hpp"

namespace gcsit {

using nlohmann::json;

std::string_view to_string(CsitMode m) {
  switch (m) {
    case CsitMode::perfect: return "perfect";
    case CsitMode::rvq: return "rvq";
    case CsitMode::perturbation: return "perturbation";
    case CsitMode::nc_cgq: return "nc_cgq";
  }
  return "?";
}

std::string_view to_string(PrecoderMode m) {
  return m == PrecoderMode::subspace ? "subspace" : "vectorized";
}

std::string_view to_string(BitsMode m) { return m == BitsMode::fixed ? "fixed" : "scaled"; }

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::I: return "I";
    case Scenario::II: return "II";
    case Scenario::III: return "III";
  }
  return "?";
}

std::string_view to_string(Receiver r) {
  return r == Receiver::projection ? "projection" : "mmse_sic";
}

std::string_view to_string(BallCoefficientSource s) {
  switch (s) {
    case BallCoefficientSource::calibrate: return "calibrate";
    case BallCoefficientSource::closed_form: return "closed_form";
    case BallCoefficientSource::fixed: return "fixed";
  }
  return "?";
}

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const Enum (&values)[N], std::string_view field) {
  for (Enum v : values) {
    if (to_string(v) == text) return v;
  }
  throw ConfigError("unknown " + std::string(field) + " '" + std::string(text) + "'");
}

constexpr CsitMode kCsitModes[] = {CsitMode::perfect, CsitMode::rvq, CsitMode::perturbation,
                                   CsitMode::nc_cgq};
constexpr PrecoderMode kPrecoderModes[] = {PrecoderMode::subspace, PrecoderMode::vectorized};
constexpr BitsMode kBitsModes[] = {BitsMode::fixed, BitsMode::scaled};
constexpr Scenario kScenarios[] = {Scenario::I, Scenario::II, Scenario::III};
constexpr Receiver kReceivers[] = {Receiver::projection, Receiver::mmse_sic};
constexpr BallCoefficientSource kSources[] = {BallCoefficientSource::calibrate,
                                              BallCoefficientSource::closed_form,
                                              BallCoefficientSource::fixed};

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

}  // namespace

CsitMode parse_csit_mode(std::string_view s) { return parse_enum(s, kCsitModes, "csit_mode"); }

void SimConfig::validate() const {
  try {
    dims.validate();
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  }
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (snr_grid.empty()) throw ConfigError("snr_grid must not be empty");
  for (double s : snr_grid) {
    if (!std::isfinite(s)) throw ConfigError("snr_grid entries must be finite");
  }
  if (csit_mode == CsitMode::nc_cgq && precoder_mode != PrecoderMode::vectorized) {
    throw ConfigError("nc_cgq requires precoder_mode 'vectorized'");
  }
  if (csit_mode == CsitMode::nc_cgq && bits_mode != BitsMode::fixed) {
    throw ConfigError("nc_cgq supports fixed bits only");
  }
  if (bits_mode == BitsMode::fixed && (n_b < 0 || n_c < 0)) {
    throw ConfigError("n_b and n_c must be non-negative");
  }
  if (!(max_exclusion_rate >= 0.0 && max_exclusion_rate <= 1.0)) {
    throw ConfigError("max_exclusion_rate must lie in [0, 1]");
  }
  if (!(solver.tol >= 0.0) || solver.max_iter < 1 || solver.restarts < 0) {
    throw ConfigError("invalid solver settings");
  }
  const auto& pt = perturbation;
  if (pt.source == BallCoefficientSource::fixed && !(pt.c_csi > 0.0 && pt.c_precoder > 0.0)) {
    throw ConfigError("fixed ball coefficients must be positive");
  }
  if (pt.calibration_bits < 0 || pt.calibration_bits > 22 || pt.calibration_queries < 2) {
    throw ConfigError("invalid calibration settings");
  }
}

SimConfig parse_config(std::string_view json_text) {
  SimConfig cfg;
  try {
    const json doc = json::parse(json_text);
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown_keys(doc,
                        {"dims", "snr_grid", "trials", "seed", "csit_mode", "precoder_mode",
                         "bits_mode", "scenario", "receiver", "solver", "perturbation",
                         "max_exclusion_rate", "codebook_cache_dir"},
                        "config");

    const auto& dims = doc.at("dims");
    reject_unknown_keys(dims, {"K", "M", "N", "d"}, "dims");
    cfg.dims = SystemDims{dims.at("K").get<int>(), dims.at("M").get<int>(),
                          dims.at("N").get<int>(), dims.at("d").get<int>()};
    cfg.snr_grid = doc.at("snr_grid").get<std::vector<double>>();
    cfg.trials = doc.at("trials").get<int>();
    cfg.seed = doc.at("seed").get<std::uint64_t>();
    cfg.csit_mode = parse_csit_mode(doc.at("csit_mode").get<std::string>());
    if (doc.contains("precoder_mode")) {
      cfg.precoder_mode =
          parse_enum(doc["precoder_mode"].get<std::string>(), kPrecoderModes, "precoder_mode");
    }
    if (doc.contains("bits_mode")) {
      const auto& bm = doc["bits_mode"];
      reject_unknown_keys(bm, {"kind", "n_b", "n_c"}, "bits_mode");
      cfg.bits_mode = parse_enum(bm.at("kind").get<std::string>(), kBitsModes, "bits_mode.kind");
      if (cfg.bits_mode == BitsMode::fixed) {
        cfg.n_b = bm.at("n_b").get<int>();
        cfg.n_c = bm.at("n_c").get<int>();
      }
    }
    if (doc.contains("scenario")) {
      cfg.scenario = parse_enum(doc["scenario"].get<std::string>(), kScenarios, "scenario");
    }
    if (doc.contains("receiver")) {
      cfg.receiver = parse_enum(doc["receiver"].get<std::string>(), kReceivers, "receiver");
    }
    if (doc.contains("solver")) {
      const auto& s = doc["solver"];
      reject_unknown_keys(s, {"tol", "max_iter", "restarts"}, "solver");
      cfg.solver.tol = s.value("tol", cfg.solver.tol);
      cfg.solver.max_iter = s.value("max_iter", cfg.solver.max_iter);
      cfg.solver.restarts = s.value("restarts", cfg.solver.restarts);
    }
    if (doc.contains("perturbation")) {
      const auto& p = doc["perturbation"];
      reject_unknown_keys(p,
                          {"ball_coefficient", "c_csi", "c_precoder", "calibration_bits",
                           "calibration_queries", "cache_path"},
                          "perturbation");
      auto& pt = cfg.perturbation;
      if (p.contains("ball_coefficient")) {
        pt.source = parse_enum(p["ball_coefficient"].get<std::string>(), kSources,
                               "perturbation.ball_coefficient");
      }
      pt.c_csi = p.value("c_csi", pt.c_csi);
      pt.c_precoder = p.value("c_precoder", pt.c_precoder);
      pt.calibration_bits = p.value("calibration_bits", pt.calibration_bits);
      pt.calibration_queries = p.value("calibration_queries", pt.calibration_queries);
      pt.cache_path = p.value("cache_path", pt.cache_path);
    }
    cfg.max_exclusion_rate = doc.value("max_exclusion_rate", cfg.max_exclusion_rate);
    cfg.codebook_cache_dir = doc.value("codebook_cache_dir", cfg.codebook_cache_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const SimConfig& cfg) {
  json bits = {{"kind", to_string(cfg.bits_mode)}};
  if (cfg.bits_mode == BitsMode::fixed) {
    bits["n_b"] = cfg.n_b;
    bits["n_c"] = cfg.n_c;
  }
  const auto& pt = cfg.perturbation;
  json doc = {
      {"dims", {{"K", cfg.dims.K}, {"M", cfg.dims.M}, {"N", cfg.dims.N}, {"d", cfg.dims.d}}},
      {"snr_grid", cfg.snr_grid},
      {"trials", cfg.trials},
      {"seed", cfg.seed},
      {"csit_mode", to_string(cfg.csit_mode)},
      {"precoder_mode", to_string(cfg.precoder_mode)},
      {"bits_mode", bits},
      {"scenario", to_string(cfg.scenario)},
      {"receiver", to_string(cfg.receiver)},
      {"solver",
       {{"tol", cfg.solver.tol},
        {"max_iter", cfg.solver.max_iter},
        {"restarts", cfg.solver.restarts}}},
      {"perturbation",
       {{"ball_coefficient", to_string(pt.source)},
        {"c_csi", pt.c_csi},
        {"c_precoder", pt.c_precoder},
        {"calibration_bits", pt.calibration_bits},
        {"calibration_queries", pt.calibration_queries},
        {"cache_path", pt.cache_path}}},
      {"max_exclusion_rate", cfg.max_exclusion_rate},
      {"codebook_cache_dir", cfg.codebook_cache_dir},
  };
  return doc.dump(2);
}

}  // namespace gcsit
