#include "l2p/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace l2p {
namespace {

using json = nlohmann::ordered_json;

constexpr char kTrajMagic[4] = {'L', '2', 'P', 'T'};
constexpr char kWeightMagic[4] = {'L', '2', 'P', 'W'};
constexpr std::size_t kTrajHeader = 4 + 2 + 4 + 4 + 1 + 1 + 8;
constexpr std::size_t kWeightHeader = 4 + 2 + 4;

class ByteWriter {
 public:
  explicit ByteWriter(std::size_t reserve) { bytes_.reserve(reserve); }
  void raw(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}
  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool magic(const char (&expected)[4]) {
    need(4);
    const bool ok = std::memcmp(bytes_.data() + pos_, expected, 4) == 0;
    pos_ += 4;
    return ok;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw Error(ErrorKind::TruncatedFile, "file ends before the payload does");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

void check_version(std::uint16_t version, std::uint16_t supported, const char* what) {
  if (version == 0 || version > supported) {
    throw Error(ErrorKind::VersionUnsupported, std::string(what) + " version " + std::to_string(version) +
                                                   " (this build reads up to " + std::to_string(supported) + ")");
  }
}

json config_to_json(const TrainConfig& cfg) {
  return json{{"epochs", cfg.epochs},
              {"learning_rate", cfg.learning_rate},
              {"ridge_lambda", cfg.ridge_lambda},
              {"loss_log_every", cfg.loss_log_every},
              {"rng_seed", cfg.rng_seed}};
}

json read_json_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::IoFailure, path.string() + ": " + e.what());
  }
}

double json_double(const json& value) {
  if (value.is_string()) {
    const auto s = value.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorKind::IoFailure, "unexpected string where a number belongs: " + s);
  }
  return value.get<double>();
}

std::string json_number(double value) {
  if (std::isinf(value)) return value > 0 ? "\"inf\"" : "\"-inf\"";
  if (std::isnan(value)) return "\"nan\"";
  return format_double(value);
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::IoFailure, "read failed for " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<std::uint8_t> encode_trajectory(const FeatureTrajectory& traj, ScalarType dtype) {
  const auto steps = static_cast<std::size_t>(traj.num_steps());
  const auto dim = static_cast<std::size_t>(traj.dim());
  const std::size_t scalar = dtype == ScalarType::F64 ? 8 : 4;
  ByteWriter w(kTrajHeader + steps * dim * scalar + steps * 8);
  w.raw(kTrajMagic, 4);
  w.u16(kTrajectoryVersion);
  w.u32(static_cast<std::uint32_t>(steps));
  w.u32(static_cast<std::uint32_t>(dim));
  w.u8(static_cast<std::uint8_t>(dtype));
  w.u8(static_cast<std::uint8_t>(traj.direction()));
  w.u64(traj.seed());
  const Matrix& data = traj.data();
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      if (dtype == ScalarType::F64) {
        w.f64(data(r, c));
      } else {
        w.f32(static_cast<float>(data(r, c)));
      }
    }
  }
  for (double label : traj.step_labels()) w.f64(label);
  return w.take();
}

FeatureTrajectory decode_trajectory(const std::vector<std::uint8_t>& bytes, std::string tag) {
  ByteReader in(bytes);
  if (!in.magic(kTrajMagic)) throw Error(ErrorKind::BadMagic, "not an L2PT trajectory file");
  check_version(in.u16(), kTrajectoryVersion, "trajectory");
  const std::uint32_t steps = in.u32();
  const std::uint32_t dim = in.u32();
  const std::uint8_t dtype = in.u8();
  const std::uint8_t direction = in.u8();
  const std::uint64_t seed = in.u64();
  if (dtype > 1) throw Error(ErrorKind::BadMagic, "unknown scalar type " + std::to_string(dtype));
  if (direction > 1) throw Error(ErrorKind::BadMagic, "unknown label direction " + std::to_string(direction));
  const std::uint64_t scalar = dtype == 1 ? 8 : 4;
  const std::uint64_t payload = std::uint64_t{steps} * dim * scalar + std::uint64_t{steps} * 8;
  if (in.remaining() < payload) throw Error(ErrorKind::TruncatedFile, "trajectory payload is incomplete");
  if (in.remaining() > payload) throw Error(ErrorKind::ShapeMismatch, "trailing bytes after the trajectory payload");

  Matrix data(steps, dim);
  for (std::uint32_t r = 0; r < steps; ++r) {
    for (std::uint32_t c = 0; c < dim; ++c) {
      const double v = dtype == 1 ? in.f64() : static_cast<double>(in.f32());
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::NonFinitePayload,
                    "non-finite value at step " + std::to_string(r) + ", column " + std::to_string(c));
      }
      data(r, c) = v;
    }
  }
  std::vector<double> labels(steps);
  for (auto& label : labels) {
    label = in.f64();
    if (!std::isfinite(label)) throw Error(ErrorKind::NonFinitePayload, "non-finite step label");
  }
  return FeatureTrajectory(std::move(data), std::move(labels), static_cast<LabelDirection>(direction), seed,
                           std::move(tag));
}

void save_trajectory(const FeatureTrajectory& traj, const std::filesystem::path& path, ScalarType dtype) {
  write_file_bytes(path, encode_trajectory(traj, dtype));
}

FeatureTrajectory load_trajectory(const std::filesystem::path& path, std::string tag) {
  return decode_trajectory(read_file_bytes(path), std::move(tag));
}

std::vector<std::uint8_t> encode_weights(const WeightMatrix& weights) {
  ByteWriter w(kWeightHeader + weights.packed().size() * 8);
  w.raw(kWeightMagic, 4);
  w.u16(kWeightsVersion);
  w.u32(static_cast<std::uint32_t>(weights.num_steps()));
  for (double v : weights.packed()) w.f64(v);
  return w.take();
}

WeightMatrix decode_weights(const std::vector<std::uint8_t>& bytes) {
  ByteReader in(bytes);
  if (!in.magic(kWeightMagic)) throw Error(ErrorKind::BadMagic, "not an L2PW weight file");
  check_version(in.u16(), kWeightsVersion, "weights");
  const std::uint32_t steps = in.u32();
  if (steps < 2) throw Error(ErrorKind::RowLengthMismatch, "weight file declares T < 2");
  if (in.remaining() % 8 != 0) throw Error(ErrorKind::TruncatedFile, "weight payload ends mid-value");
  const std::uint64_t expected = std::uint64_t{steps} * (steps - 1) / 2;
  if (in.remaining() / 8 != expected) {
    throw Error(ErrorKind::RowLengthMismatch, "declared T=" + std::to_string(steps) + " needs " +
                                                  std::to_string(expected) + " weights, file holds " +
                                                  std::to_string(in.remaining() / 8));
  }
  std::vector<double> packed(expected);
  for (auto& v : packed) {
    v = in.f64();
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinitePayload, "non-finite weight");
  }
  return WeightMatrix(static_cast<int>(steps), std::move(packed));
}

void save_weights(const WeightMatrix& weights, const std::filesystem::path& path) {
  write_file_bytes(path, encode_weights(weights));
}

WeightMatrix load_weights(const std::filesystem::path& path) { return decode_weights(read_file_bytes(path)); }

std::filesystem::path sidecar_path(const std::filesystem::path& weights_path) {
  return std::filesystem::path(weights_path.string() + ".json");
}

void save_weight_sidecar(const std::filesystem::path& weights_path, const WeightProvenance& info) {
  json j{{"manifest_hash", info.manifest_hash},
         {"dataset_size", info.dataset_size},
         {"method", info.method},
         {"train_config", config_to_json(info.config)}};
  write_text_file(sidecar_path(weights_path), j.dump(2) + "\n");
}

WeightProvenance load_weight_sidecar(const std::filesystem::path& weights_path) {
  const json j = read_json_file(sidecar_path(weights_path));
  WeightProvenance info;
  try {
    info.manifest_hash = j.at("manifest_hash").get<std::string>();
    info.dataset_size = j.at("dataset_size").get<std::size_t>();
    info.method = j.at("method").get<std::string>();
    const json& c = j.at("train_config");
    info.config.epochs = c.at("epochs").get<int>();
    info.config.learning_rate = c.at("learning_rate").get<double>();
    info.config.ridge_lambda = c.at("ridge_lambda").get<double>();
    info.config.loss_log_every = c.at("loss_log_every").get<int>();
    info.config.rng_seed = c.at("rng_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::IoFailure, "malformed weight sidecar: " + std::string(e.what()));
  }
  return info;
}

std::string manifest_hash(const std::vector<ManifestEntry>& manifest) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& entry : manifest) feed(std::to_string(entry.seed) + ":" + entry.tag + "\n");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_dataset(const TrajectorySet& dataset, const std::filesystem::path& dir, const std::string& kind,
                  std::optional<std::uint64_t> model_seed, ScalarType dtype) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  json entries = json::array();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "traj_%04zu.l2pt", i);
    save_trajectory(dataset[i], dir / name, dtype);
    entries.push_back({{"file", name}, {"seed", dataset[i].seed()}, {"tag", dataset[i].source_tag()}});
  }
  json manifest{{"format", "l2p-dataset"}, {"version", 1},       {"kind", kind},
                {"num_steps", dataset.num_steps()}, {"dim", dataset.dim()}};
  if (model_seed) manifest["model_seed"] = *model_seed;
  manifest["entries"] = std::move(entries);
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

DatasetManifest read_dataset_manifest(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::IoFailure, dir.string() + " is not a directory");
  DatasetManifest out;
  const auto manifest_file = dir / "manifest.json";
  if (std::filesystem::exists(manifest_file)) {
    const json j = read_json_file(manifest_file);
    try {
      out.kind = j.value("kind", std::string("external"));
      out.num_steps = j.value("num_steps", 0);
      out.dim = j.value("dim", 0);
      if (j.contains("model_seed")) out.model_seed = j.at("model_seed").get<std::uint64_t>();
      for (const auto& e : j.at("entries")) {
        out.files.push_back(e.at("file").get<std::string>());
        out.entries.push_back({e.at("seed").get<std::uint64_t>(), e.value("tag", std::string("external"))});
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::IoFailure, "malformed manifest: " + std::string(e.what()));
    }
    return out;
  }
  out.kind = "external";
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".l2pt") {
      out.files.push_back(entry.path().filename().string());
    }
  }
  std::sort(out.files.begin(), out.files.end());
  return out;
}

TrajectorySet load_dataset(const std::filesystem::path& dir) {
  const DatasetManifest manifest = read_dataset_manifest(dir);
  if (manifest.files.empty()) throw Error(ErrorKind::InvalidArgument, "no trajectories in " + dir.string());
  std::vector<FeatureTrajectory> trajs;
  trajs.reserve(manifest.files.size());
  for (std::size_t i = 0; i < manifest.files.size(); ++i) {
    const std::string tag = i < manifest.entries.size() ? manifest.entries[i].tag : "external";
    trajs.push_back(load_trajectory(dir / manifest.files[i], tag));
  }
  return TrajectorySet(std::move(trajs));
}

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string metrics_to_json(const RunMetrics& m) {
  std::ostringstream out;
  out << "{\"per_step_mse\":[";
  for (std::size_t i = 0; i < m.per_step_mse.size(); ++i) {
    if (i) out << ',';
    out << json_number(m.per_step_mse[i]);
  }
  out << "],\"aggregate_mse\":" << json_number(m.aggregate_mse) << ",\"psnr_db\":" << json_number(m.psnr_db)
      << ",\"flops_full\":" << json_number(m.flops_full) << ",\"flops_cached\":" << json_number(m.flops_cached)
      << ",\"flops_reduction\":" << json_number(m.flops_reduction)
      << ",\"cache_bytes_peak\":" << m.cache_bytes_peak << ",\"warmup_fallbacks\":" << m.warmup_fallbacks << '}';
  return out.str();
}

RunMetrics metrics_from_json(const std::string& text) {
  RunMetrics m;
  try {
    const json j = json::parse(text);
    for (const auto& v : j.at("per_step_mse")) m.per_step_mse.push_back(json_double(v));
    m.aggregate_mse = json_double(j.at("aggregate_mse"));
    m.psnr_db = json_double(j.at("psnr_db"));
    m.flops_full = json_double(j.at("flops_full"));
    m.flops_cached = json_double(j.at("flops_cached"));
    m.flops_reduction = json_double(j.at("flops_reduction"));
    m.cache_bytes_peak = j.at("cache_bytes_peak").get<std::uint64_t>();
    m.warmup_fallbacks = j.value("warmup_fallbacks", 0);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::IoFailure, "malformed metrics JSON: " + std::string(e.what()));
  }
  return m;
}

std::string sweep_csv_header() { return "predictor,N,seed,aggregate_mse,psnr_db,flops_reduction,cache_bytes_peak"; }

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = sweep_csv_header() + "\n";
  for (const auto& r : rows) {
    out += r.predictor + "," + std::to_string(r.interval) + "," + std::to_string(r.seed) + "," +
           format_double(r.aggregate_mse) + "," + format_double(r.psnr_db) + "," +
           format_double(r.flops_reduction) + "," + std::to_string(r.cache_bytes_peak) + "\n";
  }
  return out;
}

std::string sweep_to_json(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (i) out << ',';
    out << "{\"predictor\":" << json(r.predictor).dump() << ",\"N\":" << r.interval << ",\"seed\":" << r.seed
        << ",\"aggregate_mse\":" << json_number(r.aggregate_mse) << ",\"psnr_db\":" << json_number(r.psnr_db)
        << ",\"flops_reduction\":" << json_number(r.flops_reduction) << ",\"cache_bytes_peak\":" << r.cache_bytes_peak
        << '}';
  }
  out << ']';
  return out.str();
}

void export_metrics(const RunMetrics& metrics, const std::filesystem::path& path, MetricsFormat format) {
  if (format == MetricsFormat::Json) {
    write_text_file(path, metrics_to_json(metrics) + "\n");
    return;
  }
  std::string out = "aggregate_mse,psnr_db,flops_full,flops_cached,flops_reduction,cache_bytes_peak,warmup_fallbacks\n";
  out += format_double(metrics.aggregate_mse) + "," + format_double(metrics.psnr_db) + "," +
         format_double(metrics.flops_full) + "," + format_double(metrics.flops_cached) + "," +
         format_double(metrics.flops_reduction) + "," + std::to_string(metrics.cache_bytes_peak) + "," +
         std::to_string(metrics.warmup_fallbacks) + "\n";
  write_text_file(path, out);
}

void export_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& path, MetricsFormat format) {
  write_text_file(path, format == MetricsFormat::Json ? sweep_to_json(rows) + "\n" : sweep_to_csv(rows));
}

}  // namespace l2p
