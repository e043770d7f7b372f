#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "l2p/core.hpp"
#include "l2p/learner.hpp"

namespace l2p {

/// Trajectory file (.l2pt), little-endian:
///   "L2PT" | u16 version=1 | u32 T | u32 D | u8 dtype (0=f32, 1=f64)
///   | u8 direction | u64 seed | T*D scalars row-major | T f64 step labels
/// The source tag is not stored; loaded trajectories are tagged "external"
/// unless the caller supplies one.
enum class ScalarType : std::uint8_t { F32 = 0, F64 = 1 };

inline constexpr std::uint16_t kTrajectoryVersion = 1;
inline constexpr std::uint16_t kWeightsVersion = 1;

std::vector<std::uint8_t> encode_trajectory(const FeatureTrajectory& traj, ScalarType dtype = ScalarType::F64);
FeatureTrajectory decode_trajectory(const std::vector<std::uint8_t>& bytes, std::string tag = "external");

void save_trajectory(const FeatureTrajectory& traj, const std::filesystem::path& path,
                     ScalarType dtype = ScalarType::F64);
FeatureTrajectory load_trajectory(const std::filesystem::path& path, std::string tag = "external");

/// Weight file (.l2pw): "L2PW" | u16 version=1 | u32 T | rows 1..T-1 of f64,
/// row t holding t values.
std::vector<std::uint8_t> encode_weights(const WeightMatrix& weights);
WeightMatrix decode_weights(const std::vector<std::uint8_t>& bytes);

void save_weights(const WeightMatrix& weights, const std::filesystem::path& path);
WeightMatrix load_weights(const std::filesystem::path& path);

/// Provenance written next to a weight file as <path>.json.
struct WeightProvenance {
  std::string manifest_hash;  ///< fnv1a64 of the dataset manifest, hex
  std::size_t dataset_size = 0;
  TrainConfig config;
  std::string method = "gd";  ///< "gd" or "ridge"
};

std::filesystem::path sidecar_path(const std::filesystem::path& weights_path);
void save_weight_sidecar(const std::filesystem::path& weights_path, const WeightProvenance& info);
WeightProvenance load_weight_sidecar(const std::filesystem::path& weights_path);

/// FNV-1a 64 over "seed:tag\n" lines, as 16 hex digits.
std::string manifest_hash(const std::vector<ManifestEntry>& manifest);

/// Dataset directory: traj_NNNN.l2pt files plus manifest.json.
struct DatasetManifest {
  std::string kind;  ///< "smooth", "denoiser" or "external"
  int num_steps = 0;
  int dim = 0;
  std::optional<std::uint64_t> model_seed;
  std::vector<std::string> files;
  std::vector<ManifestEntry> entries;
};

void save_dataset(const TrajectorySet& dataset, const std::filesystem::path& dir, const std::string& kind,
                  std::optional<std::uint64_t> model_seed = std::nullopt,
                  ScalarType dtype = ScalarType::F64);
/// Reads manifest.json when present, otherwise every *.l2pt in name order.
DatasetManifest read_dataset_manifest(const std::filesystem::path& dir);
TrajectorySet load_dataset(const std::filesystem::path& dir);

/// One row of a benchmark sweep.
struct SweepRow {
  std::string predictor;
  int interval = 1;
  std::uint64_t seed = 0;
  double aggregate_mse = 0.0;
  double psnr_db = 0.0;
  double flops_reduction = 1.0;
  std::uint64_t cache_bytes_peak = 0;
};

enum class MetricsFormat { Json, Csv };

/// Doubles use 17 significant digits; infinities are written as "inf"
/// (a JSON string in JSON output).
std::string format_double(double value);
std::string metrics_to_json(const RunMetrics& metrics);
RunMetrics metrics_from_json(const std::string& text);
std::string sweep_csv_header();
std::string sweep_to_csv(const std::vector<SweepRow>& rows);
std::string sweep_to_json(const std::vector<SweepRow>& rows);

void export_metrics(const RunMetrics& metrics, const std::filesystem::path& path, MetricsFormat format);
void export_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& path, MetricsFormat format);

/// Whole-file helpers; throw IoFailure.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace l2p
