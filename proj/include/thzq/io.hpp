#pragma once

#include "thzq/pipeline.hpp"
#include "thzq/synth.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace thzq {

inline constexpr char kDatasetMagic[4] = {'T', 'H', 'Z', 'D'};
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr int kCheckpointVersion = 1;

nlohmann::json to_json(const SceneConfig &config);
/// Overrides fields of `base` with the keys present; unknown keys and
/// wrongly typed values throw InvalidConfig.
SceneConfig scene_config_from_json(const nlohmann::json &j, SceneConfig base = {});
SceneConfig read_scene_config_file(const std::filesystem::path &path);

/// Little-endian binary container; waveforms are stored as float32.
std::vector<std::uint8_t> encode_dataset(const Dataset &dataset);
/// Throws BadMagic, UnsupportedVersion, TruncatedFile or SchemaMismatch.
Dataset decode_dataset(const std::vector<std::uint8_t> &bytes);

void write_dataset(const Dataset &dataset, const std::filesystem::path &path);
Dataset read_dataset(const std::filesystem::path &path);

nlohmann::json checkpoint_to_json(const Checkpoint &checkpoint);
/// Throws SchemaMismatch on malformed documents or when `expected` differs
/// from the stored model kind.
Checkpoint checkpoint_from_json(const nlohmann::json &j,
                                std::optional<ModelKind> expected = std::nullopt);

void write_checkpoint(const Checkpoint &checkpoint, const std::filesystem::path &path);
Checkpoint read_checkpoint(const std::filesystem::path &path,
                           std::optional<ModelKind> expected = std::nullopt);

inline constexpr const char *kHistoryHeader = "epoch,lr,train_loss,valid_mean_acc";

std::string format_history_csv(const std::vector<EpochRecord> &history);
void write_history_csv(const std::vector<EpochRecord> &history,
                       const std::filesystem::path &path);

/// key=value lines.
std::string format_metrics_report(const Metrics &metrics);

/// 0..255 grey level, round half up, input clamped to [0, 1].
int grey_level(double score) noexcept;
std::string format_pgm(const std::vector<double> &map, std::size_t side);

/// Writes <prefix>_s1.pgm ... <prefix>_sN.pgm and <prefix>_scores.csv;
/// returns the written paths.
std::vector<std::filesystem::path> export_heatmaps(const ScoreMaps &maps,
                                                   const std::string &path_prefix);

void write_text_file(const std::filesystem::path &path, const std::string &text);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path &path);

} // namespace thzq
