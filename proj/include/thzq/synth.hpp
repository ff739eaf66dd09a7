#pragma once

#include "thzq/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace thzq {

/// Parameters of the synthetic raster-scanned multi-layer sample.
/// Times are in picoseconds. Surfaces are ordered L1-front, L1-back,
/// L2-front, ... .
struct SceneConfig {
    std::size_t n_layers = 3;
    std::size_t pixels_per_side = 8;
    std::size_t scans_per_pixel_side = 10;
    std::size_t samples_per_waveform = 196;
    double time_window = 40.0;
    // front/back echoes of a layer sit 1.2 pulse widths apart
    std::vector<double> surface_delays{8.0, 8.96, 18.0, 18.96, 28.0, 28.96};
    double pulse_width = 0.8;
    double reflect_blank = 0.15;
    double reflect_drawn = 0.45;
    double transmit_blank = 0.98;
    double transmit_drawn = 0.90;
    double depth_jitter_std = 0.05;
    double noise_std = 0.01;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t n_surfaces() const noexcept { return 2 * n_layers; }
    [[nodiscard]] std::size_t n_pixels() const noexcept {
        return pixels_per_side * pixels_per_side;
    }
    [[nodiscard]] std::size_t scans_per_pixel() const noexcept {
        return scans_per_pixel_side * scans_per_pixel_side;
    }
    [[nodiscard]] double time_at(std::size_t i) const noexcept {
        return static_cast<double>(i) * time_window /
               static_cast<double>(samples_per_waveform);
    }

    /// Throws InvalidConfig.
    void validate() const;

    friend bool operator==(const SceneConfig &, const SceneConfig &) = default;
};

/// One binary bitmap per surface, row-major over pixels.
struct Scene {
    std::size_t pixels_per_side = 0;
    std::vector<std::vector<std::uint8_t>> bitmaps;

    [[nodiscard]] bool drawn(std::size_t surface, std::size_t row,
                             std::size_t col) const {
        return bitmaps[surface][row * pixels_per_side + col] != 0;
    }

    friend bool operator==(const Scene &, const Scene &) = default;
};

enum class Split : std::uint8_t { Train = 0, Valid = 1, Test = 2 };

std::string_view to_string(Split split) noexcept;

struct PixelIndex {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const PixelIndex &, const PixelIndex &) = default;
};

struct WaveformSample {
    std::vector<double> waveform;
    std::uint8_t label = 0; // bit s set when surface s is drawn
    PixelIndex pixel;
    PixelIndex scan;
    Split split = Split::Train;

    [[nodiscard]] bool label_bit(std::size_t surface) const noexcept {
        return ((label >> surface) & 1U) != 0;
    }
};

struct Dataset {
    SceneConfig config;
    Scene scene;
    std::vector<WaveformSample> samples;

    [[nodiscard]] std::vector<std::size_t> indices(Split split) const;
};

/// Seeded random bitmaps with 20-80% fill per surface.
Scene make_scene(const SceneConfig &config);

/// Ricker wavelet with unit peak at t = 0 and zero crossings at +-width.
double pulse(double t, double width) noexcept;

/// Label bits of a pixel.
std::uint8_t pixel_label(const Scene &scene, std::size_t n_surfaces,
                         PixelIndex pixel);

/// Round-trip echo factor before the reflection at `surface`: the product of
/// squared one-pass transmissions of every shallower surface.
double two_pass_transmission(const Scene &scene, const SceneConfig &config,
                             PixelIndex pixel, std::size_t surface);

WaveformSample synth_waveform(const Scene &scene, const SceneConfig &config,
                              PixelIndex pixel, PixelIndex scan, Rng &rng);

/// Every pixel x every scan position, split 60/10/30 per pixel.
Dataset synth_dataset(const SceneConfig &config);
Dataset synth_dataset(const SceneConfig &config, const Scene &scene);

/// Sample index range [first, last] whose times fall in
/// [delay - pulse_width, delay + pulse_width]. first > last when empty.
struct GateWindow {
    std::size_t first = 1;
    std::size_t last = 0;
};

GateWindow gate_window(const SceneConfig &config, std::size_t surface);
double gated_energy(const std::vector<double> &waveform, GateWindow window);

/// Scene-override text: one block per surface of pixels_per_side lines of
/// '0'/'1', blocks separated by blank lines.
Scene parse_scene(std::string_view text, const SceneConfig &config);
std::string format_scene(const Scene &scene);
Scene read_scene_file(const std::filesystem::path &path, const SceneConfig &config);

} // namespace thzq
