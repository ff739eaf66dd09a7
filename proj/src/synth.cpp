#include "thzq/synth.hpp"

#include "thzq/error.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace thzq {

namespace {

constexpr std::uint64_t kSceneStream = 0x5343454eULL;
constexpr std::uint64_t kSplitStream = 0x53504c54ULL;
constexpr std::uint64_t kWaveStream = 0x57415645ULL;

constexpr double kMinFill = 0.2;
constexpr double kMaxFill = 0.8;

[[noreturn]] void bad_config(const std::string &what) {
    throw Error(ErrorCode::InvalidConfig, what);
}

bool unit_open(double x) { return x > 0.0 && x < 1.0; }

} // namespace

std::string_view to_string(Split split) noexcept {
    switch (split) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
    }
    return "unknown";
}

void SceneConfig::validate() const {
    if (n_layers < 1 || n_layers > 4) {
        bad_config("n_layers must be 1..4 (labels are stored in one byte)");
    }
    if (pixels_per_side < 1 || pixels_per_side > 255 || scans_per_pixel_side < 1 ||
        scans_per_pixel_side > 255) {
        bad_config("pixel and scan grid sides must be 1..255");
    }
    if (samples_per_waveform < 1 || !(time_window > 0.0)) {
        bad_config("time grid needs samples >= 1 and a positive window");
    }
    if (surface_delays.size() != n_surfaces()) {
        bad_config("surface_delays needs one entry per surface");
    }
    for (std::size_t s = 0; s < surface_delays.size(); ++s) {
        if (!std::isfinite(surface_delays[s]) ||
            (s > 0 && !(surface_delays[s] > surface_delays[s - 1]))) {
            bad_config("surface_delays must be finite and strictly increasing");
        }
    }
    if (!(pulse_width > 0.0)) {
        bad_config("pulse_width must be positive");
    }
    if (!unit_open(reflect_blank) || !unit_open(reflect_drawn)) {
        bad_config("reflectances must lie in (0, 1)");
    }
    if (!(transmit_drawn > 0.0) || !(transmit_blank <= 1.0) ||
        !(transmit_drawn <= transmit_blank)) {
        bad_config("need 0 < transmit_drawn <= transmit_blank <= 1");
    }
    if (!(depth_jitter_std >= 0.0) || !(noise_std >= 0.0)) {
        bad_config("noise levels must be non-negative");
    }
}

std::vector<std::size_t> Dataset::indices(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].split == split) {
            out.push_back(i);
        }
    }
    return out;
}

Scene make_scene(const SceneConfig &config) {
    config.validate();
    Rng rng(derive_seed(config.seed, kSceneStream));
    const std::size_t n = config.n_pixels();
    Scene scene;
    scene.pixels_per_side = config.pixels_per_side;
    for (std::size_t s = 0; s < config.n_surfaces(); ++s) {
        std::vector<std::uint8_t> bits(n);
        // a single pixel cannot satisfy the fill bounds, so accept anything there
        for (int attempt = 0;; ++attempt) {
            std::size_t ones = 0;
            for (auto &b : bits) {
                b = rng.bernoulli(0.5) ? 1 : 0;
                ones += b;
            }
            const double fill = static_cast<double>(ones) / static_cast<double>(n);
            const bool mixed = ones > 0 && ones < n;
            if ((fill >= kMinFill && fill <= kMaxFill && mixed) || n < 2 ||
                attempt > 10000) {
                break;
            }
        }
        scene.bitmaps.push_back(std::move(bits));
    }
    return scene;
}

double pulse(double t, double width) noexcept {
    const double u = t / width;
    return (1.0 - u * u) * std::exp(-0.5 * u * u);
}

std::uint8_t pixel_label(const Scene &scene, std::size_t n_surfaces,
                         PixelIndex pixel) {
    std::uint8_t label = 0;
    for (std::size_t s = 0; s < n_surfaces; ++s) {
        if (scene.drawn(s, pixel.row, pixel.col)) {
            label = static_cast<std::uint8_t>(label | (1U << s));
        }
    }
    return label;
}

double two_pass_transmission(const Scene &scene, const SceneConfig &config,
                             PixelIndex pixel, std::size_t surface) {
    double t = 1.0;
    for (std::size_t s = 0; s < surface; ++s) {
        const double one_pass = scene.drawn(s, pixel.row, pixel.col)
                                    ? config.transmit_drawn
                                    : config.transmit_blank;
        t *= one_pass * one_pass;
    }
    return t;
}

WaveformSample synth_waveform(const Scene &scene, const SceneConfig &config,
                              PixelIndex pixel, PixelIndex scan, Rng &rng) {
    if (pixel.row >= config.pixels_per_side || pixel.col >= config.pixels_per_side ||
        scan.row >= config.scans_per_pixel_side ||
        scan.col >= config.scans_per_pixel_side) {
        throw Error(ErrorCode::OutOfRangePixel,
                    "pixel (" + std::to_string(pixel.row) + "," +
                        std::to_string(pixel.col) + ") scan (" +
                        std::to_string(scan.row) + "," + std::to_string(scan.col) +
                        ") outside the raster");
    }
    const std::size_t n_surfaces = config.n_surfaces();
    std::vector<double> amplitude(n_surfaces);
    for (std::size_t s = 0; s < n_surfaces; ++s) {
        const double r = scene.drawn(s, pixel.row, pixel.col) ? config.reflect_drawn
                                                             : config.reflect_blank;
        amplitude[s] = r * two_pass_transmission(scene, config, pixel, s);
    }

    // one rigid depth offset per waveform
    const double jitter =
        config.depth_jitter_std > 0.0 ? rng.normal(0.0, config.depth_jitter_std) : 0.0;

    WaveformSample sample;
    sample.pixel = pixel;
    sample.scan = scan;
    sample.label = pixel_label(scene, n_surfaces, pixel);
    sample.waveform.resize(config.samples_per_waveform);
    for (std::size_t i = 0; i < config.samples_per_waveform; ++i) {
        const double t = config.time_at(i);
        double y = 0.0;
        for (std::size_t s = 0; s < n_surfaces; ++s) {
            y += amplitude[s] *
                 pulse(t - config.surface_delays[s] - jitter, config.pulse_width);
        }
        if (config.noise_std > 0.0) {
            y += rng.normal(0.0, config.noise_std);
        }
        sample.waveform[i] = y;
    }
    return sample;
}

Dataset synth_dataset(const SceneConfig &config) {
    return synth_dataset(config, make_scene(config));
}

Dataset synth_dataset(const SceneConfig &config, const Scene &scene) {
    config.validate();
    if (scene.pixels_per_side != config.pixels_per_side ||
        scene.bitmaps.size() != config.n_surfaces()) {
        throw Error(ErrorCode::InvalidConfig, "scene does not match the config grid");
    }
    for (const auto &bits : scene.bitmaps) {
        if (bits.size() != config.n_pixels()) {
            throw Error(ErrorCode::InvalidConfig, "scene bitmap has the wrong size");
        }
    }

    Dataset ds;
    ds.config = config;
    ds.scene = scene;
    const std::size_t side = config.pixels_per_side;
    const std::size_t scan_side = config.scans_per_pixel_side;
    const std::size_t per_pixel = config.scans_per_pixel();
    const auto n_train = static_cast<std::size_t>(
        std::floor(0.6 * static_cast<double>(per_pixel) + 0.5));
    const auto n_valid = static_cast<std::size_t>(
        std::floor(0.1 * static_cast<double>(per_pixel) + 0.5));

    ds.samples.reserve(config.n_pixels() * per_pixel);
    for (std::size_t p = 0; p < config.n_pixels(); ++p) {
        const PixelIndex pixel{p / side, p % side};
        std::vector<Split> splits(per_pixel, Split::Test);
        for (std::size_t k = 0; k < per_pixel; ++k) {
            if (k < n_train) {
                splits[k] = Split::Train;
            } else if (k < n_train + n_valid) {
                splits[k] = Split::Valid;
            }
        }
        Rng split_rng(derive_seed(config.seed, kSplitStream, p));
        split_rng.shuffle(splits);

        for (std::size_t k = 0; k < per_pixel; ++k) {
            const PixelIndex scan{k / scan_side, k % scan_side};
            Rng rng(derive_seed(config.seed, kWaveStream, p * per_pixel + k));
            auto sample = synth_waveform(scene, config, pixel, scan, rng);
            sample.split = splits[k];
            ds.samples.push_back(std::move(sample));
        }
    }
    return ds;
}

GateWindow gate_window(const SceneConfig &config, std::size_t surface) {
    const double lo = config.surface_delays.at(surface) - config.pulse_width;
    const double hi = config.surface_delays.at(surface) + config.pulse_width;
    GateWindow w;
    bool found = false;
    for (std::size_t i = 0; i < config.samples_per_waveform; ++i) {
        const double t = config.time_at(i);
        if (t >= lo && t <= hi) {
            if (!found) {
                w.first = i;
                found = true;
            }
            w.last = i;
        }
    }
    return w;
}

double gated_energy(const std::vector<double> &waveform, GateWindow window) {
    double e = 0.0;
    for (std::size_t i = window.first; i <= window.last && i < waveform.size(); ++i) {
        e += waveform[i] * waveform[i];
    }
    return e;
}

Scene parse_scene(std::string_view text, const SceneConfig &config) {
    const std::size_t side = config.pixels_per_side;
    Scene scene;
    scene.pixels_per_side = side;
    std::vector<std::uint8_t> current;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    const auto fail = [&](const std::string &what) {
        throw Error(ErrorCode::SchemaMismatch,
                    "scene line " + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            if (!current.empty()) {
                fail("block ended after " + std::to_string(current.size() / side) +
                     " rows");
            }
            continue;
        }
        if (line.size() != side) {
            fail("expected " + std::to_string(side) + " characters");
        }
        for (const char ch : line) {
            if (ch != '0' && ch != '1') {
                fail("only '0' and '1' are allowed");
            }
            current.push_back(ch == '1' ? 1 : 0);
        }
        if (current.size() == side * side) {
            scene.bitmaps.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty() || scene.bitmaps.size() != config.n_surfaces()) {
        throw Error(ErrorCode::SchemaMismatch,
                    "scene needs " + std::to_string(config.n_surfaces()) +
                        " complete blocks, found " +
                        std::to_string(scene.bitmaps.size()));
    }
    return scene;
}

std::string format_scene(const Scene &scene) {
    std::string out;
    const std::size_t side = scene.pixels_per_side;
    for (std::size_t s = 0; s < scene.bitmaps.size(); ++s) {
        if (s > 0) {
            out += '\n';
        }
        for (std::size_t r = 0; r < side; ++r) {
            for (std::size_t c = 0; c < side; ++c) {
                out += scene.bitmaps[s][r * side + c] != 0 ? '1' : '0';
            }
            out += '\n';
        }
    }
    return out;
}

Scene read_scene_file(const std::filesystem::path &path, const SceneConfig &config) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open scene file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scene(text.str(), config);
}

} // namespace thzq
