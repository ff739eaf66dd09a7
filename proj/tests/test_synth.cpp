#include "oracles.hpp"
#include "thzq/error.hpp"
#include "thzq/synth.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace thzq;

namespace {

ErrorCode code_of(auto &&fn) {
    try {
        fn();
    } catch (const Error &e) {
        return e.code();
    }
    FAIL("expected a thzq::Error");
    return ErrorCode::IoFailure;
}

Scene blank_scene(const SceneConfig &c) {
    Scene s;
    s.pixels_per_side = c.pixels_per_side;
    s.bitmaps.assign(c.n_surfaces(), std::vector<std::uint8_t>(c.n_pixels(), 0));
    return s;
}

double ricker(double t, double w) {
    const double u = t / w;
    return (1 - u * u) * std::exp(-u * u / 2);
}

SceneConfig quiet(SceneConfig c) {
    c.depth_jitter_std = 0.0;
    c.noise_std = 0.0;
    return c;
}

} // namespace

TEST_CASE("scene: shape, fill bounds and seeding") {
    SceneConfig c;
    c.seed = 3;
    const auto a = make_scene(c);
    REQUIRE(a.bitmaps.size() == 6);
    for (const auto &bits : a.bitmaps) {
        REQUIRE(bits.size() == 64);
        std::size_t ones = 0;
        for (auto b : bits) {
            CHECK(b <= 1);
            ones += b;
        }
        CHECK(ones >= 13); // 20% of 64 rounded up
        CHECK(ones <= 51);
    }
    CHECK(make_scene(c) == a);
    c.seed = 4;
    CHECK_FALSE(make_scene(c) == a);
}

TEST_CASE("pulse values") {
    CHECK(pulse(0.0, 0.8) == 1.0);
    CHECK(std::abs(pulse(0.8, 0.8)) < 1e-15);
    CHECK(std::abs(pulse(-0.8, 0.8)) < 1e-15);
    CHECK(pulse(2.4, 0.8) == doctest::Approx(-0.0888719723059384).epsilon(1e-13));
    CHECK(pulse(1.3, 0.8) == pulse(-1.3, 0.8));
}

TEST_CASE("noise-free waveforms match a direct superposition of echoes") {
    SceneConfig c = quiet(SceneConfig{});
    c.seed = 11;
    const auto scene = make_scene(c);
    Rng rng(0);
    for (std::size_t p = 0; p < c.n_pixels(); p += 5) {
        const PixelIndex px{p / 8, p % 8};
        const auto w = synth_waveform(scene, c, px, {0, 0}, rng);
        for (std::size_t i = 0; i < w.waveform.size(); ++i) {
            const double t = 40.0 * static_cast<double>(i) / 196.0;
            double expect = 0.0;
            double through = 1.0;
            for (std::size_t s = 0; s < 6; ++s) {
                const bool d = scene.bitmaps[s][p] != 0;
                expect += (d ? 0.45 : 0.15) * through * ricker(t - c.surface_delays[s], 0.8);
                through *= d ? 0.90 * 0.90 : 0.98 * 0.98;
            }
            CHECK(w.waveform[i] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("all-blank sample: echo peaks follow r_b * (t_b^2)^s") {
    SceneConfig c = quiet(SceneConfig{});
    c.samples_per_waveform = 200; // 0.2 ps grid
    c.pulse_width = 0.4;
    c.surface_delays = {4.0, 10.0, 16.0, 22.0, 28.0, 34.0};
    const auto scene = blank_scene(c);
    Rng rng(0);
    const auto w = synth_waveform(scene, c, {2, 3}, {0, 0}, rng);
    CHECK(w.label == 0);
    for (std::size_t s = 0; s < 6; ++s) {
        const auto i = static_cast<std::size_t>(std::lround(c.surface_delays[s] / 0.2));
        const double expect = 0.15 * std::pow(0.98 * 0.98, static_cast<double>(s));
        CHECK(w.waveform[i] == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("shadow: drawing surface 1 lowers the transmission and gated energy of deeper echoes") {
    SceneConfig c = quiet(SceneConfig{});
    auto blank = blank_scene(c);
    auto shadowed = blank;
    shadowed.bitmaps[0][0] = 1;
    const PixelIndex px{0, 0};
    CHECK(two_pass_transmission(shadowed, c, px, 1) <
          two_pass_transmission(blank, c, px, 1));
    CHECK(two_pass_transmission(shadowed, c, px, 0) == 1.0);
    CHECK(two_pass_transmission(shadowed, c, px, 1) == doctest::Approx(0.81));

    Rng rng(0);
    const auto a = synth_waveform(blank, c, px, {0, 0}, rng);
    const auto b = synth_waveform(shadowed, c, px, {0, 0}, rng);
    // surface 2 shares its gate with surface 1's brighter echo, so only the
    // separate layers are compared
    for (std::size_t s = 2; s < 6; ++s) {
        const auto g = gate_window(c, s);
        CHECK(gated_energy(b.waveform, g) < gated_energy(a.waveform, g));
    }
}

TEST_CASE("dataset: counts, splits and labels") {
    SceneConfig c;
    c.seed = 5;
    const auto ds = synth_dataset(c);
    REQUIRE(ds.samples.size() == 6400);
    CHECK(ds.indices(Split::Train).size() == 3840);
    CHECK(ds.indices(Split::Valid).size() == 640);
    CHECK(ds.indices(Split::Test).size() == 1920);

    std::vector<std::array<std::size_t, 3>> per_pixel(64, {0, 0, 0});
    for (const auto &s : ds.samples) {
        CHECK(s.waveform.size() == 196);
        const std::size_t p = s.pixel.row * 8 + s.pixel.col;
        ++per_pixel[p][static_cast<std::size_t>(s.split)];
        for (std::size_t k = 0; k < 6; ++k) {
            CHECK(s.label_bit(k) == ds.scene.drawn(k, s.pixel.row, s.pixel.col));
        }
    }
    for (const auto &counts : per_pixel) {
        CHECK(counts[0] == 60);
        CHECK(counts[1] == 10);
        CHECK(counts[2] == 30);
    }
}

TEST_CASE("label bitmask for fronts drawn and backs blank") {
    SceneConfig c;
    auto scene = blank_scene(c);
    for (std::size_t s = 0; s < 6; s += 2) {
        scene.bitmaps[s][9] = 1;
    }
    CHECK(pixel_label(scene, 6, {1, 1}) == 0b010101);
    CHECK(pixel_label(scene, 6, {0, 0}) == 0);
}

TEST_CASE("property: waveform energy is bounded by the echo budget") {
    // Cauchy-Schwarz over echoes: E <= (sum a_s)^2 * max_s sum_i pulse_s(t_i)^2
    SceneConfig c = quiet(SceneConfig{});
    c.seed = 2;
    const auto scene = make_scene(c);
    double pulse_energy = 0.0;
    for (std::size_t s = 0; s < 6; ++s) {
        double e = 0.0;
        for (std::size_t i = 0; i < 196; ++i) {
            e += std::pow(ricker(c.time_at(i) - c.surface_delays[s], 0.8), 2);
        }
        pulse_energy = std::max(pulse_energy, e);
    }
    Rng rng(1);
    for (std::size_t p = 0; p < 64; ++p) {
        const auto w = synth_waveform(scene, c, {p / 8, p % 8}, {0, 0}, rng);
        double e = 0.0;
        for (double v : w.waveform) {
            e += v * v;
        }
        double amp_sum = 0.0;
        for (std::size_t s = 0; s < 6; ++s) {
            amp_sum += scene.bitmaps[s][p] ? 0.45 : 0.15;
        }
        CHECK(e <= amp_sum * amp_sum * pulse_energy);
    }
}

TEST_CASE("determinism: same seed gives identical datasets") {
    SceneConfig c;
    c.seed = 9;
    c.pixels_per_side = 3;
    const auto a = synth_dataset(c);
    const auto b = synth_dataset(c);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].waveform == b.samples[i].waveform);
        CHECK(a.samples[i].split == b.samples[i].split);
    }
    c.seed = 10;
    CHECK(synth_dataset(c).samples[0].waveform != a.samples[0].waveform);
}

TEST_CASE("synth errors") {
    SceneConfig c;
    const auto scene = make_scene(c);
    Rng rng(0);
    CHECK(code_of([&] { synth_waveform(scene, c, {8, 0}, {0, 0}, rng); }) ==
          ErrorCode::OutOfRangePixel);
    CHECK(code_of([&] { synth_waveform(scene, c, {0, 0}, {0, 10}, rng); }) ==
          ErrorCode::OutOfRangePixel);
    SceneConfig bad = c;
    bad.surface_delays.pop_back();
    CHECK(code_of([&] { make_scene(bad); }) == ErrorCode::InvalidConfig);
    bad = c;
    bad.transmit_drawn = 1.2;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidConfig);
    bad = c;
    bad.n_layers = 5;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("gate windows cover delay +- pulse width") {
    SceneConfig c;
    for (std::size_t s = 0; s < 6; ++s) {
        const auto g = gate_window(c, s);
        REQUIRE(g.first <= g.last);
        CHECK(c.time_at(g.first) >= c.surface_delays[s] - c.pulse_width);
        CHECK(c.time_at(g.last) <= c.surface_delays[s] + c.pulse_width);
        CHECK(c.time_at(g.first - 1) < c.surface_delays[s] - c.pulse_width);
        CHECK(c.time_at(g.last + 1) > c.surface_delays[s] + c.pulse_width);
    }
}

TEST_CASE("scene text round-trip and parse errors") {
    SceneConfig c;
    c.seed = 21;
    const auto scene = make_scene(c);
    const auto text = format_scene(scene);
    CHECK(parse_scene(text, c) == scene);

    const std::filesystem::path dir = THZQ_TEST_TMPDIR;
    std::filesystem::create_directories(dir);
    const auto path = dir / "scene.txt";
    std::ofstream(path) << text;
    CHECK(read_scene_file(path, c) == scene);

    CHECK(code_of([&] { parse_scene("0101\n", c); }) == ErrorCode::SchemaMismatch);
    auto broken = text;
    broken[3] = 'x';
    CHECK(code_of([&] { parse_scene(broken, c); }) == ErrorCode::SchemaMismatch);
    CHECK(code_of([&] { parse_scene(text.substr(0, text.size() / 2), c); }) ==
          ErrorCode::SchemaMismatch);
    CHECK(code_of([&] { read_scene_file(dir / "missing.txt", c); }) ==
          ErrorCode::IoFailure);
}
