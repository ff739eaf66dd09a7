#include "thzq/io.hpp"

#include "thzq/error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace thzq {

using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string &what) {
    throw Error(ErrorCode::SchemaMismatch, what);
}

// --- little-endian byte codec ---

void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_f32(std::vector<std::uint8_t> &out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

class ByteReader {
  public:
    explicit ByteReader(const std::vector<std::uint8_t> &bytes) : bytes_(bytes) {}

    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw Error(ErrorCode::TruncatedFile,
                        "need " + std::to_string(n) + " bytes at offset " +
                            std::to_string(pos_) + ", file has " +
                            std::to_string(bytes_.size()));
        }
    }
    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        }
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string text(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char *>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

  private:
    const std::vector<std::uint8_t> &bytes_;
    std::size_t pos_ = 0;
};

constexpr std::size_t kRecordTail = 6; // label, pixel row/col, scan row/col, split

json matrix_to_json(const Matrix &m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_to_json(const Vector &v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

Vector vector_from_json(const json &j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Matrix matrix_from_json(const json &j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty() || rows.front().empty()) {
        schema("empty weight matrix");
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.front().size()) {
            schema("ragged weight matrix");
        }
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return m;
}

json train_config_to_json(const TrainConfig &c) {
    return {{"epochs", c.epochs},         {"base_lr", c.base_lr},
            {"decay_factor", c.decay_factor}, {"decay_every", c.decay_every},
            {"batch_size", c.batch_size}, {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json &j) {
    TrainConfig c;
    c.epochs = j.at("epochs").get<std::size_t>();
    c.base_lr = j.at("base_lr").get<double>();
    c.decay_factor = j.at("decay_factor").get<double>();
    c.decay_every = j.at("decay_every").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

} // namespace

json to_json(const SceneConfig &c) {
    return {{"n_layers", c.n_layers},
            {"pixels_per_side", c.pixels_per_side},
            {"scans_per_pixel_side", c.scans_per_pixel_side},
            {"samples_per_waveform", c.samples_per_waveform},
            {"time_window", c.time_window},
            {"surface_delays", c.surface_delays},
            {"pulse_width", c.pulse_width},
            {"reflect_blank", c.reflect_blank},
            {"reflect_drawn", c.reflect_drawn},
            {"transmit_blank", c.transmit_blank},
            {"transmit_drawn", c.transmit_drawn},
            {"depth_jitter_std", c.depth_jitter_std},
            {"noise_std", c.noise_std},
            {"seed", c.seed}};
}

SceneConfig scene_config_from_json(const json &j, SceneConfig base) {
    if (!j.is_object()) {
        throw Error(ErrorCode::InvalidConfig, "scene config must be a JSON object");
    }
    try {
        for (const auto &[key, value] : j.items()) {
            if (key == "n_layers") base.n_layers = value.get<std::size_t>();
            else if (key == "pixels_per_side") base.pixels_per_side = value.get<std::size_t>();
            else if (key == "scans_per_pixel_side") base.scans_per_pixel_side = value.get<std::size_t>();
            else if (key == "samples_per_waveform") base.samples_per_waveform = value.get<std::size_t>();
            else if (key == "time_window") base.time_window = value.get<double>();
            else if (key == "surface_delays") base.surface_delays = value.get<std::vector<double>>();
            else if (key == "pulse_width") base.pulse_width = value.get<double>();
            else if (key == "reflect_blank") base.reflect_blank = value.get<double>();
            else if (key == "reflect_drawn") base.reflect_drawn = value.get<double>();
            else if (key == "transmit_blank") base.transmit_blank = value.get<double>();
            else if (key == "transmit_drawn") base.transmit_drawn = value.get<double>();
            else if (key == "depth_jitter_std") base.depth_jitter_std = value.get<double>();
            else if (key == "noise_std") base.noise_std = value.get<double>();
            else if (key == "seed") base.seed = value.get<std::uint64_t>();
            else throw Error(ErrorCode::InvalidConfig, "unknown scene config key '" + key + "'");
        }
    } catch (const json::exception &e) {
        throw Error(ErrorCode::InvalidConfig, std::string("scene config: ") + e.what());
    }
    base.validate();
    return base;
}

SceneConfig read_scene_config_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open config file " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception &e) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
    }
    return scene_config_from_json(j);
}

std::vector<std::uint8_t> encode_dataset(const Dataset &dataset) {
    const auto &config = dataset.config;
    json header = {{"config", to_json(config)}};
    json bitmaps = json::array();
    for (const auto &bits : dataset.scene.bitmaps) {
        std::string row;
        for (const auto b : bits) {
            row += b != 0 ? '1' : '0';
        }
        bitmaps.push_back(row);
    }
    header["scene"] = std::move(bitmaps);
    const std::string blob = header.dump();

    const std::size_t len = config.samples_per_waveform;
    std::vector<std::uint8_t> out;
    out.reserve(20 + blob.size() + dataset.samples.size() * (4 * len + kRecordTail));
    out.insert(out.end(), std::begin(kDatasetMagic), std::end(kDatasetMagic));
    put_u32(out, kDatasetVersion);
    put_u32(out, static_cast<std::uint32_t>(dataset.samples.size()));
    put_u32(out, static_cast<std::uint32_t>(len));
    put_u32(out, static_cast<std::uint32_t>(blob.size()));
    out.insert(out.end(), blob.begin(), blob.end());
    for (const auto &s : dataset.samples) {
        if (s.waveform.size() != len) {
            throw Error(ErrorCode::ShapeMismatch, "sample waveform length differs from config");
        }
        for (const double v : s.waveform) {
            put_f32(out, static_cast<float>(v));
        }
        out.push_back(s.label);
        out.push_back(static_cast<std::uint8_t>(s.pixel.row));
        out.push_back(static_cast<std::uint8_t>(s.pixel.col));
        out.push_back(static_cast<std::uint8_t>(s.scan.row));
        out.push_back(static_cast<std::uint8_t>(s.scan.col));
        out.push_back(static_cast<std::uint8_t>(s.split));
    }
    return out;
}

Dataset decode_dataset(const std::vector<std::uint8_t> &bytes) {
    ByteReader in(bytes);
    if (in.remaining() < 4) {
        throw Error(ErrorCode::TruncatedFile, "file shorter than the magic");
    }
    if (in.text(4) != std::string(kDatasetMagic, 4)) {
        throw Error(ErrorCode::BadMagic, "not a THZD dataset");
    }
    const std::uint32_t version = in.u32();
    if (version != kDatasetVersion) {
        throw Error(ErrorCode::UnsupportedVersion,
                    "dataset format version " + std::to_string(version));
    }
    const std::uint64_t n_samples = in.u32();
    const std::uint64_t len = in.u32();
    const std::uint32_t blob_len = in.u32();
    const std::string blob = in.text(blob_len);

    Dataset ds;
    try {
        const json header = json::parse(blob);
        ds.config = scene_config_from_json(header.at("config"));
        const auto &rows = header.at("scene");
        ds.scene.pixels_per_side = ds.config.pixels_per_side;
        for (const auto &row : rows) {
            const auto text = row.get<std::string>();
            if (text.size() != ds.config.n_pixels()) {
                schema("scene bitmap has the wrong length");
            }
            std::vector<std::uint8_t> bits;
            for (const char ch : text) {
                if (ch != '0' && ch != '1') {
                    schema("scene bitmap contains non-binary characters");
                }
                bits.push_back(ch == '1' ? 1 : 0);
            }
            ds.scene.bitmaps.push_back(std::move(bits));
        }
    } catch (const json::exception &e) {
        schema(std::string("dataset header: ") + e.what());
    } catch (const Error &e) {
        if (e.code() == ErrorCode::SchemaMismatch) {
            throw;
        }
        schema(std::string("dataset header: ") + e.what());
    }
    if (ds.scene.bitmaps.size() != ds.config.n_surfaces()) {
        schema("scene block count differs from surface count");
    }
    if (len != ds.config.samples_per_waveform) {
        schema("record waveform length differs from the config echo");
    }

    const std::uint64_t record = 4 * len + kRecordTail;
    const std::uint64_t body = record * n_samples;
    if (in.remaining() < body) {
        throw Error(ErrorCode::TruncatedFile,
                    "header promises " + std::to_string(n_samples) + " records");
    }
    if (in.remaining() > body) {
        schema("trailing bytes after the last record");
    }

    const std::size_t n_surfaces = ds.config.n_surfaces();
    ds.samples.resize(static_cast<std::size_t>(n_samples));
    for (auto &s : ds.samples) {
        s.waveform.resize(static_cast<std::size_t>(len));
        for (auto &v : s.waveform) {
            v = static_cast<double>(in.f32());
        }
        s.label = in.u8();
        s.pixel = {in.u8(), in.u8()};
        s.scan = {in.u8(), in.u8()};
        const std::uint8_t split = in.u8();
        if ((s.label >> n_surfaces) != 0 || split > 2 ||
            s.pixel.row >= ds.config.pixels_per_side ||
            s.pixel.col >= ds.config.pixels_per_side ||
            s.scan.row >= ds.config.scans_per_pixel_side ||
            s.scan.col >= ds.config.scans_per_pixel_side) {
            schema("record field out of range");
        }
        s.split = static_cast<Split>(split);
    }
    return ds;
}

void write_text_file(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
    }
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_dataset(const Dataset &dataset, const std::filesystem::path &path) {
    const auto bytes = encode_dataset(dataset);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char *>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
    }
}

Dataset read_dataset(const std::filesystem::path &path) {
    return decode_dataset(read_binary_file(path));
}

json checkpoint_to_json(const Checkpoint &c) {
    json j = {{"format", "thzq-checkpoint"},
              {"version", kCheckpointVersion},
              {"model_kind", std::string(to_string(c.kind))},
              {"seed", c.seed},
              {"best_epoch", c.best_epoch},
              {"input_len", c.input_len},
              {"n_surfaces", c.n_surfaces},
              {"train_config", train_config_to_json(c.train_config)}};
    if (c.vqc) {
        const auto &v = *c.vqc;
        j["vqc"] = {{"n_qubits", v.n_qubits}, {"n_layers", v.n_layers},
                    {"feature_len", v.feature_len}, {"scale", v.scale},
                    {"frozen", v.frozen}, {"thetas", v.thetas}};
    }
    if (c.head) {
        const auto &m = *c.head;
        json layers = json::array();
        for (const auto &l : m.linear()) {
            layers.push_back({{"weight", matrix_to_json(l.weight)},
                              {"bias", vector_to_json(l.bias)}});
        }
        json norms = json::array();
        for (const auto &bn : m.batch_norm()) {
            norms.push_back({{"gamma", vector_to_json(bn.gamma)},
                             {"beta", vector_to_json(bn.beta)},
                             {"running_mean", vector_to_json(bn.running_mean)},
                             {"running_var", vector_to_json(bn.running_var)},
                             {"momentum", bn.momentum},
                             {"epsilon", bn.epsilon}});
        }
        j["head"] = {{"layer_dims", m.layer_dims()}, {"linear", layers}, {"batch_norm", norms}};
    }
    if (!c.intensity.empty()) {
        json rules = json::array();
        for (const auto &r : c.intensity) {
            rules.push_back({{"gate_first", r.window.first},
                             {"gate_last", r.window.last},
                             {"threshold", r.threshold}});
        }
        j["intensity"] = std::move(rules);
    }
    return j;
}

Checkpoint checkpoint_from_json(const json &j, std::optional<ModelKind> expected) {
    Checkpoint c;
    try {
        if (j.at("format").get<std::string>() != "thzq-checkpoint") {
            schema("not a thzq checkpoint");
        }
        if (j.at("version").get<int>() != kCheckpointVersion) {
            schema("unsupported checkpoint version");
        }
        c.kind = parse_model_kind(j.at("model_kind").get<std::string>());
        if (expected && *expected != c.kind) {
            schema("checkpoint holds a " + std::string(to_string(c.kind)) +
                   " model, expected " + std::string(to_string(*expected)));
        }
        c.seed = j.at("seed").get<std::uint64_t>();
        c.best_epoch = j.at("best_epoch").get<std::size_t>();
        c.input_len = j.at("input_len").get<std::size_t>();
        c.n_surfaces = j.at("n_surfaces").get<std::size_t>();
        c.train_config = train_config_from_json(j.at("train_config"));

        const bool wants_vqc = c.kind == ModelKind::QmlDnn;
        const bool wants_head = c.kind != ModelKind::Intensity;
        if (j.contains("vqc") != wants_vqc || j.contains("head") != wants_head ||
            j.contains("intensity") != !wants_head) {
            schema("sections do not match model kind " + std::string(to_string(c.kind)));
        }
        if (wants_vqc) {
            const auto &v = j.at("vqc");
            VqcState s;
            s.n_qubits = v.at("n_qubits").get<std::size_t>();
            s.n_layers = v.at("n_layers").get<std::size_t>();
            s.feature_len = v.at("feature_len").get<std::size_t>();
            s.scale = v.at("scale").get<double>();
            s.frozen = v.at("frozen").get<bool>();
            s.thetas = v.at("thetas").get<std::vector<double>>();
            const auto layout = build_layout(s.n_qubits, s.n_layers);
            if (s.thetas.size() != layout.param_count() || s.feature_len > layout.dim() ||
                c.input_len > layout.dim()) {
                schema("VQC section inconsistent with its layout");
            }
            c.vqc = std::move(s);
        }
        if (wants_head) {
            const auto &h = j.at("head");
            std::vector<Linear> linear;
            for (const auto &l : h.at("linear")) {
                linear.push_back({matrix_from_json(l.at("weight")),
                                  vector_from_json(l.at("bias"))});
            }
            std::vector<BatchNorm> norms;
            for (const auto &b : h.at("batch_norm")) {
                BatchNorm bn;
                bn.gamma = vector_from_json(b.at("gamma"));
                bn.beta = vector_from_json(b.at("beta"));
                bn.running_mean = vector_from_json(b.at("running_mean"));
                bn.running_var = vector_from_json(b.at("running_var"));
                bn.momentum = b.at("momentum").get<double>();
                bn.epsilon = b.at("epsilon").get<double>();
                norms.push_back(std::move(bn));
            }
            Mlp head(std::move(linear), std::move(norms));
            head.set_mode(Mode::Eval);
            if (head.layer_dims() != h.at("layer_dims").get<std::vector<std::size_t>>()) {
                schema("layer_dims disagree with the stored weights");
            }
            const std::size_t expected_in = c.vqc ? c.vqc->feature_len : c.input_len;
            if (head.input_dim() != expected_in || head.output_dim() != c.n_surfaces) {
                schema("head dimensions inconsistent with inputs/surfaces");
            }
            c.head = std::move(head);
        } else {
            for (const auto &r : j.at("intensity")) {
                IntensityRule rule;
                rule.window.first = r.at("gate_first").get<std::size_t>();
                rule.window.last = r.at("gate_last").get<std::size_t>();
                rule.threshold = r.at("threshold").get<double>();
                c.intensity.push_back(rule);
            }
            if (c.intensity.size() != c.n_surfaces) {
                schema("one intensity rule per surface required");
            }
        }
    } catch (const json::exception &e) {
        schema(std::string("checkpoint: ") + e.what());
    } catch (const Error &e) {
        if (e.code() == ErrorCode::SchemaMismatch) {
            throw;
        }
        schema(std::string("checkpoint: ") + e.what());
    }
    return c;
}

void write_checkpoint(const Checkpoint &checkpoint, const std::filesystem::path &path) {
    write_text_file(path, checkpoint_to_json(checkpoint).dump(1) + "\n");
}

Checkpoint read_checkpoint(const std::filesystem::path &path,
                           std::optional<ModelKind> expected) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception &e) {
        schema(path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j, expected);
}

namespace {

std::string g17(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

} // namespace

std::string format_history_csv(const std::vector<EpochRecord> &history) {
    std::string out = std::string(kHistoryHeader) + "\n";
    for (const auto &h : history) {
        out += std::to_string(h.epoch) + "," + g17(h.lr) + "," + g17(h.train_loss) +
               "," + g17(h.valid_mean_acc) + "\n";
    }
    return out;
}

void write_history_csv(const std::vector<EpochRecord> &history,
                       const std::filesystem::path &path) {
    write_text_file(path, format_history_csv(history));
}

std::string format_metrics_report(const Metrics &m) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(6);
    os << "mean_accuracy=" << m.mean_accuracy << "\n";
    os << "exact_match_rate=" << m.exact_match_rate << "\n";
    for (std::size_t s = 0; s < m.per_surface_accuracy.size(); ++s) {
        os << "surface_" << (s + 1) << "_accuracy=" << m.per_surface_accuracy[s] << "\n";
    }
    return os.str();
}

int grey_level(double score) noexcept {
    const double v = std::isnan(score) ? 0.0 : std::clamp(score, 0.0, 1.0);
    return static_cast<int>(std::floor(v * 255.0 + 0.5));
}

std::string format_pgm(const std::vector<double> &map, std::size_t side) {
    if (map.size() != side * side) {
        throw Error(ErrorCode::ShapeMismatch, "map is not side x side");
    }
    std::string out = "P2\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
    for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t c = 0; c < side; ++c) {
            if (c > 0) {
                out += ' ';
            }
            out += std::to_string(grey_level(map[r * side + c]));
        }
        out += '\n';
    }
    return out;
}

std::vector<std::filesystem::path> export_heatmaps(const ScoreMaps &maps,
                                                   const std::string &path_prefix) {
    std::vector<std::filesystem::path> written;
    const std::size_t side = maps.pixels_per_side;
    std::string csv = "surface,row,col,score\n";
    for (std::size_t s = 0; s < maps.maps.size(); ++s) {
        const std::filesystem::path pgm = path_prefix + "_s" + std::to_string(s + 1) + ".pgm";
        write_text_file(pgm, format_pgm(maps.maps[s], side));
        written.push_back(pgm);
        for (std::size_t p = 0; p < maps.maps[s].size(); ++p) {
            csv += std::to_string(s + 1) + "," + std::to_string(p / side) + "," +
                   std::to_string(p % side) + "," + g17(maps.maps[s][p]) + "\n";
        }
    }
    const std::filesystem::path csv_path = path_prefix + "_scores.csv";
    write_text_file(csv_path, csv);
    written.push_back(csv_path);
    return written;
}

} // namespace thzq
