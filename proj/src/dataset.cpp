#include "turngrab/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace turngrab {
namespace {

using ordered_json = nlohmann::ordered_json;

void put_f32(std::ostream& out, float v) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    const unsigned char bytes[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                    static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

float get_f32(const unsigned char* p) {
    const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    return std::bit_cast<float>(bits);
}

}  // namespace

void write_sample_set(const SampleSet& set, const std::filesystem::path& manifest) {
    const auto dir = manifest.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    const std::string stem = manifest.stem().string();
    const std::string tensor_name = stem + ".f32";
    const std::string index_name = stem + ".index.jsonl";

    std::size_t n_pos = 0;
    std::size_t n_unl = 0;
    std::ofstream tensor(dir / tensor_name, std::ios::binary);
    std::ofstream index(dir / index_name, std::ios::binary);
    if (!tensor || !index) throw Error(ErrorCode::Io, "cannot write sample files next to " + manifest.string());
    for (const auto& s : set.samples) {
        if (s.seq_len != set.seq_len || s.channels != set.channels ||
            s.data.size() != static_cast<std::size_t>(set.seq_len) * static_cast<std::size_t>(set.channels)) {
            throw Error(ErrorCode::ShapeMismatch, "sample shape differs from set shape");
        }
        for (float v : s.data) put_f32(tensor, v);
        ordered_json rec;
        rec["video_id"] = s.video_id;
        rec["face_id"] = s.face_id;
        rec["t_start"] = s.t_start;
        rec["t_end"] = s.t_end;
        rec["pu_role"] = to_string(s.pu_role);
        rec["truth"] = s.truth ? ordered_json(to_string(*s.truth)) : ordered_json(nullptr);
        index << rec.dump() << '\n';
        (s.pu_role == PuRole::positive ? n_pos : n_unl)++;
    }

    ordered_json m;
    m["format"] = "turngrab-samples";
    m["version"] = 1;
    m["n"] = set.samples.size();
    m["seq_len"] = set.seq_len;
    m["channels"] = set.channels;
    m["tensor"] = tensor_name;
    m["index"] = index_name;
    m["counts"] = {{"positive", n_pos}, {"unlabeled", n_unl}};
    m["seed"] = set.seed;
    m["config"] = set.config;
    std::ofstream out(manifest, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + manifest.string());
    out << m.dump(2) << '\n';
}

SampleSet read_sample_set(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + manifest.string());
    SampleSet set;
    try {
        ordered_json m;
        in >> m;
        if (m.at("format").get<std::string>() != "turngrab-samples") {
            throw Error(ErrorCode::FormatError, manifest.string() + ": not a sample manifest");
        }
        const auto n = m.at("n").get<std::size_t>();
        set.seq_len = m.at("seq_len").get<int>();
        set.channels = m.at("channels").get<int>();
        set.seed = m.at("seed").get<std::uint64_t>();
        set.config = m.value("config", ordered_json::object());
        const auto dir = manifest.parent_path();

        const std::size_t per = static_cast<std::size_t>(set.seq_len) * static_cast<std::size_t>(set.channels);
        std::ifstream tensor(dir / m.at("tensor").get<std::string>(), std::ios::binary);
        std::ifstream index(dir / m.at("index").get<std::string>());
        if (!tensor || !index) throw Error(ErrorCode::Io, "missing tensor or index file for " + manifest.string());
        std::vector<unsigned char> buf(per * 4);
        std::string line;
        for (std::size_t k = 0; k < n; ++k) {
            if (!std::getline(index, line)) throw Error(ErrorCode::FormatError, "index shorter than manifest count");
            const auto rec = nlohmann::json::parse(line);
            Sample s;
            s.video_id = rec.at("video_id").get<std::string>();
            s.face_id = rec.at("face_id").get<std::string>();
            s.t_start = rec.at("t_start").get<double>();
            s.t_end = rec.at("t_end").get<double>();
            s.pu_role = pu_role_from_string(rec.at("pu_role").get<std::string>());
            if (!rec.at("truth").is_null()) s.truth = annotation_from_string(rec.at("truth").get<std::string>());
            s.seq_len = set.seq_len;
            s.channels = set.channels;
            tensor.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
            if (!tensor) throw Error(ErrorCode::FormatError, "tensor file shorter than manifest count");
            s.data.resize(per);
            for (std::size_t i = 0; i < per; ++i) {
                s.data[i] = get_f32(buf.data() + 4 * i);
                if (!std::isfinite(s.data[i])) throw Error(ErrorCode::FormatError, "non-finite value in tensor file");
            }
            set.samples.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, manifest.string() + ": " + e.what());
    }
    return set;
}

LabeledView labeled_view(const std::vector<Sample>& samples, MergeMode mode) {
    LabeledView v;
    for (const auto& s : samples) {
        if (!s.truth) continue;
        const auto label = merge_annotation_labels(*s.truth, mode);
        if (!label) continue;
        v.samples.push_back(&s);
        v.labels.push_back(*label);
    }
    return v;
}

}  // namespace turngrab
