#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "foulscan/errors.hpp"
#include "foulscan/fit.hpp"
#include "foulscan/frame_provider.hpp"
#include "foulscan/metrics.hpp"
#include "foulscan/model.hpp"
#include "foulscan/pipeline.hpp"

namespace foulscan {

// ---------------------------------------------------------------------------
// Embedding container (binary, little-endian)
//
// One record per frame:
//   magic "CFEB" | u32 version=1 | u32 grid_h | u32 grid_w | u32 dim
//   | u64 id_len | id bytes (UTF-8) | f64 timestamp_s
//   | dim f32 global embedding | grid_h*grid_w*dim f32 patches, row-major
// A container file is a concatenation of records with non-decreasing
// timestamps. Payloads are stored as the fixed point of quantize/normalize so
// write -> read -> write is byte-stable.
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 4> kEmbeddingMagic{'C', 'F', 'E', 'B'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

struct ManifestEntry {
    std::string frame_id;
    double timestamp_s = 0.0;
    std::uint64_t offset = 0;
};

namespace detail {

static_assert(sizeof(float) == 4 && sizeof(double) == 8);

inline void put_bytes(std::ostream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out) raise(Errc::IoFailure, "write failed");
}

template <typename T>
void put_le(std::ostream& out, T value) {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    put_bytes(out, bytes.data(), bytes.size());
}

struct ByteReader {
    std::istream& in;
    std::uint64_t pos = 0;

    void read_exact(void* p, std::size_t n, const char* what) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) {
            raise(Errc::Truncated, std::string("record truncated reading ") + what +
                                       " at byte " + std::to_string(pos));
        }
        pos += n;
    }

    template <typename T>
    T get_le(const char* what) {
        std::array<unsigned char, sizeof(T)> bytes;
        read_exact(bytes.data(), bytes.size(), what);
        if constexpr (std::endian::native == std::endian::big) {
            std::reverse(bytes.begin(), bytes.end());
        }
        T value;
        std::memcpy(&value, bytes.data(), sizeof(T));
        return value;
    }
};

// Quantizes a unit f64 vector to f32 and iterates renormalize/requantize to a
// fixed point, so parsing (which renormalizes in f64) and reserializing
// reproduces the exact payload bytes.
inline std::vector<float> canonical_f32(std::span<const double> v) {
    std::vector<float> out(v.begin(), v.end());
    for (int pass = 0; pass < 8; ++pass) {
        double n2 = 0.0;
        for (float f : out) n2 += static_cast<double>(f) * static_cast<double>(f);
        const double n = std::sqrt(n2);
        bool changed = false;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const auto q = static_cast<float>(static_cast<double>(out[i]) / n);
            if (q != out[i]) {
                out[i] = q;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return out;
}

}  // namespace detail

inline void write_embedding_record(std::ostream& out, const EmbeddedFrame& frame) {
    detail::put_bytes(out, kEmbeddingMagic.data(), kEmbeddingMagic.size());
    detail::put_le<std::uint32_t>(out, kEmbeddingVersion);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(frame.grid_h()));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(frame.grid_w()));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(frame.dim()));
    detail::put_le<std::uint64_t>(out, frame.frame_id().size());
    detail::put_bytes(out, frame.frame_id().data(), frame.frame_id().size());
    detail::put_le<double>(out, frame.timestamp_s());
    for (float f : detail::canonical_f32(frame.global())) detail::put_le<float>(out, f);
    for (std::size_t i = 0; i < frame.patch_count(); ++i) {
        for (float f : detail::canonical_f32(frame.patch(i))) detail::put_le<float>(out, f);
    }
}

// Reads one record starting at the stream position. base_offset is only used
// to report absolute byte positions in errors.
inline EmbeddedFrame read_embedding_record(std::istream& in, std::uint64_t base_offset = 0) {
    detail::ByteReader r{in, base_offset};
    std::array<char, 4> magic;
    r.read_exact(magic.data(), magic.size(), "magic");
    if (magic != kEmbeddingMagic) {
        raise(Errc::BadMagic, "bad magic at byte " + std::to_string(base_offset));
    }
    const auto version = r.get_le<std::uint32_t>("version");
    if (version != kEmbeddingVersion) {
        raise(Errc::UnsupportedVersion, "unsupported container version " + std::to_string(version));
    }
    const auto grid_h = r.get_le<std::uint32_t>("grid_h");
    const auto grid_w = r.get_le<std::uint32_t>("grid_w");
    const auto dim = r.get_le<std::uint32_t>("dim");
    if (grid_h < 1 || grid_w < 1 || dim < 2) {
        raise(Errc::SchemaMismatch, "invalid record geometry at byte " + std::to_string(base_offset));
    }
    const auto id_len = r.get_le<std::uint64_t>("frame_id length");
    if (id_len > (1u << 20)) {
        raise(Errc::SchemaMismatch, "unreasonable frame id length at byte " +
                                        std::to_string(base_offset));
    }
    std::string frame_id(id_len, '\0');
    if (id_len > 0) r.read_exact(frame_id.data(), id_len, "frame_id");
    const double timestamp = r.get_le<double>("timestamp");

    const std::size_t patch_count = static_cast<std::size_t>(grid_h) * grid_w;
    std::vector<float> buf(dim);
    auto read_vec = [&](const char* what) {
        for (std::uint32_t d = 0; d < dim; ++d) buf[d] = r.get_le<float>(what);
        return std::vector<double>(buf.begin(), buf.end());
    };
    std::vector<double> global = read_vec("global embedding");
    std::vector<double> patches;
    patches.reserve(patch_count * dim);
    for (std::size_t p = 0; p < patch_count; ++p) {
        const auto v = read_vec("patch embedding");
        patches.insert(patches.end(), v.begin(), v.end());
    }
    // the frame constructor renormalizes, tolerating f32 rounding
    return EmbeddedFrame(std::move(frame_id), timestamp, grid_h, grid_w, dim, std::move(patches),
                         std::move(global));
}

inline void write_embedding_container(std::ostream& out,
                                      std::span<const EmbeddedFrame> frames) {
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (i > 0 && frames[i].timestamp_s() < frames[i - 1].timestamp_s()) {
            raise(Errc::SchemaMismatch, "container frames must have non-decreasing timestamps");
        }
        write_embedding_record(out, frames[i]);
    }
}

inline void write_embedding_container(const std::string& path,
                                      std::span<const EmbeddedFrame> frames) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(Errc::IoFailure, "cannot open " + path + " for writing");
    write_embedding_container(out, frames);
}

// Random-access reader over a container file. Scans once to build the
// manifest; frame(i) opens its own stream, so concurrent reads of distinct
// frames are safe.
class EmbeddingContainerReader final : public FrameProvider {
  public:
    explicit EmbeddingContainerReader(std::string path) : path_(std::move(path)) {
        std::ifstream in(path_, std::ios::binary);
        if (!in) raise(Errc::IoFailure, "cannot open " + path_);
        std::uint64_t offset = 0;
        while (true) {
            in.peek();
            if (in.eof()) break;
            const auto start = offset;
            EmbeddedFrame frame = scan_record(in, offset);
            if (!manifest_.empty() && frame.timestamp_s() < manifest_.back().timestamp_s) {
                raise(Errc::SchemaMismatch,
                      "timestamps decrease at record " + std::to_string(manifest_.size()) +
                          " (frame " + frame.frame_id() + ")");
            }
            manifest_.push_back({frame.frame_id(), frame.timestamp_s(), start});
        }
    }

    const std::vector<ManifestEntry>& manifest() const { return manifest_; }
    std::size_t size() const override { return manifest_.size(); }

    EmbeddedFrame frame(std::size_t index) const override {
        std::ifstream in(path_, std::ios::binary);
        if (!in) raise(Errc::IoFailure, "cannot open " + path_);
        in.seekg(static_cast<std::streamoff>(manifest_[index].offset));
        return read_embedding_record(in, manifest_[index].offset);
    }

    std::vector<EmbeddedFrame> read_all() const {
        std::vector<EmbeddedFrame> frames;
        frames.reserve(manifest_.size());
        std::ifstream in(path_, std::ios::binary);
        if (!in) raise(Errc::IoFailure, "cannot open " + path_);
        for (const auto& entry : manifest_) {
            frames.push_back(read_embedding_record(in, entry.offset));
        }
        return frames;
    }

  private:
    EmbeddedFrame scan_record(std::istream& in, std::uint64_t& offset) {
        EmbeddedFrame frame = read_embedding_record(in, offset);
        const std::size_t payload =
            (frame.dim() + frame.patch_count() * frame.dim()) * sizeof(float);
        offset += 4 + 4 * 4 + 8 + frame.frame_id().size() + 8 + payload;
        return frame;
    }

    std::string path_;
    std::vector<ManifestEntry> manifest_;
};

// ---------------------------------------------------------------------------
// CSV helpers
// ---------------------------------------------------------------------------

namespace detail {

// floats are serialized with 9 significant digits throughout the CSV surface
inline std::string fmt_g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline double parse_double_field(const std::string& s, std::size_t line_no, const char* what) {
    if (s.empty()) raise(Errc::SchemaMismatch, std::string("empty ") + what + " at line " +
                                                   std::to_string(line_no));
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) {
        raise(Errc::SchemaMismatch, std::string("bad ") + what + " '" + s + "' at line " +
                                        std::to_string(line_no));
    }
    return v;
}

inline long parse_int_field(const std::string& s, std::size_t line_no, const char* what) {
    if (s.empty()) raise(Errc::SchemaMismatch, std::string("empty ") + what + " at line " +
                                                   std::to_string(line_no));
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size()) {
        raise(Errc::SchemaMismatch, std::string("bad ") + what + " '" + s + "' at line " +
                                        std::to_string(line_no));
    }
    return v;
}

inline bool parse_bool01(const std::string& s, std::size_t line_no, const char* what) {
    if (s == "0") return false;
    if (s == "1") return true;
    raise(Errc::SchemaMismatch, std::string("bad ") + what + " '" + s + "' at line " +
                                    std::to_string(line_no) + ", expected 0 or 1");
}

inline void check_id_csv_safe(const std::string& id) {
    for (char c : id) {
        if (c == ',' || c == '\n' || c == '\r') {
            raise(Errc::SchemaMismatch, "id '" + id + "' contains CSV delimiter characters");
        }
    }
}

inline void expect_header(const std::string& got, std::string_view want) {
    std::string trimmed = got;
    while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == '\n')) {
        trimmed.pop_back();
    }
    if (trimmed != want) {
        raise(Errc::SchemaMismatch,
              "header mismatch: expected '" + std::string(want) + "', got '" + trimmed + "'");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Timeline CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view kTimelineHeader =
    "timestamp_s,hull_conf,hull_present,fouling_conf_raw,fouling_conf_smoothed,"
    "coverage_raw,coverage_smoothed,fouling_present";

inline void write_timeline_csv(std::ostream& out, const std::vector<TimelinePoint>& points) {
    out << kTimelineHeader << '\n';
    auto opt = [](const std::optional<double>& v) { return v ? detail::fmt_g9(*v) : std::string(); };
    for (const auto& p : points) {
        out << detail::fmt_g9(p.timestamp_s) << ',' << detail::fmt_g9(p.hull_confidence) << ','
            << (p.hull_present ? '1' : '0') << ',' << opt(p.fouling_confidence_raw) << ','
            << opt(p.fouling_confidence_smoothed) << ',' << opt(p.coverage_raw) << ','
            << opt(p.coverage_smoothed) << ','
            << (p.fouling_present ? (*p.fouling_present ? "1" : "0") : "") << '\n';
    }
    if (!out) raise(Errc::IoFailure, "timeline write failed");
}

inline std::vector<TimelinePoint> read_timeline_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) raise(Errc::SchemaMismatch, "missing timeline header");
    detail::expect_header(line, kTimelineHeader);
    std::vector<TimelinePoint> points;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        line_no++;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 8) {
            raise(Errc::SchemaMismatch, "expected 8 columns at line " + std::to_string(line_no));
        }
        TimelinePoint p;
        p.timestamp_s = detail::parse_double_field(f[0], line_no, "timestamp_s");
        p.hull_confidence = detail::parse_double_field(f[1], line_no, "hull_conf");
        p.hull_present = detail::parse_bool01(f[2], line_no, "hull_present");
        auto opt = [&](const std::string& s, const char* what) -> std::optional<double> {
            if (s.empty()) return std::nullopt;
            return detail::parse_double_field(s, line_no, what);
        };
        p.fouling_confidence_raw = opt(f[3], "fouling_conf_raw");
        p.fouling_confidence_smoothed = opt(f[4], "fouling_conf_smoothed");
        p.coverage_raw = opt(f[5], "coverage_raw");
        p.coverage_smoothed = opt(f[6], "coverage_smoothed");
        if (!f[7].empty()) p.fouling_present = detail::parse_bool01(f[7], line_no, "fouling_present");
        const bool has_fouling = p.fouling_confidence_raw.has_value();
        if (has_fouling != p.hull_present) {
            raise(Errc::SchemaMismatch, "fouling fields must be present exactly when hull_present, line " +
                                            std::to_string(line_no));
        }
        points.push_back(std::move(p));
    }
    return points;
}

// ---------------------------------------------------------------------------
// Labels CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view kLabelsHeader = "image_id,presence,slof,split";

struct LabelRow {
    std::string image_id;
    bool presence = false;
    std::optional<int> slof;
    Split split = Split::train;
};

inline std::vector<LabelRow> read_labels_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) raise(Errc::SchemaMismatch, "missing labels header");
    detail::expect_header(line, kLabelsHeader);
    std::vector<LabelRow> rows;
    std::set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        line_no++;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 4) {
            raise(Errc::SchemaMismatch, "expected 4 columns at line " + std::to_string(line_no));
        }
        LabelRow row;
        row.image_id = f[0];
        if (row.image_id.empty()) {
            raise(Errc::SchemaMismatch, "empty image_id at line " + std::to_string(line_no));
        }
        if (!seen.insert(row.image_id).second) {
            raise(Errc::DuplicateId, "duplicate image_id '" + row.image_id + "' at line " +
                                         std::to_string(line_no));
        }
        row.presence = detail::parse_bool01(f[1], line_no, "presence");
        if (!f[2].empty()) {
            const long s = detail::parse_int_field(f[2], line_no, "slof");
            if (s < 0 || s > 2) {
                raise(Errc::SchemaMismatch, "slof must be 0..2 at line " + std::to_string(line_no));
            }
            row.slof = static_cast<int>(s);
            if ((s == 0) == row.presence) {
                raise(Errc::LabelInconsistent, "slof " + std::to_string(s) +
                                                   " contradicts presence at line " +
                                                   std::to_string(line_no));
            }
        }
        if (f[3].empty() || f[3] == "train") {
            row.split = Split::train;
        } else if (f[3] == "val") {
            row.split = Split::validation;
        } else if (f[3] == "test") {
            row.split = Split::test;
        } else {
            raise(Errc::SchemaMismatch, "split must be train/val/test at line " +
                                            std::to_string(line_no));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_labels_csv(std::ostream& out, const std::vector<LabelRow>& rows) {
    out << kLabelsHeader << '\n';
    for (const auto& r : rows) {
        detail::check_id_csv_safe(r.image_id);
        out << r.image_id << ',' << (r.presence ? '1' : '0') << ','
            << (r.slof ? std::to_string(*r.slof) : "") << ',' << split_name(r.split) << '\n';
    }
    if (!out) raise(Errc::IoFailure, "labels write failed");
}

// ---------------------------------------------------------------------------
// Scores CSV (per-image scoring output, consumed by evaluation)
// ---------------------------------------------------------------------------

inline constexpr std::string_view kScoresHeader = "image_id,fouling_conf,coverage,slof_pred";

struct ScoreRow {
    std::string image_id;
    double fouling_conf = 0.0;
    double coverage = 0.0;
    int slof_pred = 0;
};

inline void write_scores_csv(std::ostream& out, const std::vector<ScoreRow>& rows) {
    out << kScoresHeader << '\n';
    for (const auto& r : rows) {
        detail::check_id_csv_safe(r.image_id);
        out << r.image_id << ',' << detail::fmt_g9(r.fouling_conf) << ','
            << detail::fmt_g9(r.coverage) << ',' << r.slof_pred << '\n';
    }
    if (!out) raise(Errc::IoFailure, "scores write failed");
}

inline std::vector<ScoreRow> read_scores_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) raise(Errc::SchemaMismatch, "missing scores header");
    detail::expect_header(line, kScoresHeader);
    std::vector<ScoreRow> rows;
    std::set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        line_no++;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 4) {
            raise(Errc::SchemaMismatch, "expected 4 columns at line " + std::to_string(line_no));
        }
        ScoreRow row;
        row.image_id = f[0];
        if (!seen.insert(row.image_id).second) {
            raise(Errc::DuplicateId, "duplicate image_id '" + row.image_id + "' at line " +
                                         std::to_string(line_no));
        }
        row.fouling_conf = detail::parse_double_field(f[1], line_no, "fouling_conf");
        row.coverage = detail::parse_double_field(f[2], line_no, "coverage");
        row.slof_pred = static_cast<int>(detail::parse_int_field(f[3], line_no, "slof_pred"));
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// PR curve CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view kPRHeader = "threshold,precision,recall";

inline void write_pr_csv(std::ostream& out, const PRCurve& curve) {
    out << kPRHeader << '\n';
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
        out << detail::fmt_g9(curve.thresholds[i]) << ',' << detail::fmt_g9(curve.precision[i])
            << ',' << detail::fmt_g9(curve.recall[i]) << '\n';
    }
    if (!out) raise(Errc::IoFailure, "PR curve write failed");
}

// ---------------------------------------------------------------------------
// Selected-frames sidecar (consumed by external frame-extraction tools)
// ---------------------------------------------------------------------------

inline constexpr std::string_view kSelectedFramesHeader = "group,frame_id,timestamp_s,cluster";

inline void write_selected_frames_csv(std::ostream& out, const SummarySelection& selection) {
    out << kSelectedFramesHeader << '\n';
    for (const auto* group : {&selection.fouling, &selection.no_fouling}) {
        const char* name = group->fouling_present ? "fouling" : "no_fouling";
        for (const auto& e : group->entries) {
            detail::check_id_csv_safe(e.frame_id);
            out << name << ',' << e.frame_id << ',' << detail::fmt_g9(e.timestamp_s) << ','
                << e.cluster << '\n';
        }
    }
    if (!out) raise(Errc::IoFailure, "selected frames write failed");
}

// ---------------------------------------------------------------------------
// Bank JSON
// ---------------------------------------------------------------------------

struct BankFile {
    PrototypeBank bank;
    std::optional<ExemplarTable> exemplars;
};

namespace detail {

inline nlohmann::json exemplars_to_json(const ExemplarTable& table) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& cls : table) {
        nlohmann::json protos = nlohmann::json::array();
        for (const auto& proto : cls) {
            nlohmann::json refs = nlohmann::json::array();
            for (const auto& e : proto) {
                refs.push_back({{"frame_id", e.frame_id},
                                {"component", e.component_index},
                                {"cosine", e.cosine}});
            }
            protos.push_back(std::move(refs));
        }
        arr.push_back(std::move(protos));
    }
    return arr;
}

inline ExemplarTable exemplars_from_json(const nlohmann::json& arr) {
    ExemplarTable table;
    for (const auto& cls : arr) {
        std::vector<std::vector<ExemplarRef>> protos;
        for (const auto& proto : cls) {
            std::vector<ExemplarRef> refs;
            for (const auto& e : proto) {
                refs.push_back({e.at("frame_id").get<std::string>(),
                                e.at("component").get<std::size_t>(),
                                e.at("cosine").get<double>()});
            }
            protos.push_back(std::move(refs));
        }
        table.push_back(std::move(protos));
    }
    return table;
}

template <typename T>
T json_get(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) {
        raise(Errc::SchemaMismatch, std::string("missing JSON field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        raise(Errc::SchemaMismatch, std::string("JSON field '") + key + "' has the wrong type");
    }
}

}  // namespace detail

inline void write_bank_json(std::ostream& out, const BankFile& file) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["temperature"] = file.bank.temperature();
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& cls : file.bank.classes()) {
        classes.push_back({{"name", cls.name},
                           {"is_background", cls.is_background},
                           {"prototypes", cls.prototypes}});
    }
    j["classes"] = std::move(classes);
    j["metadata"] = {{"fit_seed", file.bank.metadata().fit_seed},
                     {"config_digest", file.bank.metadata().config_digest},
                     {"created_by", file.bank.metadata().created_by},
                     {"components_per_image", file.bank.metadata().components_per_image}};
    if (file.exemplars) j["exemplars"] = detail::exemplars_to_json(*file.exemplars);
    out << j.dump(2) << '\n';
    if (!out) raise(Errc::IoFailure, "bank write failed");
}

inline BankFile read_bank_json(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::SchemaMismatch, std::string("bank JSON parse error: ") + e.what());
    }
    if (detail::json_get<int>(j, "schema_version") != 1) {
        raise(Errc::UnsupportedVersion, "unsupported bank schema_version");
    }
    const double temperature = detail::json_get<double>(j, "temperature");
    std::vector<PrototypeClass> classes;
    for (const auto& c : detail::json_get<nlohmann::json>(j, "classes")) {
        PrototypeClass cls;
        cls.name = detail::json_get<std::string>(c, "name");
        cls.is_background = detail::json_get<bool>(c, "is_background");
        cls.prototypes = detail::json_get<std::vector<std::vector<double>>>(c, "prototypes");
        classes.push_back(std::move(cls));
    }
    BankMetadata meta;
    if (j.contains("metadata")) {
        const auto& m = j.at("metadata");
        meta.fit_seed = detail::json_get<std::uint64_t>(m, "fit_seed");
        meta.config_digest = detail::json_get<std::string>(m, "config_digest");
        meta.created_by = detail::json_get<std::string>(m, "created_by");
        meta.components_per_image = detail::json_get<std::size_t>(m, "components_per_image");
    }
    // a structurally valid JSON document that fails bank validation is still
    // a malformed bank file
    std::optional<PrototypeBank> bank;
    try {
        bank.emplace(std::move(classes), temperature, std::move(meta));
    } catch (const Error& e) {
        raise(Errc::SchemaMismatch, std::string("invalid bank: ") + e.what());
    }
    BankFile file{std::move(*bank), std::nullopt};
    if (j.contains("exemplars")) {
        file.exemplars = detail::exemplars_from_json(j.at("exemplars"));
    }
    return file;
}

// ---------------------------------------------------------------------------
// Evaluation report JSON
// ---------------------------------------------------------------------------

inline void write_eval_json(std::ostream& out, const EvalReport& report) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["average_precision"] = report.average_precision;
    j["selected_threshold"] = report.selected_threshold;
    j["precision_at_target"] = report.precision_at;
    j["recall_at_target"] = report.recall_at;
    j["positives"] = report.positives;
    j["negatives"] = report.negatives;
    j["target_recall"] = report.target_recall;
    out << j.dump(2) << '\n';
    if (!out) raise(Errc::IoFailure, "eval report write failed");
}

inline EvalReport read_eval_json(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::SchemaMismatch, std::string("eval JSON parse error: ") + e.what());
    }
    EvalReport r;
    r.average_precision = detail::json_get<double>(j, "average_precision");
    r.selected_threshold = detail::json_get<double>(j, "selected_threshold");
    r.precision_at = detail::json_get<double>(j, "precision_at_target");
    r.recall_at = detail::json_get<double>(j, "recall_at_target");
    r.positives = detail::json_get<std::size_t>(j, "positives");
    r.negatives = detail::json_get<std::size_t>(j, "negatives");
    r.target_recall = detail::json_get<double>(j, "target_recall");
    return r;
}

// ---------------------------------------------------------------------------
// Transect report JSON
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json point_to_json(const TimelinePoint& p) {
    nlohmann::json j;
    j["timestamp_s"] = p.timestamp_s;
    j["hull_conf"] = p.hull_confidence;
    j["hull_present"] = p.hull_present;
    auto put_opt = [&](const char* key, const std::optional<double>& v) {
        if (v) {
            j[key] = *v;
        } else {
            j[key] = nullptr;
        }
    };
    put_opt("fouling_conf_raw", p.fouling_confidence_raw);
    put_opt("fouling_conf_smoothed", p.fouling_confidence_smoothed);
    put_opt("coverage_raw", p.coverage_raw);
    put_opt("coverage_smoothed", p.coverage_smoothed);
    if (p.fouling_present) {
        j["fouling_present"] = *p.fouling_present;
    } else {
        j["fouling_present"] = nullptr;
    }
    return j;
}

inline TimelinePoint point_from_json(const nlohmann::json& j) {
    TimelinePoint p;
    p.timestamp_s = json_get<double>(j, "timestamp_s");
    p.hull_confidence = json_get<double>(j, "hull_conf");
    p.hull_present = json_get<bool>(j, "hull_present");
    auto get_opt = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
        return j.at(key).get<double>();
    };
    p.fouling_confidence_raw = get_opt("fouling_conf_raw");
    p.fouling_confidence_smoothed = get_opt("fouling_conf_smoothed");
    p.coverage_raw = get_opt("coverage_raw");
    p.coverage_smoothed = get_opt("coverage_smoothed");
    if (j.contains("fouling_present") && !j.at("fouling_present").is_null()) {
        p.fouling_present = j.at("fouling_present").get<bool>();
    }
    return p;
}

inline nlohmann::json group_to_json(const SummaryGroup& g) {
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& e : g.entries) {
        frames.push_back({{"frame_id", e.frame_id},
                          {"timestamp_s", e.timestamp_s},
                          {"cluster", e.cluster}});
    }
    return {{"fouling_present", g.fouling_present}, {"frames", std::move(frames)}};
}

inline SummaryGroup group_from_json(const nlohmann::json& j) {
    SummaryGroup g;
    g.fouling_present = json_get<bool>(j, "fouling_present");
    for (const auto& e : j.at("frames")) {
        g.entries.push_back({json_get<std::string>(e, "frame_id"),
                             json_get<double>(e, "timestamp_s"),
                             json_get<std::size_t>(e, "cluster")});
    }
    return g;
}

}  // namespace detail

inline void write_report_json(std::ostream& out, const TransectReport& report) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["config"] = {{"sample_fps", report.config.sample_fps},
                   {"bandwidth_s", report.config.bandwidth_s},
                   {"truncation", report.config.truncation},
                   {"hull_threshold", report.config.hull_threshold},
                   {"fouling_threshold", report.config.fouling_threshold},
                   {"coverage_threshold", report.config.coverage_threshold},
                   {"gap_s", report.config.gap_s},
                   {"per_group", report.summarize.per_group},
                   {"seed", report.summarize.seed}};
    j["summary"] = {{"total_points", report.summary.total_points},
                    {"hull_points", report.summary.hull_points},
                    {"fouled_points", report.summary.fouled_points},
                    {"fouled_fraction", report.summary.fouled_fraction},
                    {"peak_coverage_smoothed", report.summary.peak_coverage_smoothed}};
    nlohmann::json segments = nlohmann::json::array();
    for (const auto& s : report.segments) {
        segments.push_back({{"start_s", s.start_s},
                            {"end_s", s.end_s},
                            {"points", s.points},
                            {"fouled_fraction", s.fouled_fraction},
                            {"peak_coverage_smoothed", s.peak_coverage_smoothed}});
    }
    j["segments"] = std::move(segments);
    j["selected_frames"] = {{"per_group", report.selected_frames.per_group},
                            {"groups",
                             {detail::group_to_json(report.selected_frames.fouling),
                              detail::group_to_json(report.selected_frames.no_fouling)}}};
    nlohmann::json timeline = nlohmann::json::array();
    for (const auto& p : report.timeline) timeline.push_back(detail::point_to_json(p));
    j["timeline"] = std::move(timeline);
    out << j.dump(2) << '\n';
    if (!out) raise(Errc::IoFailure, "report write failed");
}

inline TransectReport read_report_json(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::SchemaMismatch, std::string("report JSON parse error: ") + e.what());
    }
    TransectReport r;
    const auto& c = j.at("config");
    r.config.sample_fps = detail::json_get<double>(c, "sample_fps");
    r.config.bandwidth_s = detail::json_get<double>(c, "bandwidth_s");
    r.config.truncation = detail::json_get<double>(c, "truncation");
    r.config.hull_threshold = detail::json_get<double>(c, "hull_threshold");
    r.config.fouling_threshold = detail::json_get<double>(c, "fouling_threshold");
    r.config.coverage_threshold = detail::json_get<double>(c, "coverage_threshold");
    r.config.gap_s = detail::json_get<double>(c, "gap_s");
    r.summarize.per_group = detail::json_get<std::size_t>(c, "per_group");
    r.summarize.seed = detail::json_get<std::uint64_t>(c, "seed");
    const auto& s = j.at("summary");
    r.summary.total_points = detail::json_get<std::size_t>(s, "total_points");
    r.summary.hull_points = detail::json_get<std::size_t>(s, "hull_points");
    r.summary.fouled_points = detail::json_get<std::size_t>(s, "fouled_points");
    r.summary.fouled_fraction = detail::json_get<double>(s, "fouled_fraction");
    r.summary.peak_coverage_smoothed = detail::json_get<double>(s, "peak_coverage_smoothed");
    for (const auto& seg : j.at("segments")) {
        r.segments.push_back({detail::json_get<double>(seg, "start_s"),
                              detail::json_get<double>(seg, "end_s"),
                              detail::json_get<std::size_t>(seg, "points"),
                              detail::json_get<double>(seg, "fouled_fraction"),
                              detail::json_get<double>(seg, "peak_coverage_smoothed")});
    }
    const auto& sf = j.at("selected_frames");
    r.selected_frames.per_group = detail::json_get<std::size_t>(sf, "per_group");
    const auto& groups = sf.at("groups");
    r.selected_frames.fouling = detail::group_from_json(groups.at(0));
    r.selected_frames.no_fouling = detail::group_from_json(groups.at(1));
    for (const auto& p : j.at("timeline")) r.timeline.push_back(detail::point_from_json(p));
    return r;
}

// ---------------------------------------------------------------------------
// Exemplar JSON (standalone listing)
// ---------------------------------------------------------------------------

inline void write_exemplars_json(std::ostream& out, const PrototypeBank& bank,
                                 const ExemplarTable& table, std::size_t top_n) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["top_n"] = top_n;
    nlohmann::json per_class = detail::exemplars_to_json(table);
    nlohmann::json classes = nlohmann::json::array();
    for (std::size_t y = 0; y < table.size(); ++y) {
        classes.push_back({{"name", bank.classes()[y].name}, {"prototypes", per_class[y]}});
    }
    j["classes"] = std::move(classes);
    out << j.dump(2) << '\n';
    if (!out) raise(Errc::IoFailure, "exemplars write failed");
}

}  // namespace foulscan
