// foulscan: prototype-based biofouling assessment over precomputed patch
// embeddings. Subcommands cover bank fitting, per-image scoring, evaluation,
// video transect analysis and exemplar export. All commands are deterministic
// for a fixed --seed and never mutate their inputs.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "foulscan/foulscan.hpp"

namespace {

using namespace foulscan;

// Flag-shaped mistakes exit 2; anything arising from file content exits 3.
// Range checks on numeric flags are enforced by the parser, so OutOfRange at
// runtime always means bad data.
int exit_code_for(Errc code) {
    switch (code) {
        case Errc::InvalidArgument:
        case Errc::InvalidRate:
            return 2;  // usage
        default:
            return 3;  // data / validation
    }
}

void log_line(const std::string& msg) { std::cerr << "[foulscan] " << msg << "\n"; }

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::IoFailure, "cannot open " + path);
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(Errc::IoFailure, "cannot open " + path + " for writing");
    return out;
}

// Joins container frames with a label table; every frame must be labelled.
LabeledEmbeddingSet join_labels(std::vector<EmbeddedFrame> frames,
                                const std::vector<LabelRow>& rows) {
    std::map<std::string, const LabelRow*> by_id;
    for (const auto& r : rows) by_id[r.image_id] = &r;
    LabeledEmbeddingSet set;
    set.labels.reserve(frames.size());
    for (const auto& f : frames) {
        auto it = by_id.find(f.frame_id());
        if (it == by_id.end()) {
            raise(Errc::SchemaMismatch, "no label row for frame '" + f.frame_id() + "'");
        }
        set.labels.push_back({it->second->presence, it->second->slof, it->second->split});
    }
    set.frames = std::move(frames);
    return set;
}

struct FitArgs {
    std::string embeddings, labels, out;
    std::size_t prototypes_per_class = 10;
    std::size_t components = 5;
    std::size_t n_seeds = 10;
    std::size_t refine_rounds = 3;
    double temperature = 0.1;
    std::size_t retain_min = 1;
    std::string positive_class = "fouling";
    std::string negative_class = "no_fouling";
};

int cmd_fit(const FitArgs& a, std::uint64_t seed) {
    EmbeddingContainerReader reader(a.embeddings);
    auto labels_in = open_input(a.labels);
    const auto label_rows = read_labels_csv(labels_in);
    auto set = join_labels(reader.read_all(), label_rows);
    log_line("fit: frames=" + std::to_string(set.frames.size()) +
             " seeds=" + std::to_string(a.n_seeds));

    FitConfig cfg;
    cfg.prototypes_per_class = a.prototypes_per_class;
    cfg.components_per_image = a.components;
    cfg.seeds.clear();
    for (std::size_t i = 0; i < a.n_seeds; ++i) cfg.seeds.push_back(seed + i);
    cfg.refine_rounds = a.refine_rounds;
    cfg.temperature = a.temperature;
    cfg.retain_min = a.retain_min;
    cfg.positive_class = a.positive_class;
    cfg.negative_class = a.negative_class;

    auto [bank, report] = fit_bank(set, cfg);
    auto out = open_output(a.out);
    write_bank_json(out, {bank, std::nullopt});

    std::cout << "seed validation_ap\n";
    for (const auto& s : report.per_seed) {
        std::cout << s.seed << " " << detail::fmt_g9(s.validation_ap) << "\n";
    }
    std::cout << "chosen_seed " << report.chosen_seed << "\n";
    log_line("fit: wrote bank to " + a.out + " (negative pool " +
             std::to_string(report.negative_pool_size) + ", fouling pool " +
             std::to_string(report.fouling_pool_size) + ")");
    return 0;
}

struct ScoreArgs {
    std::string bank, embeddings, out, heatmap_out;
    double coverage_threshold = 0.5;
};

int cmd_score(const ScoreArgs& a) {
    auto bank_in = open_input(a.bank);
    const auto bank_file = read_bank_json(bank_in);
    const PrototypeBank& bank = bank_file.bank;
    EmbeddingContainerReader reader(a.embeddings);
    const std::size_t n = reader.size();
    if (n == 0) raise(Errc::EmptyDataset, "container has no frames");

    const InferenceConfig cfg{bank.metadata().components_per_image, 50, a.coverage_threshold};
    const std::size_t target = bank.target_index();
    std::vector<ScoreRow> rows(n);
    std::vector<std::string> heatmaps(a.heatmap_out.empty() ? 0 : n);
    detail::parallel_for(n, [&](std::size_t i) {
        const EmbeddedFrame frame = reader.frame(i);
        const auto pred = predict_frame(frame, bank, cfg);
        rows[i] = {frame.frame_id(), pred.target_confidence, pred.target_coverage,
                   slof_from_coverage(pred.target_coverage)};
        if (!heatmaps.empty()) {
            std::string dump;
            for (std::size_t p = 0; p < frame.patch_count(); ++p) {
                dump += frame.frame_id();
                dump += ',';
                dump += std::to_string(p / frame.grid_w());
                dump += ',';
                dump += std::to_string(p % frame.grid_w());
                dump += ',';
                dump += detail::fmt_g9(pred.map.patch_row(p)[target]);
                dump += '\n';
            }
            heatmaps[i] = std::move(dump);
        }
    });

    auto out = open_output(a.out);
    write_scores_csv(out, rows);
    if (!a.heatmap_out.empty()) {
        auto hm = open_output(a.heatmap_out);
        hm << "image_id,row,col,score\n";
        for (const auto& h : heatmaps) hm << h;
        if (!hm) raise(Errc::IoFailure, "heatmap write failed");
    }
    log_line("score: wrote " + std::to_string(n) + " rows to " + a.out);
    return 0;
}

struct EvalArgs {
    std::string scores, labels, out, pr_out;
    double target_recall = 0.9;
};

std::string default_pr_path(const std::string& out) {
    const auto dot = out.rfind('.');
    const auto slash = out.find_last_of("/\\");
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
        return out + "_pr.csv";
    }
    return out.substr(0, dot) + "_pr.csv";
}

int cmd_eval(const EvalArgs& a) {
    auto scores_in = open_input(a.scores);
    const auto score_rows = read_scores_csv(scores_in);
    auto labels_in = open_input(a.labels);
    const auto label_rows = read_labels_csv(labels_in);
    std::map<std::string, bool> presence;
    for (const auto& r : label_rows) presence[r.image_id] = r.presence;

    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& r : score_rows) {
        auto it = presence.find(r.image_id);
        if (it == presence.end()) {
            raise(Errc::SchemaMismatch, "no label for scored image '" + r.image_id + "'");
        }
        scores.push_back(r.fouling_conf);
        labels.push_back(it->second ? 1 : 0);
    }
    if (scores.empty()) raise(Errc::EmptyDataset, "no scored images");

    EvalReport report;
    report.average_precision = average_precision(scores, labels);
    const auto curve = pr_curve(scores, labels);
    const auto choice = select_threshold(curve, a.target_recall);
    report.selected_threshold = choice.threshold;
    report.precision_at = choice.precision;
    report.recall_at = choice.recall;
    report.positives = curve.positives;
    report.negatives = curve.negatives;
    report.target_recall = a.target_recall;

    auto out = open_output(a.out);
    write_eval_json(out, report);
    const std::string pr_path = a.pr_out.empty() ? default_pr_path(a.out) : a.pr_out;
    auto pr = open_output(pr_path);
    write_pr_csv(pr, curve);

    std::cout << "average_precision " << detail::fmt_g9(report.average_precision) << "\n"
              << "selected_threshold " << detail::fmt_g9(report.selected_threshold) << "\n"
              << "precision_at_target " << detail::fmt_g9(report.precision_at) << "\n"
              << "recall_at_target " << detail::fmt_g9(report.recall_at) << "\n";
    log_line("eval: wrote " + a.out + " and " + pr_path);
    return 0;
}

struct VideoArgs {
    std::string hull_bank, fouling_bank, embeddings, out_report, out_timeline, out_frames;
    double sample_fps = 10.0;
    double native_fps = 0.0;  // 0: infer from container timestamps
    double bandwidth = 1.0;
    double hull_threshold = 0.75;
    double fouling_threshold = 0.25;
    double coverage_threshold = 0.5;
    double gap = 2.0;
    std::size_t per_group = 8;
};

int cmd_video(const VideoArgs& a, std::uint64_t seed) {
    auto hull_in = open_input(a.hull_bank);
    const auto hull = read_bank_json(hull_in);
    auto fouling_in = open_input(a.fouling_bank);
    const auto fouling = read_bank_json(fouling_in);
    EmbeddingContainerReader reader(a.embeddings);
    if (reader.size() == 0) raise(Errc::EmptyStream, "container has no frames");

    double native = a.native_fps;
    if (native <= 0.0) {
        const auto& m = reader.manifest();
        if (m.size() >= 2 && m.back().timestamp_s > m.front().timestamp_s) {
            native = static_cast<double>(m.size() - 1) /
                     (m.back().timestamp_s - m.front().timestamp_s);
        } else {
            native = a.sample_fps;  // single frame: sampling is the identity
        }
    }
    const std::size_t stride = sample_stride(native, a.sample_fps);
    log_line("video: native_fps=" + detail::fmt_g9(native) + " stride=" + std::to_string(stride));

    TimelineConfig cfg;
    cfg.sample_fps = a.sample_fps;
    cfg.bandwidth_s = a.bandwidth;
    cfg.hull_threshold = a.hull_threshold;
    cfg.fouling_threshold = a.fouling_threshold;
    cfg.coverage_threshold = a.coverage_threshold;
    cfg.gap_s = a.gap;

    SampledFrameProvider sampled(reader, stride);
    const auto report = build_report(sampled, hull.bank, fouling.bank, cfg, {a.per_group, seed});

    auto rep_out = open_output(a.out_report);
    write_report_json(rep_out, report);
    auto tl_out = open_output(a.out_timeline);
    write_timeline_csv(tl_out, report.timeline);
    if (!a.out_frames.empty()) {
        auto frames_out = open_output(a.out_frames);
        write_selected_frames_csv(frames_out, report.selected_frames);
    }

    std::cout << "frames " << report.summary.total_points << "\n"
              << "hull_frames " << report.summary.hull_points << "\n"
              << "segments " << report.segments.size() << "\n"
              << "fouled_fraction " << detail::fmt_g9(report.summary.fouled_fraction) << "\n"
              << "peak_coverage_smoothed "
              << detail::fmt_g9(report.summary.peak_coverage_smoothed) << "\n"
              << "hull_threshold " << detail::fmt_g9(cfg.hull_threshold) << "\n"
              << "fouling_threshold " << detail::fmt_g9(cfg.fouling_threshold) << "\n";
    log_line("video: wrote " + a.out_report + " and " + a.out_timeline);
    return 0;
}

struct ExemplarArgs {
    std::string bank, embeddings, out;
    std::size_t top = 5;
};

int cmd_exemplars(const ExemplarArgs& a) {
    auto bank_in = open_input(a.bank);
    const auto bank_file = read_bank_json(bank_in);
    EmbeddingContainerReader reader(a.embeddings);
    LabeledEmbeddingSet set;
    set.frames = reader.read_all();
    set.labels.assign(set.frames.size(), FrameLabel{false, std::nullopt, Split::train});
    const auto table = exemplars(bank_file.bank, set, a.top);
    auto out = open_output(a.out);
    write_exemplars_json(out, bank_file.bank, table, a.top);
    log_line("exemplars: wrote " + a.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"prototype-based biofouling assessment over precomputed embeddings"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may appear after the subcommand name
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "base RNG seed")->capture_default_str();

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "fit a prototype bank from labelled embeddings");
    fit->add_option("--embeddings", fit_args.embeddings, "embedding container")->required();
    fit->add_option("--labels", fit_args.labels, "labels CSV")->required();
    fit->add_option("--out", fit_args.out, "output bank JSON")->required();
    fit->add_option("--prototypes-per-class", fit_args.prototypes_per_class)
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    fit->add_option("--components", fit_args.components, "component features per image")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    fit->add_option("--seeds", fit_args.n_seeds, "number of fitting seeds")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    fit->add_option("--refine-rounds", fit_args.refine_rounds)->capture_default_str();
    fit->add_option("--temperature", fit_args.temperature)
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    fit->add_option("--retain-min", fit_args.retain_min,
                    "components per positive image kept in the negative pool")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    fit->add_option("--positive-class", fit_args.positive_class)->capture_default_str();
    fit->add_option("--negative-class", fit_args.negative_class)->capture_default_str();

    ScoreArgs score_args;
    auto* score = app.add_subcommand("score", "score frames against a bank");
    score->add_option("--bank", score_args.bank)->required();
    score->add_option("--embeddings", score_args.embeddings)->required();
    score->add_option("--out", score_args.out, "output scores CSV")->required();
    score->add_option("--coverage-threshold", score_args.coverage_threshold)
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    score->add_option("--heatmap-out", score_args.heatmap_out, "per-patch score dump CSV");

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "evaluate scores against labels");
    eval->add_option("--scores", eval_args.scores)->required();
    eval->add_option("--labels", eval_args.labels)->required();
    eval->add_option("--out", eval_args.out, "output report JSON")->required();
    eval->add_option("--pr-out", eval_args.pr_out, "PR curve CSV (default: derived from --out)");
    eval->add_option("--target-recall", eval_args.target_recall)
        ->capture_default_str()
        ->check(CLI::Range(1e-9, 1.0));

    VideoArgs video_args;
    auto* video = app.add_subcommand("video", "analyze a transect embedding stream");
    video->add_option("--hull-bank", video_args.hull_bank)->required();
    video->add_option("--fouling-bank", video_args.fouling_bank)->required();
    video->add_option("--embeddings", video_args.embeddings)->required();
    video->add_option("--out-report", video_args.out_report)->required();
    video->add_option("--out-timeline", video_args.out_timeline)->required();
    video->add_option("--out-frames", video_args.out_frames,
                      "sidecar CSV of SKMPS-selected frames for extraction tools");
    video->add_option("--sample-fps", video_args.sample_fps)
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    video->add_option("--native-fps", video_args.native_fps,
                      "native frame rate (default: inferred from timestamps)");
    video->add_option("--bandwidth", video_args.bandwidth)
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    video->add_option("--hull-threshold", video_args.hull_threshold)
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    video->add_option("--fouling-threshold", video_args.fouling_threshold)
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    video->add_option("--coverage-threshold", video_args.coverage_threshold)
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    video->add_option("--gap", video_args.gap, "max in-segment gap, seconds")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    video->add_option("--per-group", video_args.per_group, "summary frames per class")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    ExemplarArgs ex_args;
    auto* ex = app.add_subcommand("exemplars", "export prototype exemplars");
    ex->add_option("--bank", ex_args.bank)->required();
    ex->add_option("--embeddings", ex_args.embeddings)->required();
    ex->add_option("--out", ex_args.out)->required();
    ex->add_option("--top", ex_args.top, "exemplars per prototype")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "[foulscan] " << e.what() << "\n";
        return 2;
    }

    try {
        if (fit->parsed()) return cmd_fit(fit_args, seed);
        if (score->parsed()) return cmd_score(score_args);
        if (eval->parsed()) return cmd_eval(eval_args);
        if (video->parsed()) return cmd_video(video_args, seed);
        if (ex->parsed()) return cmd_exemplars(ex_args);
    } catch (const foulscan::Error& e) {
        std::cerr << "[foulscan] error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "[foulscan] error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
