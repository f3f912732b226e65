#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "crossfuse/checkpoint.hpp"
#include "crossfuse/dataio.hpp"
#include "crossfuse/densify.hpp"
#include "crossfuse/errors.hpp"
#include "crossfuse/eval.hpp"
#include "crossfuse/geometry.hpp"
#include "crossfuse/network.hpp"
#include "crossfuse/synthetic.hpp"
#include "crossfuse/trainer.hpp"

namespace fs = std::filesystem;
using namespace crossfuse;

namespace {

struct RunConfig {
    TrainConfig train;
    int feature_maps = 32;
    int num_classes = 2;
    bool pad_canvas = true;
    int window = 11;
    double power = 2.0;
};

RunConfig paper_preset()
{
    return RunConfig{};
}

RunConfig toy_preset()
{
    RunConfig c;
    c.train = toy_train_config();
    c.feature_maps = kToyFeatureMaps;
    c.pad_canvas = false;
    return c;
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value, int line)
{
    std::istringstream is(value);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) {
        throw ParseError("config line " + std::to_string(line) + ": " + key + " expects a number, got '" + value +
                         "'");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& value, int line)
{
    if (value == "1" || value == "true" || value == "yes") {
        return true;
    }
    if (value == "0" || value == "false" || value == "no") {
        return false;
    }
    throw ParseError("config line " + std::to_string(line) + ": " + key + " expects a boolean, got '" + value + "'");
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& value, int line)
{
    TrainConfig& t = c.train;
    if (key == "iterations") t.iterations = parse_number<long>(key, value, line);
    else if (key == "eval_every") t.eval_every = parse_number<long>(key, value, line);
    else if (key == "eta0") t.eta0 = parse_number<double>(key, value, line);
    else if (key == "alpha") t.alpha = parse_number<double>(key, value, line);
    else if (key == "batch_size") t.batch_size = parse_number<int>(key, value, line);
    else if (key == "rotation_range_deg") t.rotation_range_deg = parse_number<double>(key, value, line);
    else if (key == "augment") t.augment = parse_bool(key, value, line);
    else if (key == "seed") t.seed = parse_number<std::uint64_t>(key, value, line);
    else if (key == "adam_beta1") t.adam_beta1 = parse_number<double>(key, value, line);
    else if (key == "adam_beta2") t.adam_beta2 = parse_number<double>(key, value, line);
    else if (key == "adam_eps") t.adam_eps = parse_number<double>(key, value, line);
    else if (key == "weight_decay") t.weight_decay = parse_number<double>(key, value, line);
    else if (key == "num_thresholds") t.num_thresholds = parse_number<int>(key, value, line);
    else if (key == "feature_maps") c.feature_maps = parse_number<int>(key, value, line);
    else if (key == "num_classes") c.num_classes = parse_number<int>(key, value, line);
    else if (key == "pad_canvas") c.pad_canvas = parse_bool(key, value, line);
    else if (key == "window") c.window = parse_number<int>(key, value, line);
    else if (key == "power") c.power = parse_number<double>(key, value, line);
    else throw ParseError("config line " + std::to_string(line) + ": unknown key '" + key + "'");
}

// "toy", "paper" or a file of `key = value` lines; '#' starts a comment.
RunConfig load_config(const std::string& name)
{
    if (name.empty() || name == "paper") {
        return paper_preset();
    }
    if (name == "toy") {
        return toy_preset();
    }
    std::ifstream is(name);
    if (!is) {
        throw IoError("cannot open config " + name);
    }
    RunConfig c = paper_preset();
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        const auto eq = line.find('=');
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        if (trim(line).empty()) {
            continue;
        }
        if (eq == std::string::npos) {
            throw ParseError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        apply_setting(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno);
    }
    return c;
}

std::string dump_config(const RunConfig& c)
{
    const TrainConfig& t = c.train;
    std::ostringstream os;
    os << "iterations = " << t.iterations << "\neval_every = " << t.eval_every << "\neta0 = " << fmt(t.eta0)
       << "\nalpha = " << fmt(t.alpha) << "\nbatch_size = " << t.batch_size
       << "\nrotation_range_deg = " << fmt(t.rotation_range_deg) << "\naugment = " << (t.augment ? 1 : 0)
       << "\nseed = " << t.seed << "\nadam_beta1 = " << fmt(t.adam_beta1) << "\nadam_beta2 = " << fmt(t.adam_beta2)
       << "\nadam_eps = " << fmt(t.adam_eps) << "\nweight_decay = " << fmt(t.weight_decay)
       << "\nnum_thresholds = " << t.num_thresholds << "\nfeature_maps = " << c.feature_maps
       << "\nnum_classes = " << c.num_classes << "\npad_canvas = " << (c.pad_canvas ? 1 : 0)
       << "\nwindow = " << c.window << "\npower = " << fmt(c.power) << "\n";
    return os.str();
}

void warn(const std::string& msg)
{
    std::cerr << "warning: " << msg << "\n";
}

struct ModeChoice {
    FusionMode mode = FusionMode::single;
    Modality modality = Modality::zyx;
};

ModeChoice parse_mode(const std::string& s)
{
    if (s == "zyx") return {FusionMode::single, Modality::zyx};
    if (s == "rgb") return {FusionMode::single, Modality::rgb};
    if (s == "early") return {FusionMode::early, Modality::zyx};
    if (s == "late") return {FusionMode::late, Modality::zyx};
    if (s == "cross") return {FusionMode::cross, Modality::zyx};
    throw ContractError("unknown mode '" + s + "' (expected zyx, rgb, early, late or cross)");
}

std::string mode_label(const FusionNetwork& net)
{
    return net.mode() == FusionMode::single ? to_string(net.modality()) : to_string(net.mode());
}

fs::path zyx_file(const fs::path& zyx_dir, const std::string& id)
{
    return zyx_dir / (id + ".zyx");
}

struct Needs {
    bool rgb = false;
    bool zyx = false;
};

Needs needs_of(const FusionNetwork& net)
{
    return {net.requires_rgb(), net.requires_zyx()};
}

/// Mode/data mismatch is a contract error for the whole run.
void check_modalities(const std::vector<FrameRecord>& frames, const Needs& needs, const fs::path& zyx_dir,
                      const std::string& mode)
{
    for (const FrameRecord& r : frames) {
        if (needs.rgb && r.rgb.empty()) {
            throw ContractError("mode " + mode + " needs camera images but frame " + r.id + " has none");
        }
        if (needs.zyx && r.cloud.empty()) {
            throw ContractError("mode " + mode + " needs LIDAR data but frame " + r.id + " has none");
        }
        if (needs.zyx && !fs::exists(zyx_file(zyx_dir, r.id))) {
            throw ContractError("mode " + mode + " needs preprocessed LIDAR images; missing " +
                                zyx_file(zyx_dir, r.id).string() + " (run preprocess first)");
        }
    }
}

std::optional<Sample> load_sample(const FrameRecord& r, const fs::path& base, const fs::path& zyx_dir,
                                  const Needs& needs, bool need_gt, bool pad_canvas)
{
    std::optional<Image8> rgb;
    std::optional<DenseZyxImage> zyx;
    std::optional<LabelMap> gt;
    if (needs.rgb) {
        rgb = read_image(resolve_path(r.rgb, base));
    }
    if (needs.zyx) {
        zyx = read_dense_zyx(zyx_file(zyx_dir, r.id));
    }
    if (!r.gt.empty()) {
        gt = decode_ground_truth(read_image(resolve_path(r.gt, base)));
        if (std::all_of(gt->data.begin(), gt->data.end(), [](std::uint8_t l) { return l == kIgnoreLabel; })) {
            warn("frame " + r.id + ": ground truth has no labeled pixel, skipped");
            return std::nullopt;
        }
    } else if (need_gt) {
        warn("frame " + r.id + ": no ground truth, skipped");
        return std::nullopt;
    }
    Sample s = make_sample(r.id, r.category, rgb ? &*rgb : nullptr, zyx ? &*zyx : nullptr, gt ? &*gt : nullptr);
    if (pad_canvas) {
        if (!s.rgb.empty()) {
            s.rgb = pad_spatial(s.rgb, kCanvasHeight, kCanvasWidth);
        }
        if (!s.zyx.empty()) {
            s.zyx = pad_spatial(s.zyx, kCanvasHeight, kCanvasWidth);
        }
        if (!s.labels.data.empty()) {
            s.labels = pad_to_canvas(s.labels);
        }
    }
    return s;
}

std::vector<Sample> load_samples(const std::vector<FrameRecord>& frames, const fs::path& base,
                                 const fs::path& zyx_dir, const Needs& needs, bool pad_canvas)
{
    std::vector<Sample> out;
    for (const FrameRecord& r : frames) {
        if (auto s = load_sample(r, base, zyx_dir, needs, true, pad_canvas)) {
            out.push_back(std::move(*s));
        }
    }
    return out;
}

fs::path default_zyx_dir(const fs::path& manifest)
{
    return manifest.parent_path() / "zyx";
}

// ---- subcommands

int cmd_synth(const fs::path& out, int frames, const SyntheticOptions& opts)
{
    const fs::path manifest = write_synthetic_dataset(out, frames, opts);
    std::cout << "wrote " << frames << " frames, manifest " << manifest.string() << "\n";
    return 0;
}

int cmd_preprocess(const fs::path& manifest, const fs::path& out_dir, int window, double power)
{
    const DensifyOptions dopts{window, power};
    if (window < 3 || window % 2 == 0 || !(power > 0.0)) {
        throw DomainError("preprocess: window must be odd and >= 3, power positive");
    }
    const std::vector<FrameRecord> frames = read_manifest(manifest);
    const fs::path base = manifest.parent_path();
    fs::create_directories(out_dir);
    std::ostringstream report;
    report << "# frame\tpoints_in\tpoints_kept\tbehind_camera\toutside_image\tmasked_pixels\tfill_rate\n";
    int failed = 0;
    for (const FrameRecord& r : frames) {
        try {
            if (r.cloud.empty() || r.calib.empty()) {
                throw IoError("frame has no point cloud or calibration");
            }
            const CalibrationSet calib =
                read_calibration(resolve_path(r.calib, base), CalibrationKeys{"P" + std::to_string(r.camera)});
            calib.validate();
            const PointCloud cloud = read_cloud(resolve_path(r.cloud, base));
            const std::string& img_path = !r.rgb.empty() ? r.rgb : r.gt;
            if (img_path.empty()) {
                throw IoError("frame has no image to take the size from");
            }
            const Image8 img = read_image(resolve_path(img_path, base));
            ProjectionStats stats;
            const SparseZyxImage sparse =
                project_cloud(cloud, calib, img.width, img.height, CoordinateFrame::lidar, &stats);
            const DenseZyxImage dense = densify(sparse, dopts);
            write_dense_zyx(dense, zyx_file(out_dir, r.id));
            const double fill = dense.fill_rate();
            if (fill == 0.0) {
                warn("frame " + r.id + ": no point projects into the image, fill rate 0");
            }
            char line[256];
            std::snprintf(line, sizeof line, "%s\t%zu\t%zu\t%zu\t%zu\t%zu\t%.6f\n", r.id.c_str(), stats.points_in,
                          stats.points_kept, stats.behind_camera, stats.outside_image, stats.masked_pixels, fill);
            report << line;
            std::snprintf(line, sizeof line, "frame=%s points_in=%zu points_kept=%zu fill_rate=%.6f\n", r.id.c_str(),
                          stats.points_in, stats.points_kept, fill);
            std::cout << line;
        } catch (const Error& e) {
            ++failed;
            warn("frame " + r.id + ": " + e.what());
            report << r.id << "\terror\t" << e.what() << "\n";
        }
    }
    std::ofstream(out_dir / "preprocess_report.tsv") << report.str();
    std::cout << "preprocessed " << frames.size() - failed << " of " << frames.size() << " frames into "
              << out_dir.string() << "\n";
    return 0;
}

void print_param_identities(const NetworkSpec& spec)
{
    const std::size_t base = build_base(3, spec).parameter_count();
    const std::size_t early = build_early(spec).parameter_count();
    const std::size_t late = build_late(spec).parameter_count();
    const std::size_t cross = build_cross(spec).parameter_count();
    const long c = spec.num_classes;
    std::cout << "params base=" << base << " early=" << early << " late=" << late << " cross=" << cross << "\n";
    std::cout << "identity early-base=1536 " << (early - base == 1536 ? "holds" : "violated") << "\n";
    std::cout << "identity cross=2*base+40 " << (cross == 2 * base + 40 ? "holds" : "violated") << "\n";
    std::cout << "identity late=2*base-C " << (static_cast<long>(late) == 2 * static_cast<long>(base) - c ? "holds" : "violated")
              << "\n";
}

int cmd_train(const fs::path& manifest, const std::string& mode_name, const RunConfig& cfg,
              std::optional<fs::path> val_manifest, fs::path zyx_dir, const fs::path& out_dir)
{
    const ModeChoice mc = parse_mode(mode_name);
    const NetworkSpec spec = default_spec(cfg.feature_maps, cfg.num_classes, 3);
    RngState init_rng(cfg.train.seed);
    FusionNetwork net = build_network(mc.mode, mc.modality, spec, init_rng);
    const Needs needs = needs_of(net);
    if (zyx_dir.empty()) {
        zyx_dir = default_zyx_dir(manifest);
    }

    const std::vector<FrameRecord> train_frames = read_manifest(manifest);
    const std::vector<FrameRecord> val_frames = val_manifest ? read_manifest(*val_manifest) : train_frames;
    const fs::path val_zyx = val_manifest ? default_zyx_dir(*val_manifest) : zyx_dir;
    check_modalities(train_frames, needs, zyx_dir, mode_name);
    check_modalities(val_frames, needs, val_zyx, mode_name);
    cfg.train.validate();

    const std::vector<Sample> train_set =
        load_samples(train_frames, manifest.parent_path(), zyx_dir, needs, cfg.pad_canvas);
    const std::vector<Sample> val_set = load_samples(
        val_frames, (val_manifest ? *val_manifest : manifest).parent_path(), val_zyx, needs, cfg.pad_canvas);

    fs::create_directories(out_dir);
    TrainConfig tc = cfg.train;
    tc.checkpoint_path = out_dir / "best.ckpt";
    std::ofstream(out_dir / "config.txt") << dump_config(cfg);
    net.metadata()["mode"] = mode_name;
    std::ofstream log(out_dir / "train.log");
    const TrainResult res = train(net, train_set, val_set, tc, &log);

    std::cout << "mode=" << mode_name << " parameters=" << net.parameter_count() << "\n";
    if (mc.mode == FusionMode::cross) {
        const std::size_t base = build_base(3, spec).parameter_count();
        std::cout << "cross parameters " << net.parameter_count() << " = 2*" << base << "+40 "
                  << (net.parameter_count() == 2 * base + 40 ? "holds" : "violated") << "\n";
    }
    if (res.log.empty()) {
        std::cout << "no iterations run, no checkpoint written\n";
        return 0;
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "final_val_maxf=%.6f best_val_maxf=%.6f best_iteration=%ld\n",
                  res.log.back().val_maxf.value_or(res.best_maxf), res.best_maxf, res.best_iteration + 1);
    std::cout << buf << "checkpoint " << tc.checkpoint_path.string() << "\n";
    return 0;
}

int cmd_eval(const fs::path& ckpt, const fs::path& manifest, fs::path zyx_dir, int num_thresholds,
             const std::optional<fs::path>& report_path)
{
    FusionNetwork net = load_checkpoint(ckpt);
    const Needs needs = needs_of(net);
    if (zyx_dir.empty()) {
        zyx_dir = default_zyx_dir(manifest);
    }
    const std::vector<FrameRecord> frames = read_manifest(manifest);
    check_modalities(frames, needs, zyx_dir, mode_label(net));

    std::map<std::string, PrCurve> by_category;
    std::map<std::string, std::size_t> frame_count;
    PrCurve all;
    all.thresholds = uniform_thresholds(num_thresholds);
    std::size_t used = 0;
    for (const FrameRecord& r : frames) {
        const std::optional<Sample> s = load_sample(r, manifest.parent_path(), zyx_dir, needs, true, false);
        if (!s) {
            continue;
        }
        const std::vector<double> conf = road_confidence(net, *s);
        PrCurve& cat = by_category[r.category];
        if (cat.thresholds.empty()) {
            cat.thresholds = all.thresholds;
        }
        accumulate(cat, conf, s->labels.data);
        accumulate(all, conf, s->labels.data);
        frame_count[r.category] += 1;
        ++used;
    }
    if (used == 0) {
        throw MetricError("eval: no frame with usable ground truth");
    }
    std::vector<MetricsSummary> rows;
    for (const auto& [name, curve] : by_category) {
        if (curve.positives() == 0) {
            warn("category " + name + ": no road pixels, metrics undefined");
            continue;
        }
        rows.push_back(summarize(curve, name, frame_count[name]));
    }
    if (by_category.size() > 1 || rows.empty()) {
        if (all.positives() == 0) {
            throw MetricError("eval: no road pixels in any ground truth");
        }
        rows.push_back(summarize(all, "all", used));
    }
    const std::string text = format_report(rows);
    std::cout << text;
    if (report_path) {
        std::ofstream os(*report_path);
        if (!os) {
            throw IoError("cannot write report " + report_path->string());
        }
        os << text;
    }
    return 0;
}

int cmd_infer(const fs::path& ckpt, const fs::path& manifest, const std::string& frame_id, fs::path zyx_dir,
              const fs::path& out_dir, std::optional<double> threshold)
{
    FusionNetwork net = load_checkpoint(ckpt);
    const Needs needs = needs_of(net);
    if (zyx_dir.empty()) {
        zyx_dir = default_zyx_dir(manifest);
    }
    const std::vector<FrameRecord> frames = read_manifest(manifest);
    const auto it = std::find_if(frames.begin(), frames.end(), [&](const FrameRecord& r) { return r.id == frame_id; });
    if (it == frames.end()) {
        throw ContractError("frame " + frame_id + " is not in " + manifest.string());
    }
    check_modalities({*it}, needs, zyx_dir, mode_label(net));
    const fs::path base = manifest.parent_path();
    FrameRecord no_gt = *it;
    no_gt.gt.clear();
    const Sample s = *load_sample(no_gt, base, zyx_dir, needs, false, false);
    const std::vector<double> conf = road_confidence(net, s);

    if (!threshold) {
        const auto m = net.metadata().find("val_threshold");
        threshold = m != net.metadata().end() ? std::stod(m->second) : 0.5;
    }
    fs::create_directories(out_dir);
    const fs::path conf_path = out_dir / (frame_id + "_confidence.png");
    const fs::path bin_path = out_dir / (frame_id + "_binary.png");
    write_segmentation(conf, s.width(), s.height(), conf_path, threshold, bin_path);
    std::cout << "wrote " << conf_path.string() << "\nwrote " << bin_path.string() << "\n";
    if (it->gt.empty()) {
        std::cout << "no ground truth for " << frame_id << ", overlay skipped\n";
        return 0;
    }
    if (it->rgb.empty()) {
        warn("frame " + frame_id + ": no camera image, overlay skipped");
        return 0;
    }
    const Image8 rgb = read_image(resolve_path(it->rgb, base));
    const LabelMap gt = decode_ground_truth(read_image(resolve_path(it->gt, base)));
    const fs::path overlay_path = out_dir / (frame_id + "_overlay.png");
    write_image(overlay_image(rgb, conf, gt, *threshold), overlay_path);
    std::cout << "wrote " << overlay_path.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"LIDAR-camera road segmentation with cross-fusion FCNs"};
    app.require_subcommand(1);

    // synth
    std::string synth_out;
    int synth_frames = 5;
    SyntheticOptions synth_opts;
    auto* synth = app.add_subcommand("synth", "Write a synthetic multimodal data set and manifest");
    synth->add_option("out", synth_out, "Output directory")->required();
    synth->add_option("--frames", synth_frames, "Number of frames")->check(CLI::PositiveNumber);
    synth->add_option("--width", synth_opts.width, "Image width");
    synth->add_option("--height", synth_opts.height, "Image height");
    synth->add_option("--seed", synth_opts.seed, "Scene seed");

    // preprocess
    std::string pre_manifest, pre_out;
    int pre_window = 11;
    double pre_power = 2.0;
    auto* pre = app.add_subcommand("preprocess", "Project and densify point clouds into ZYX images");
    pre->add_option("manifest", pre_manifest, "Frame manifest")->required();
    pre->add_option("out_dir", pre_out, "Output directory (default: <manifest dir>/zyx)");
    pre->add_option("--window", pre_window, "Densification window (odd)");
    pre->add_option("--power", pre_power, "Inverse-distance power");

    // train
    std::string tr_manifest, tr_mode = "cross", tr_config = "paper", tr_val, tr_zyx, tr_out = "run";
    std::optional<long> tr_iterations, tr_eval_every;
    std::optional<std::uint64_t> tr_seed;
    std::optional<double> tr_eta0;
    auto* trn = app.add_subcommand("train", "Train a network and keep the best checkpoint");
    trn->add_option("manifest", tr_manifest, "Training manifest")->required();
    trn->add_option("--mode", tr_mode, "zyx, rgb, early, late or cross")
        ->check(CLI::IsMember({"zyx", "rgb", "early", "late", "cross"}));
    trn->add_option("--config", tr_config, "Preset (toy, paper) or key = value file");
    trn->add_option("--val", tr_val, "Validation manifest (default: training manifest)");
    trn->add_option("--zyx-dir", tr_zyx, "Preprocessed ZYX directory (default: <manifest dir>/zyx)");
    trn->add_option("--out", tr_out, "Run directory for checkpoint, log and config");
    trn->add_option("--iterations", tr_iterations, "Override iterations");
    trn->add_option("--eval-every", tr_eval_every, "Override eval_every");
    trn->add_option("--seed", tr_seed, "Override seed");
    trn->add_option("--eta0", tr_eta0, "Override initial learning rate");

    // eval
    std::string ev_ckpt, ev_manifest, ev_zyx, ev_report;
    int ev_thresholds = 255;
    auto* ev = app.add_subcommand("eval", "Pixel-wise metrics per category");
    ev->add_option("checkpoint", ev_ckpt, "Checkpoint file")->required();
    ev->add_option("manifest", ev_manifest, "Frame manifest")->required();
    ev->add_option("--zyx-dir", ev_zyx, "Preprocessed ZYX directory");
    ev->add_option("--thresholds", ev_thresholds, "Number of uniform thresholds")->check(CLI::Range(2, 1000000));
    ev->add_option("--report", ev_report, "Also write the report to this file");

    // infer
    std::string in_ckpt, in_manifest, in_frame, in_zyx, in_out = ".";
    std::optional<double> in_threshold;
    auto* inf = app.add_subcommand("infer", "Confidence image, binary mask and overlay for one frame");
    inf->add_option("checkpoint", in_ckpt, "Checkpoint file")->required();
    inf->add_option("manifest", in_manifest, "Frame manifest")->required();
    inf->add_option("frame", in_frame, "Frame id")->required();
    inf->add_option("--out", in_out, "Output directory");
    inf->add_option("--zyx-dir", in_zyx, "Preprocessed ZYX directory");
    inf->add_option("--threshold", in_threshold, "Binarization threshold (default: checkpoint MaxF threshold)");

    // params
    int pa_d = 32, pa_c = 2;
    auto* pa = app.add_subcommand("params", "Parameter counts of every mode");
    pa->add_option("--feature-maps", pa_d, "First-layer feature maps D");
    pa->add_option("--classes", pa_c, "Output classes C");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            return cmd_synth(synth_out, synth_frames, synth_opts);
        }
        if (*pre) {
            const fs::path out = pre_out.empty() ? default_zyx_dir(pre_manifest) : fs::path(pre_out);
            return cmd_preprocess(pre_manifest, out, pre_window, pre_power);
        }
        if (*trn) {
            RunConfig cfg = load_config(tr_config);
            if (tr_iterations) cfg.train.iterations = *tr_iterations;
            if (tr_eval_every) cfg.train.eval_every = *tr_eval_every;
            if (tr_seed) cfg.train.seed = *tr_seed;
            if (tr_eta0) cfg.train.eta0 = *tr_eta0;
            return cmd_train(tr_manifest, tr_mode, cfg, tr_val.empty() ? std::nullopt : std::optional<fs::path>(tr_val),
                             tr_zyx, tr_out);
        }
        if (*ev) {
            return cmd_eval(ev_ckpt, ev_manifest, ev_zyx, ev_thresholds,
                            ev_report.empty() ? std::nullopt : std::optional<fs::path>(ev_report));
        }
        if (*inf) {
            return cmd_infer(in_ckpt, in_manifest, in_frame, in_zyx, in_out, in_threshold);
        }
        if (*pa) {
            print_param_identities(default_spec(pa_d, pa_c, 3));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
