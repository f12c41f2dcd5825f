#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mbocc/ablate.hpp"
#include "mbocc/configfile.hpp"
#include "mbocc/cost.hpp"
#include "mbocc/dataset.hpp"
#include "mbocc/evalm.hpp"
#include "mbocc/io.hpp"
#include "mbocc/manifest.hpp"
#include "mbocc/net/train.hpp"
#include "mbocc/rng.hpp"
#include "mbocc/synth.hpp"
#include "mbocc/warp.hpp"

namespace fs = std::filesystem;
using namespace mbocc;

namespace {

// MBOCC_OUT_ROOT prefixes every relative output path; MBOCC_THREADS caps the
// default worker count.
std::string resolve_out(const std::string& path) {
    const char* root = std::getenv("MBOCC_OUT_ROOT");
    if (!root || *root == '\0' || fs::path(path).is_absolute()) return path;
    return (fs::path(root) / path).string();
}

int default_threads() {
    if (const char* env = std::getenv("MBOCC_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

SceneSpec scene_from_file(const std::string& path) {
    KeyValueFile kv = KeyValueFile::parse_file(path);
    SceneSpec spec;
    auto size = kv.get_tokens("size");
    if (size.size() != 2) throw std::runtime_error("scene: size needs two values");
    spec.width = std::stoi(size[0]);
    spec.height = std::stoi(size[1]);
    if (kv.has("bg_motion")) {
        auto bg = kv.get_tokens("bg_motion");
        if (bg.size() != 2) throw std::runtime_error("scene: bg_motion needs two values");
        spec.bg_tx = std::stoi(bg[0]);
        spec.bg_ty = std::stoi(bg[1]);
    }
    spec.noise_sigma = kv.get_real("noise_sigma", 0.0);
    auto parse_shape = [](const std::vector<std::string>& t, ShapeKind kind) {
        if (t.size() != 7)
            throw std::runtime_error("scene: shape needs 7 values: x y w h depth tx ty");
        ShapeSpec s;
        s.kind = kind;
        s.x = std::stod(t[0]);
        s.y = std::stod(t[1]);
        s.w = std::stod(t[2]);
        s.h = std::stod(t[3]);
        s.depth = std::stoi(t[4]);
        s.tx = std::stoi(t[5]);
        s.ty = std::stoi(t[6]);
        return s;
    };
    for (const auto& t : kv.all_occurrences("rect"))
        spec.shapes.push_back(parse_shape(t, ShapeKind::Rect));
    for (const auto& t : kv.all_occurrences("ellipse"))
        spec.shapes.push_back(parse_shape(t, ShapeKind::Ellipse));
    return spec;
}

net::NetConfig config_from_file(const std::string& path) {
    if (path.empty()) return net::NetConfig{};
    return net::net_config_from_kv(KeyValueFile::parse_file(path));
}

void echo_config(RunManifest& m, const net::NetConfig& cfg) {
    for (const auto& [k, v] : cfg.echo()) m.set(k, v);
}

std::vector<Real> parse_real_list(const std::string& csv) {
    std::vector<Real> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoull(tok));
    return out;
}

void write_derived_maps(const std::string& dir, const SamplePair& s) {
    auto at = [&](const char* name) { return (fs::path(dir) / name).string(); };
    io::save_map(at("occ_fb_1.bin"), occ_from_flow(s.flow12, s.flow21, 0.5));
    io::save_map(at("occ_fb_2.bin"), occ_from_flow(s.flow21, s.flow12, 0.5));
    io::save_map(at("mb_grad_1.bin"), mb_from_flow_gradient(s.flow12, 0.5));
    io::save_map(at("mb_grad_2.bin"), mb_from_flow_gradient(s.flow21, 0.5));
}

int cmd_gen(const std::string& spec_path, std::uint64_t seed, const std::string& out_raw,
            int count, int width, int height, double noise, bool previews, bool derived) {
    std::string out = resolve_out(out_raw);
    fs::create_directories(out);
    RunManifest manifest("gen");
    manifest.seed = seed;
    manifest.set("count", static_cast<long>(count));
    manifest.set("noise_sigma", noise);
    ScopedTimer timer(manifest, "generate");

    if (count <= 1 && !spec_path.empty()) {
        SceneSpec spec = scene_from_file(spec_path);
        manifest.set("spec", spec_path);
        SamplePair s = generate(spec, seed);
        data::save_sample(out, s, true);
        if (derived) write_derived_maps(out, s);
        manifest.add_output(out);
    } else {
        if (width <= 0 || height <= 0)
            throw std::runtime_error("gen: dataset mode needs --size WxH");
        manifest.set("width", static_cast<long>(width));
        manifest.set("height", static_cast<long>(height));
        std::mt19937_64 rng(seed);
        for (int i = 0; i < count; ++i) {
            SceneSpec spec = random_scene(width, height, rng, 3, noise);
            SamplePair s = generate(spec, rng());
            std::string dir = (fs::path(out) / data::sample_dir_name(i)).string();
            data::save_sample(dir, s, previews);
            if (derived) write_derived_maps(dir, s);
        }
        manifest.add_output(out);
    }
    manifest.write((fs::path(out) / "manifest.json").string());
    std::cout << "gen: wrote " << std::max(count, 1) << " sample(s) to " << out << "\n";
    return 0;
}

int cmd_warp(const std::string& mode, const std::string& map_path, const std::string& flow_path,
             const std::string& out_raw, const std::string& coverage_raw,
             const std::string& mask_raw) {
    std::string out = resolve_out(out_raw);
    ScalarMap src = io::load_map(map_path);
    FlowField flow = io::load_flow(flow_path,
                                   mode == "direct" ? FlowDir::OneToTwo : FlowDir::TwoToOne);
    RunManifest manifest("warp");
    manifest.set("mode", mode);
    manifest.set("map", map_path);
    manifest.set("flow", flow_path);
    if (mode == "direct") {
        MaskedMap d = direct_warp(src, flow);
        io::save_map(out, d.map);
        manifest.add_output(out);
        if (!coverage_raw.empty()) {
            ScalarMap cov(d.map.width, d.map.height, 0.0, RangeTag::NonNeg);
            for (std::size_t i = 0; i < cov.v.size(); ++i) cov.v[i] = d.coverage[i];
            io::save_map(resolve_out(coverage_raw), cov);
            manifest.add_output(resolve_out(coverage_raw));
        }
        if (!mask_raw.empty()) {
            ScalarMap mask(d.map.width, d.map.height, 0.0, RangeTag::Unit);
            for (std::size_t i = 0; i < mask.v.size(); ++i) mask.v[i] = d.defined_mask[i];
            io::save_map(resolve_out(mask_raw), mask);
            manifest.add_output(resolve_out(mask_raw));
        }
    } else if (mode == "reverse") {
        io::save_map(out, reverse_warp(src, flow));
        manifest.add_output(out);
    } else {
        throw std::runtime_error("warp: mode must be direct or reverse");
    }
    manifest.write(out + ".manifest.json");
    std::cout << "warp: " << mode << " -> " << out << "\n";
    return 0;
}

int cmd_costblock(const std::string& fa_path, const std::string& fb_path,
                  const std::string& flow_path, int radius, const std::string& out_raw) {
    std::string out = resolve_out(out_raw);
    FeatureMap fa = io::load_features(fa_path);
    FeatureMap fb = io::load_features(fb_path);
    FlowField flow = io::load_flow(flow_path, FlowDir::OneToTwo);
    ScalarMap block = cost_block(fa, fb, flow, radius);
    io::save_map(out, block);
    RunManifest manifest("costblock");
    manifest.set("fa", fa_path);
    manifest.set("fb", fb_path);
    manifest.set("flow", flow_path);
    manifest.set("radius", static_cast<long>(radius));
    manifest.add_output(out);
    manifest.write(out + ".manifest.json");
    std::cout << "costblock: radius " << radius << " -> " << out << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir, std::uint64_t seed,
              long steps, long eval_every, const std::string& out_raw) {
    std::string out = resolve_out(out_raw);
    fs::create_directories(out);
    net::NetConfig cfg = config_from_file(config_path);
    if (!config_path.empty()) {
        KeyValueFile kv = KeyValueFile::parse_file(config_path);
        steps = kv.get_int("steps", steps);
    }
    std::vector<SamplePair> dataset = data::load_dataset(data_dir);
    std::vector<const SamplePair*> ptrs;
    for (const auto& s : dataset) ptrs.push_back(&s);

    RunManifest manifest("train");
    manifest.seed = seed;
    echo_config(manifest, cfg);
    manifest.set("steps", steps);
    manifest.set("data", data_dir);
    manifest.set("samples", static_cast<long>(dataset.size()));

    net::TrainResult result;
    {
        ScopedTimer timer(manifest, "train");
        result = net::train(
            cfg, ptrs, steps, seed,
            [](long step, Real loss) {
                if (step % 100 == 0) std::cout << "step " << step << " loss " << loss << "\n";
            },
            eval_every,
            [&](long step, const net::ParamStore& params) {
                net::ParamStore snapshot = params;  // model_forward registers leaves
                net::Tape tape;
                net::ForwardOutput probe =
                    net::model_forward(tape, cfg, snapshot, dataset.front(), false);
                std::cout << "eval @" << step << ": occ1 f1 "
                          << f1_occ(probe.pred.occ_fused[0], dataset.front().occ1) << ", mb1 f1 "
                          << f1_occ(probe.pred.mb_fused[0], dataset.front().mb1) << "\n";
            });
    }
    net::save_checkpoint(out, cfg, result.params);
    {
        nlohmann::json j;
        j["loss_trace"] = result.loss_trace;
        j["diverged"] = result.diverged;
        j["diverged_at"] = result.diverged_at;
        std::ofstream os(fs::path(out) / "loss.json");
        os << j.dump(2) << "\n";
    }
    manifest.set("diverged", result.diverged ? "true" : "false");
    manifest.add_output(out);
    manifest.write((fs::path(out) / "manifest.json").string());
    if (result.diverged) {
        std::cerr << "train: diverged at step " << result.diverged_at
                  << "; checkpoint holds the last finite parameters\n";
        return 3;
    }
    std::cout << "train: " << steps << " steps, final loss " << result.loss_trace.back()
              << " -> " << out << "\n";
    return 0;
}

int cmd_infer(const std::string& ckpt, const std::string& pair_dir, const std::string& out_raw,
              bool scales) {
    std::string out = resolve_out(out_raw);
    fs::create_directories(out);
    auto [cfg, params] = net::load_checkpoint(ckpt);
    SamplePair s = data::load_sample(pair_dir);
    net::Tape tape;
    net::ForwardOutput fwd = net::model_forward(tape, cfg, params, s, false);

    RunManifest manifest("infer");
    echo_config(manifest, cfg);
    manifest.set("ckpt", ckpt);
    manifest.set("pair", pair_dir);
    auto save = [&](const std::string& name, const ScalarMap& m) {
        std::string path = (fs::path(out) / name).string();
        io::save_map(path, m);
        io::write_png_preview(path.substr(0, path.size() - 4) + ".png", io::to_raster(m));
        manifest.add_output(path);
    };
    for (int dir = 0; dir < 2; ++dir) {
        std::string d = std::to_string(dir + 1);
        save("mb" + d + "_pred.bin", fwd.pred.mb_fused[dir]);
        save("occ" + d + "_pred.bin", fwd.pred.occ_fused[dir]);
        if (fwd.pred.has_attention) save("att" + d + "_pred.bin", fwd.pred.att_fused[dir]);
        if (scales)
            for (int l = 0; l < cfg.levels; ++l) {
                save("mb" + d + "_s" + std::to_string(l) + ".bin", fwd.pred.mb_scale[dir][l]);
                save("occ" + d + "_s" + std::to_string(l) + ".bin", fwd.pred.occ_scale[dir][l]);
            }
    }
    manifest.write((fs::path(out) / "manifest.json").string());
    std::cout << "infer: predictions written to " << out << "\n";
    return 0;
}

nlohmann::json eval_one(const std::string& pred_dir, const std::string& gt_dir,
                        const std::vector<Real>& strat_edges) {
    SamplePair gt = data::load_sample(gt_dir);
    Real tol = default_match_tol(gt.occ1.width, gt.occ1.height);
    nlohmann::json j;
    for (int dir = 0; dir < 2; ++dir) {
        std::string d = std::to_string(dir + 1);
        ScalarMap occ_pred =
            io::load_map((fs::path(pred_dir) / ("occ" + d + "_pred.bin")).string());
        ScalarMap mb_pred = io::load_map((fs::path(pred_dir) / ("mb" + d + "_pred.bin")).string());
        const ScalarMap& occ_gt = dir == 0 ? gt.occ1 : gt.occ2;
        const ScalarMap& mb_gt = dir == 0 ? gt.mb1 : gt.mb2;

        nlohmann::json side;
        side["f1_occ"] = f1_occ(occ_pred, occ_gt);
        auto curve = map_mb(mb_pred, mb_gt, tol);
        if (curve) {
            side["mb_ap"] = curve->average_precision;
            side["pr"] = {{"thresholds", curve->thresholds},
                          {"precision", curve->precision},
                          {"recall", curve->recall}};
        } else {
            side["mb_ap"] = nullptr;
            side["warning"] = "empty MB ground truth; AP excluded";
        }
        ScalarMap strat(occ_gt.width, occ_gt.height, 0.0, RangeTag::Unit);
        for (std::size_t i = 0; i < strat.v.size(); ++i)
            strat.v[i] = (occ_gt.v[i] >= 0.5 || mb_gt.v[i] >= 0.5) ? 1.0 : 0.0;
        nlohmann::json bins = nlohmann::json::array();
        for (const auto& bin : stratified(occ_pred, occ_gt, strat, strat_edges)) {
            nlohmann::json b;
            b["lo"] = bin.lo;
            b["hi"] = bin.hi;
            b["count"] = bin.count;
            if (bin.fpr) b["fpr"] = *bin.fpr;
            b["accuracy"] = bin.accuracy;
            bins.push_back(b);
        }
        side["stratified"] = bins;
        j["dir" + d] = side;
    }
    return j;
}

void plot_pr_curve(const std::string& path, const PRCurve& curve);

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& report_raw,
             const std::string& plots_raw, const std::string& strat_edges_csv) {
    std::string report_path = resolve_out(report_raw);
    std::vector<Real> edges = parse_real_list(strat_edges_csv);
    nlohmann::json report;
    RunManifest manifest("eval");
    manifest.set("pred", pred_dir);
    manifest.set("gt", gt_dir);

    bool dataset_mode = fs::exists(fs::path(pred_dir) / "sample_0000") ||
                        !fs::exists(fs::path(pred_dir) / "occ1_pred.bin");
    if (dataset_mode) {
        auto pred_dirs = data::list_samples(pred_dir);
        auto gt_dirs = data::list_samples(gt_dir);
        if (pred_dirs.size() != gt_dirs.size())
            throw std::runtime_error("eval: prediction/GT sample counts differ");
        nlohmann::json per = nlohmann::json::array();
        double f1_acc = 0.0, ap_acc = 0.0;
        long f1_n = 0, ap_n = 0, excluded = 0;
        for (std::size_t i = 0; i < pred_dirs.size(); ++i) {
            nlohmann::json one = eval_one(pred_dirs[i], gt_dirs[i], edges);
            for (const char* d : {"dir1", "dir2"}) {
                f1_acc += one[d]["f1_occ"].get<double>();
                ++f1_n;
                if (one[d]["mb_ap"].is_null())
                    ++excluded;
                else {
                    ap_acc += one[d]["mb_ap"].get<double>();
                    ++ap_n;
                }
            }
            one["sample"] = fs::path(pred_dirs[i]).filename().string();
            per.push_back(one);
        }
        report["samples"] = per;
        report["mean_f1_occ"] = f1_n ? f1_acc / f1_n : 0.0;
        report["mb_map"] = ap_n ? ap_acc / ap_n : 0.0;
        report["map_excluded"] = excluded;
        if (excluded > 0)
            std::cerr << "eval: warning: " << excluded
                      << " direction(s) had empty MB ground truth; excluded from mAP\n";
    } else {
        report = eval_one(pred_dir, gt_dir, edges);
        if (!plots_raw.empty()) {
            std::string plots = resolve_out(plots_raw);
            fs::create_directories(plots);
            for (const char* d : {"dir1", "dir2"}) {
                if (!report[d].contains("pr")) continue;
                PRCurve curve;
                curve.thresholds = report[d]["pr"]["thresholds"].get<std::vector<Real>>();
                curve.precision = report[d]["pr"]["precision"].get<std::vector<Real>>();
                curve.recall = report[d]["pr"]["recall"].get<std::vector<Real>>();
                plot_pr_curve((fs::path(plots) / (std::string("pr_") + d + ".png")).string(),
                              curve);
                manifest.add_output(plots);
            }
        }
    }
    std::ofstream os(report_path);
    if (!os) throw std::runtime_error("eval: cannot open " + report_path);
    os << report.dump(2) << "\n";
    manifest.add_output(report_path);
    manifest.write(report_path + ".manifest.json");
    std::cout << "eval: report written to " << report_path << "\n";
    return 0;
}

// Minimal line plot of the PR curve on a white canvas with axes.
void plot_pr_curve(const std::string& path, const PRCurve& curve) {
    const int S = 256, M = 24;
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(S) * S * 3, 255);
    auto put = [&](int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        if (x < 0 || x >= S || y < 0 || y >= S) return;
        std::size_t i = (static_cast<std::size_t>(y) * S + x) * 3;
        rgb[i] = r;
        rgb[i + 1] = g;
        rgb[i + 2] = b;
    };
    for (int i = M; i < S - M; ++i) {
        put(i, S - M, 0, 0, 0);
        put(M, i, 0, 0, 0);
    }
    auto px = [&](Real recall) { return M + static_cast<int>(recall * (S - 2 * M)); };
    auto py = [&](Real prec) { return S - M - static_cast<int>(prec * (S - 2 * M)); };
    std::vector<std::pair<Real, Real>> pts;
    for (std::size_t i = 0; i < curve.recall.size(); ++i)
        pts.push_back({curve.recall[i], curve.precision[i]});
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 1; i < pts.size(); ++i) {
        int x0 = px(pts[i - 1].first), y0 = py(pts[i - 1].second);
        int x1 = px(pts[i].first), y1 = py(pts[i].second);
        int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0)) + 1;
        for (int sstep = 0; sstep <= steps; ++sstep) {
            Real t = static_cast<Real>(sstep) / steps;
            put(static_cast<int>(x0 + t * (x1 - x0)), static_cast<int>(y0 + t * (y1 - y0)), 200,
                30, 30);
        }
    }
    for (const auto& [r, p] : pts)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) put(px(r) + dx, py(p) + dy, 30, 30, 200);
    io::write_png_rgb8(path, S, S, rgb);
}

int cmd_stats(const std::string& mb_path, const std::string& occ_path, const std::string& radii_csv,
              const std::string& json_out) {
    ScalarMap mb = io::load_map(mb_path, RangeTag::Unit);
    ScalarMap occ = io::load_map(occ_path, RangeTag::Unit);
    std::vector<int> radii;
    for (Real r : parse_real_list(radii_csv)) radii.push_back(static_cast<int>(r));
    auto fractions = adjacency_stats(mb, occ, radii);
    std::cout << "radius  fraction_of_MB_pixels_within_radius_of_Occ_boundary\n";
    nlohmann::json j = nlohmann::json::array();
    for (std::size_t i = 0; i < radii.size(); ++i) {
        std::cout << radii[i] << "       ";
        if (fractions[i]) {
            std::cout << *fractions[i] << "\n";
            j.push_back({{"radius", radii[i]}, {"fraction", *fractions[i]}});
        } else {
            std::cout << "absent (no MB pixels)\n";
            j.push_back({{"radius", radii[i]}, {"fraction", nullptr}});
        }
    }
    if (!json_out.empty()) {
        std::ofstream os(resolve_out(json_out));
        os << j.dump(2) << "\n";
    }
    return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& data_dir,
               const std::string& seeds_csv, long steps, double eval_frac,
               const std::string& out_raw, int parallel) {
    std::string out = resolve_out(out_raw);
    fs::create_directories(out);
    net::NetConfig base = config_from_file(config_path);
    std::vector<std::uint64_t> seeds = parse_seed_list(seeds_csv);

    std::vector<SamplePair> all = data::load_dataset(data_dir);
    if (all.size() < 2) throw std::runtime_error("ablate: need at least 2 samples");
    std::size_t n_eval = std::max<std::size_t>(1, static_cast<std::size_t>(all.size() * eval_frac));
    std::vector<SamplePair> eval_set(all.end() - n_eval, all.end());
    std::vector<SamplePair> train_set(all.begin(), all.end() - n_eval);

    RunManifest manifest("ablate");
    echo_config(manifest, base);
    manifest.set("data", data_dir);
    manifest.set("steps", steps);
    manifest.set("seeds", seeds_csv);
    manifest.set("train_samples", static_cast<long>(train_set.size()));
    manifest.set("eval_samples", static_cast<long>(eval_set.size()));
    manifest.set("parallel", static_cast<long>(parallel));

    AblateReport report;
    {
        ScopedTimer timer(manifest, "sweep");
        report = run_ablation(base, train_set, eval_set, seeds, steps, parallel,
                              [](const AblateRun& r) {
                                  std::cout << r.components << " " << r.order << " " << r.tasks
                                            << " seed " << r.seed << ": occ_f1 "
                                            << r.metrics.occ_f1 << " mb_map " << r.metrics.mb_map
                                            << (r.diverged ? "  [diverged]" : "") << " ("
                                            << r.seconds << " s)\n";
                              });
    }
    {
        std::ofstream os(fs::path(out) / "results.json");
        os << report.json() << "\n";
    }
    {
        std::ofstream os(fs::path(out) / "tables.md");
        os << report.markdown();
    }
    manifest.add_output((fs::path(out) / "results.json").string());
    manifest.add_output((fs::path(out) / "tables.md").string());
    manifest.write((fs::path(out) / "manifest.json").string());
    for (const std::string& line : report.expectation_lines()) std::cout << line << "\n";
    std::cout << "ablate: " << report.runs.size() << " runs -> " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mbocc: joint motion-boundary and occlusion detection toolkit"};
    app.require_subcommand(1);

    // gen
    std::string g_spec, g_out = "out";
    std::uint64_t g_seed = 0;
    int g_count = 1, g_w = 0, g_h = 0;
    double g_noise = 0.0;
    bool g_previews = false, g_derived = false;
    auto* gen = app.add_subcommand("gen", "Generate synthetic sample pairs with exact GT");
    gen->add_option("--spec", g_spec, "Scene spec file (key = value lines)");
    gen->add_option("--seed", g_seed, "Seed");
    gen->add_option("--out", g_out, "Output directory")->required();
    gen->add_option("--count", g_count, "Number of random samples (dataset mode)");
    gen->add_option("--width", g_w, "Random scene width");
    gen->add_option("--height", g_h, "Random scene height");
    gen->add_option("--noise", g_noise, "Image noise sigma for random scenes");
    gen->add_flag("--previews", g_previews, "PNG previews in dataset mode");
    gen->add_flag("--derived", g_derived, "Also write flow-derived occ/mb maps");

    // warp
    std::string w_mode, w_map, w_flow, w_out, w_cov, w_mask;
    auto* warp = app.add_subcommand("warp", "Direct or reverse warp a map along a flow");
    warp->add_option("--mode", w_mode, "direct|reverse")->required();
    warp->add_option("--map", w_map, "Input map raster")->required();
    warp->add_option("--flow", w_flow, "Flow raster (2 channels)")->required();
    warp->add_option("--out", w_out, "Output map raster")->required();
    warp->add_option("--coverage", w_cov, "Coverage counts output (direct mode)");
    warp->add_option("--mask", w_mask, "Defined-mask output (direct mode)");

    // costblock
    std::string c_fa, c_fb, c_flow, c_out;
    int c_radius = 2;
    auto* cost = app.add_subcommand("costblock", "Minimum feature discrepancy map");
    cost->add_option("--fa", c_fa, "Frame-a features")->required();
    cost->add_option("--fb", c_fb, "Frame-b features")->required();
    cost->add_option("--flow", c_flow, "Flow a->b")->required();
    cost->add_option("--radius", c_radius, "Search radius in pixels");
    cost->add_option("--out", c_out, "Output raster")->required();

    // train
    std::string t_config, t_data, t_out = "ckpt";
    std::uint64_t t_seed = 0;
    long t_steps = 500, t_eval_every = 0;
    auto* train = app.add_subcommand("train", "Train the detector on a dataset directory");
    train->add_option("--config", t_config, "Net config file");
    train->add_option("--data", t_data, "Dataset root (sample_* dirs)")->required();
    train->add_option("--seed", t_seed, "Seed");
    train->add_option("--steps", t_steps, "Adam steps");
    train->add_option("--eval-every", t_eval_every, "Print quick metrics every N steps");
    train->add_option("--out", t_out, "Checkpoint directory")->required();

    // infer
    std::string i_ckpt, i_pair, i_out = "pred";
    bool i_scales = false;
    auto* infer = app.add_subcommand("infer", "Run a checkpoint on one sample pair");
    infer->add_option("--ckpt", i_ckpt, "Checkpoint directory")->required();
    infer->add_option("--pair", i_pair, "Sample directory")->required();
    infer->add_option("--out", i_out, "Prediction output directory")->required();
    infer->add_flag("--scales", i_scales, "Also write per-scale maps");

    // eval
    std::string e_pred, e_gt, e_report = "report.json", e_plots, e_edges = "0,1,2,4,8,1000";
    auto* eval_cmd = app.add_subcommand("eval", "Score predictions against ground truth");
    eval_cmd->add_option("--pred", e_pred, "Prediction dir (single or dataset)")->required();
    eval_cmd->add_option("--gt", e_gt, "Ground-truth dir (single or dataset)")->required();
    eval_cmd->add_option("--report", e_report, "JSON report path");
    eval_cmd->add_option("--plots", e_plots, "PNG plot directory (single-pair mode)");
    eval_cmd->add_option("--strat-edges", e_edges, "Distance bin edges, comma separated");

    // stats
    std::string s_mb, s_occ, s_radii = "1,3", s_json;
    auto* stats = app.add_subcommand("stats", "MB/Occ-boundary adjacency statistics");
    stats->add_option("--mb", s_mb, "MB map raster")->required();
    stats->add_option("--occ", s_occ, "Occ map raster")->required();
    stats->add_option("--radii", s_radii, "Radii, comma separated");
    stats->add_option("--json", s_json, "Optional JSON output path");

    // ablate
    std::string a_config, a_data, a_seeds = "0,1,2", a_out = "ablation";
    long a_steps = 150;
    double a_eval_frac = 0.2;
    int a_parallel = default_threads();
    auto* ablate = app.add_subcommand("ablate", "Full component/order/task ablation sweep");
    ablate->add_option("--config", a_config, "Base net config file");
    ablate->add_option("--data", a_data, "Dataset root")->required();
    ablate->add_option("--seeds", a_seeds, "Seeds, comma separated");
    ablate->add_option("--steps", a_steps, "Adam steps per run");
    ablate->add_option("--eval-frac", a_eval_frac, "Fraction of samples held out for eval");
    ablate->add_option("--out", a_out, "Report directory");
    ablate->add_option("--parallel", a_parallel, "Concurrent runs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen(g_spec, g_seed, g_out, g_count, g_w, g_h, g_noise, g_previews,
                           g_derived);
        if (warp->parsed()) return cmd_warp(w_mode, w_map, w_flow, w_out, w_cov, w_mask);
        if (cost->parsed()) return cmd_costblock(c_fa, c_fb, c_flow, c_radius, c_out);
        if (train->parsed())
            return cmd_train(t_config, t_data, t_seed, t_steps, t_eval_every, t_out);
        if (infer->parsed()) return cmd_infer(i_ckpt, i_pair, i_out, i_scales);
        if (eval_cmd->parsed()) return cmd_eval(e_pred, e_gt, e_report, e_plots, e_edges);
        if (stats->parsed()) return cmd_stats(s_mb, s_occ, s_radii, s_json);
        if (ablate->parsed())
            return cmd_ablate(a_config, a_data, a_seeds, a_steps, a_eval_frac, a_out, a_parallel);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
