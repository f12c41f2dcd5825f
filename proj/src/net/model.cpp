#include "mbocc/net/model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "mbocc/io.hpp"
#include "mbocc/rng.hpp"

namespace mbocc::net {

namespace {

constexpr Real kCostEps = 1e-12;   // inside the cost-block sqrt
constexpr Real kGradMagEps = 1e-8;  // inside the occ-gradient sqrt

const char* kQuantities[3] = {"mb", "occ", "att"};

std::shared_ptr<const TensorBuf> target_tensor(const ScalarMap& m) {
    auto t = std::make_shared<TensorBuf>(1, m.height, m.width);
    t->v = m.v;
    return t;
}

}  // namespace

void NetConfig::validate() const {
    if (levels < 2) throw std::invalid_argument("NetConfig: levels must be >= 2");
    if (enc_channels < 1 || dec_channels < 1 || dec_convs < 1 || att_convs < 1)
        throw std::invalid_argument("NetConfig: channel/layer counts must be positive");
    if (cost_radius < 0) throw std::invalid_argument("NetConfig: cost_radius must be >= 0");
    if (focal_gamma < 0) throw std::invalid_argument("NetConfig: focal_gamma must be >= 0");
    if (focal_alpha <= 0 || focal_alpha >= 1)
        throw std::invalid_argument("NetConfig: focal_alpha must be in (0,1)");
    if (lr < 0) throw std::invalid_argument("NetConfig: negative learning rate");
}

int NetConfig::decoder_in_channels() const {
    int c = enc_channels;
    if (use_cost_block) c += 2;
    c += joint_tasks ? 2 : 1;  // same-direction previous maps
    c += joint_tasks ? 2 : 1;  // transported other-direction maps
    if (use_direct_warp) c += 1;  // shared defined-mask channel
    return c;
}

std::map<std::string, std::string> NetConfig::echo() const {
    std::map<std::string, std::string> m;
    m["levels"] = std::to_string(levels);
    m["enc_channels"] = std::to_string(enc_channels);
    m["dec_channels"] = std::to_string(dec_channels);
    m["dec_convs"] = std::to_string(dec_convs);
    m["att_convs"] = std::to_string(att_convs);
    m["cost_radius"] = std::to_string(cost_radius);
    m["focal_gamma"] = std::to_string(focal_gamma);
    m["focal_alpha"] = std::to_string(focal_alpha);
    m["lr"] = std::to_string(lr);
    m["att_loss_weight"] = std::to_string(att_loss_weight);
    m["leaky_slope"] = std::to_string(leaky_slope);
    m["use_direct_warp"] = use_direct_warp ? "true" : "false";
    m["use_attention"] = use_attention ? "true" : "false";
    m["use_cost_block"] = use_cost_block ? "true" : "false";
    m["decoder_order"] = fine_to_coarse ? "f2c" : "c2f";
    m["joint_tasks"] = joint_tasks ? "true" : "false";
    return m;
}

NetConfig net_config_from_kv(const KeyValueFile& kv) {
    NetConfig c;
    c.levels = static_cast<int>(kv.get_int("levels", c.levels));
    c.enc_channels = static_cast<int>(kv.get_int("enc_channels", c.enc_channels));
    c.dec_channels = static_cast<int>(kv.get_int("dec_channels", c.dec_channels));
    c.dec_convs = static_cast<int>(kv.get_int("dec_convs", c.dec_convs));
    c.att_convs = static_cast<int>(kv.get_int("att_convs", c.att_convs));
    c.cost_radius = static_cast<int>(kv.get_int("cost_radius", c.cost_radius));
    c.focal_gamma = kv.get_real("focal_gamma", c.focal_gamma);
    c.focal_alpha = kv.get_real("focal_alpha", c.focal_alpha);
    c.lr = kv.get_real("lr", c.lr);
    c.att_loss_weight = kv.get_real("att_loss_weight", c.att_loss_weight);
    c.leaky_slope = kv.get_real("leaky_slope", c.leaky_slope);
    c.use_direct_warp = kv.get_bool("use_direct_warp", c.use_direct_warp);
    c.use_attention = kv.get_bool("use_attention", c.use_attention);
    c.use_cost_block = kv.get_bool("use_cost_block", c.use_cost_block);
    std::string order = kv.get_str("decoder_order", c.fine_to_coarse ? "f2c" : "c2f");
    if (order != "f2c" && order != "c2f")
        throw std::runtime_error("config: decoder_order must be f2c or c2f");
    c.fine_to_coarse = order == "f2c";
    c.joint_tasks = kv.get_bool("joint_tasks", c.joint_tasks);
    c.validate();
    return c;
}

ParamStore ParamStore::he_init(const NetConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    ParamStore ps;
    auto conv = [&](const std::string& name, int co, int ci, int k2) {
        TensorBuf w(co, ci, k2);
        Real std_dev = std::sqrt(2.0 / (static_cast<Real>(ci) * k2));
        for (Real& v : w.v) v = gauss(rng, 0.0, std_dev);
        ps.values[name + ".w"] = std::move(w);
        ps.values[name + ".b"] = TensorBuf(co, 1, 1, 0.0);
    };
    const int L = cfg.levels, EC = cfg.enc_channels, DC = cfg.dec_channels;

    for (int l = 0; l < L; ++l) {
        for (int k = 0; k < 4; ++k) {
            int in = (l == 0 && k == 0) ? 3 : EC;
            conv("enc.s" + std::to_string(l) + ".c" + std::to_string(k), EC, in, 9);
        }
        if (l + 1 < L) conv("enc.down" + std::to_string(l), EC, EC, 9);
    }

    const int dec_in = cfg.decoder_in_channels();
    std::vector<std::string> tasks = {"mb", "occ"};
    for (const std::string& task : tasks) {
        for (int l = 0; l < L; ++l) {
            for (int k = 0; k < cfg.dec_convs; ++k)
                conv("dec." + task + ".s" + std::to_string(l) + ".c" + std::to_string(k), DC,
                     k == 0 ? dec_in : DC, 9);
            conv("head." + task + ".s" + std::to_string(l), 1, DC, 1);
        }
    }
    if (cfg.use_attention && cfg.joint_tasks) {
        for (int l = 0; l < L; ++l) {
            for (int k = 0; k < cfg.att_convs; ++k)
                conv("att.s" + std::to_string(l) + ".c" + std::to_string(k), DC, k == 0 ? 1 : DC,
                     9);
            conv("head.att.s" + std::to_string(l), 1, DC, 1);
        }
    }
    // Upsampling deconvolutions (scale 0 is already full resolution).
    int n_quant = (cfg.use_attention && cfg.joint_tasks) ? 3 : 2;
    for (int q = 0; q < n_quant; ++q) {
        for (int l = 1; l < L; ++l) {
            int f = 1 << l;
            int k = 2 * f;
            TensorBuf w(1, k, k);
            Real std_dev = std::sqrt(2.0 / (static_cast<Real>(k) * k));
            for (Real& v : w.v) v = gauss(rng, 0.0, std_dev);
            std::string name = std::string("up.") + kQuantities[q] + ".s" + std::to_string(l);
            ps.values[name + ".w"] = std::move(w);
            ps.values[name + ".b"] = TensorBuf(1, 1, 1, 0.0);
        }
    }
    // Fusion: weighted average of the L per-scale logits, kernels 1/L.
    for (int q = 0; q < n_quant; ++q) {
        TensorBuf w(1, L, 1, 1.0 / L);
        ps.values[std::string("fuse.") + kQuantities[q] + ".w"] = std::move(w);
        ps.values[std::string("fuse.") + kQuantities[q] + ".b"] = TensorBuf(1, 1, 1, 0.0);
    }
    return ps;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : values) n += t.v.size();
    return n;
}

TensorBuf to_tensor(const FeatureMap& f) {
    TensorBuf t(f.channels, f.height, f.width);
    t.v = f.v;  // both are plane-major
    return t;
}

TensorBuf to_tensor(const ScalarMap& m) {
    TensorBuf t(1, m.height, m.width);
    t.v = m.v;
    return t;
}

ScalarMap scalar_from_tensor(const TensorBuf& t, int channel, RangeTag tag) {
    ScalarMap m(t.shape.w, t.shape.h, 0.0, tag);
    const Real* p = t.plane_ptr(channel);
    std::copy(p, p + t.plane(), m.v.begin());
    return m;
}

std::vector<std::shared_ptr<const FlowField>> flow_pyramid(const FlowField& f, int levels) {
    std::vector<std::shared_ptr<const FlowField>> pyr;
    pyr.push_back(std::make_shared<FlowField>(f));
    for (int l = 1; l < levels; ++l) {
        const FlowField& prev = *pyr.back();
        ScalarMap u(prev.width, prev.height), v(prev.width, prev.height);
        u.v = prev.u;
        v.v = prev.vflow;
        ScalarMap du = downsample2(u), dv = downsample2(v);
        auto next = std::make_shared<FlowField>(du.width, du.height, prev.dir);
        for (std::size_t i = 0; i < next->u.size(); ++i) {
            next->u[i] = 0.5 * du.v[i];
            next->vflow[i] = 0.5 * dv.v[i];
        }
        pyr.push_back(std::move(next));
    }
    return pyr;
}

namespace {

Var lookup(Tape& tape, ParamStore& ps, std::map<std::string, Var>& cache,
           const std::string& name) {
    auto it = cache.find(name);
    if (it != cache.end()) return it->second;
    auto pit = ps.values.find(name);
    if (pit == ps.values.end()) throw std::logic_error("missing parameter " + name);
    Var v = tape.param(name, pit->second);
    cache[name] = v;
    return v;
}

struct Builder {
    Tape& tape;
    const NetConfig& cfg;
    ParamStore& params;
    std::map<std::string, Var> cache;

    Var p(const std::string& name) { return lookup(tape, params, cache, name); }

    Var conv_block(Var x, const std::string& name, int stride = 1) {
        return tape.leaky_relu(tape.conv3x3(x, p(name + ".w"), p(name + ".b"), stride),
                               cfg.leaky_slope);
    }
};

}  // namespace

EncoderFeatures encoder_forward(Tape& tape, Var img1, Var img2, ParamStore& params,
                                const NetConfig& cfg) {
    Builder b{tape, cfg, params, {}};
    EncoderFeatures out;
    for (int frame = 0; frame < 2; ++frame) {
        Var x = frame == 0 ? img1 : img2;
        for (int l = 0; l < cfg.levels; ++l) {
            for (int k = 0; k < 4; ++k)
                x = b.conv_block(x, "enc.s" + std::to_string(l) + ".c" + std::to_string(k));
            (frame == 0 ? out.f1 : out.f2).push_back(x);
            if (l + 1 < cfg.levels) x = b.conv_block(x, "enc.down" + std::to_string(l), 2);
        }
    }
    return out;
}

Var fusion_forward(Tape& tape, const std::vector<Var>& full_res_logits, ParamStore& params,
                   const std::string& quantity) {
    if (full_res_logits.empty()) throw std::invalid_argument("fusion_forward: no logits");
    std::map<std::string, Var> cache;
    Var w = lookup(tape, params, cache, "fuse." + quantity + ".w");
    if (params.values.at("fuse." + quantity + ".w").shape.h !=
        static_cast<int>(full_res_logits.size()))
        throw std::invalid_argument("fusion_forward: scale-count mismatch");
    Var b = lookup(tape, params, cache, "fuse." + quantity + ".b");
    return tape.sigmoid(tape.conv1x1(tape.concat(full_res_logits), w, b));
}

ForwardOutput model_forward(Tape& tape, const NetConfig& cfg, ParamStore& params,
                            const FeatureMap& frame1, const FeatureMap& frame2,
                            const FlowField& f12, const FlowField& f21,
                            const SampleTargets* targets, const ForwardHooks* hooks) {
    cfg.validate();
    if (frame1.channels != 3 || frame2.channels != 3)
        throw std::invalid_argument("model_forward: frames must have 3 channels");
    if (frame1.width != frame2.width || frame1.height != frame2.height ||
        frame1.width != f12.width || frame1.height != f12.height ||
        frame1.width != f21.width || frame1.height != f21.height)
        throw std::invalid_argument("model_forward: input dimension mismatch");
    const int H = frame1.height, W = frame1.width;
    const int div = 1 << (cfg.levels - 1);
    if (H % div != 0 || W % div != 0)
        throw std::invalid_argument("model_forward: frame size must be divisible by 2^(L-1)");

    const int L = cfg.levels;
    const bool attention_on = cfg.use_attention && cfg.joint_tasks;
    Builder b{tape, cfg, params, {}};

    Var img1 = tape.input(to_tensor(frame1));
    Var img2 = tape.input(to_tensor(frame2));
    EncoderFeatures feats = encoder_forward(tape, img1, img2, params, cfg);
    // encoder_forward used its own cache; rebuild lookups through b for the rest.

    auto p12 = flow_pyramid(f12, L);
    auto p21 = flow_pyramid(f21, L);

    std::vector<Var> cb1(L), cb2(L);
    if (cfg.use_cost_block) {
        for (int l = 0; l < L; ++l) {
            cb1[l] = tape.cost_block_min(feats.f1[l], feats.f2[l], p12[l], cfg.cost_radius,
                                         kCostEps);
            cb2[l] = tape.cost_block_min(feats.f2[l], feats.f1[l], p21[l], cfg.cost_radius,
                                         kCostEps);
            if (hooks && hooks->costblock_bump != 0.0) {
                cb1[l] = tape.add_const(cb1[l], hooks->costblock_bump);
                cb2[l] = tape.add_const(cb2[l], hooks->costblock_bump);
            }
        }
    }

    // Per-direction state carried between levels: scale-resolution maps.
    struct DirState {
        Var mb, occ;
        bool set = false;
    };
    DirState state[2];

    std::vector<Var> mb_logits_full[2], occ_logits_full[2], att_logits_full[2];
    mb_logits_full[0].resize(L);
    mb_logits_full[1].resize(L);
    occ_logits_full[0].resize(L);
    occ_logits_full[1].resize(L);
    if (attention_on) {
        att_logits_full[0].resize(L);
        att_logits_full[1].resize(L);
    }

    std::vector<int> order(L);
    for (int i = 0; i < L; ++i) order[i] = cfg.fine_to_coarse ? i : L - 1 - i;

    for (int step = 0; step < L; ++step) {
        const int l = order[step];
        const int lh = H >> l, lw = W >> l;
        const std::string sl = ".s" + std::to_string(l);

        DirState next_state[2];
        for (int dir = 0; dir < 2; ++dir) {
            Var skip = dir == 0 ? feats.f1[l] : feats.f2[l];
            std::vector<Var> inputs = {skip};
            if (cfg.use_cost_block) {
                inputs.push_back(dir == 0 ? cb1[l] : cb2[l]);
                inputs.push_back(dir == 0 ? cb2[l] : cb1[l]);
            }

            // Previous-level maps, own direction, resampled to this scale.
            Var prev_mb, prev_occ, trans_mb, trans_occ, trans_mask;
            bool have_mask = false;
            if (!state[dir].set) {
                TensorBuf half(1, lh, lw, 0.5);
                prev_mb = tape.input(half);
                prev_occ = tape.input(half);
                trans_mb = tape.input(half);
                trans_occ = tape.input(half);
                if (cfg.use_direct_warp) {
                    trans_mask = tape.input(TensorBuf(1, lh, lw, 1.0));
                    have_mask = true;
                }
            } else {
                auto resample = [&](Var m) {
                    return cfg.fine_to_coarse ? tape.avgpool2(m)
                                              : tape.bilinear_resize(m, lh, lw);
                };
                prev_mb = resample(state[dir].mb);
                prev_occ = resample(state[dir].occ);
                // Other direction's maps live in the other frame; bring them
                // over with the transport the D flag selects.
                Var other_mb = resample(state[1 - dir].mb);
                Var other_occ = resample(state[1 - dir].occ);
                auto into_this_frame = dir == 0 ? p21[l] : p12[l];
                auto from_this_frame = dir == 0 ? p12[l] : p21[l];
                if (cfg.use_direct_warp) {
                    TensorBuf mask;
                    trans_mb = tape.warp_direct_max(other_mb, into_this_frame, &mask);
                    trans_occ = tape.warp_direct_max(other_occ, into_this_frame, nullptr);
                    trans_mask = tape.input(std::move(mask));
                    have_mask = true;
                    if (hooks) hooks->direct_warp_calls += 2;
                } else {
                    trans_mb = tape.warp_reverse(other_mb, from_this_frame);
                    trans_occ = tape.warp_reverse(other_occ, from_this_frame);
                    if (hooks) hooks->reverse_warp_calls += 2;
                }
            }
            // In single-task mode each branch sees only its own task's maps.
            Var mb_in, occ_in;
            if (cfg.joint_tasks) {
                std::vector<Var> parts = inputs;
                parts.push_back(prev_mb);
                parts.push_back(prev_occ);
                parts.push_back(trans_mb);
                parts.push_back(trans_occ);
                if (have_mask) parts.push_back(trans_mask);
                mb_in = occ_in = tape.concat(parts);
            } else {
                auto branch_in = [&](Var prev_same, Var trans_same) {
                    std::vector<Var> parts = inputs;
                    parts.push_back(prev_same);
                    parts.push_back(trans_same);
                    if (have_mask) parts.push_back(trans_mask);
                    return tape.concat(parts);
                };
                mb_in = branch_in(prev_mb, trans_mb);
                occ_in = branch_in(prev_occ, trans_occ);
            }

            // Occ branch first: the attention module taps its output.
            Var occ_trunk = occ_in;
            for (int k = 0; k < cfg.dec_convs; ++k)
                occ_trunk = b.conv_block(occ_trunk, "dec.occ" + sl + ".c" + std::to_string(k));
            Var occ_logit = tape.conv1x1(occ_trunk, b.p("head.occ" + sl + ".w"),
                                         b.p("head.occ" + sl + ".b"));
            Var occ_map = tape.sigmoid(occ_logit);

            Var mb_trunk = mb_in;
            for (int k = 0; k < cfg.dec_convs; ++k)
                mb_trunk = b.conv_block(mb_trunk, "dec.mb" + sl + ".c" + std::to_string(k));

            Var att_logit;
            if (attention_on) {
                Var occ_grad = tape.grad_mag(occ_map, kGradMagEps);
                if (hooks && hooks->occgrad_bump != 0.0)
                    occ_grad = tape.add_const(occ_grad, hooks->occgrad_bump);
                Var att = occ_grad;
                for (int k = 0; k < cfg.att_convs; ++k)
                    att = b.conv_block(att, "att" + sl + ".c" + std::to_string(k));
                att_logit = tape.conv1x1(att, b.p("head.att" + sl + ".w"),
                                         b.p("head.att" + sl + ".b"));
                Var att_map = tape.sigmoid(att_logit);
                if (hooks && hooks->force_attention_one)
                    att_map = tape.input(TensorBuf(1, lh, lw, 1.0));
                mb_trunk = tape.hadamard_broadcast(mb_trunk, att_map);
            }
            Var mb_logit = tape.conv1x1(mb_trunk, b.p("head.mb" + sl + ".w"),
                                        b.p("head.mb" + sl + ".b"));
            Var mb_map = tape.sigmoid(mb_logit);

            // Full-resolution logits (deconv for l >= 1, identity at l = 0).
            auto to_full = [&](Var logit, const char* quantity) {
                if (l == 0) return logit;
                int f = 1 << l;
                std::string name = std::string("up.") + quantity + sl;
                return tape.deconv1(logit, b.p(name + ".w"), b.p(name + ".b"), f, 2 * f, f / 2,
                                    H, W);
            };
            mb_logits_full[dir][l] = to_full(mb_logit, "mb");
            occ_logits_full[dir][l] = to_full(occ_logit, "occ");
            if (attention_on) att_logits_full[dir][l] = to_full(att_logit, "att");

            next_state[dir].mb = mb_map;
            next_state[dir].occ = occ_map;
            next_state[dir].set = true;
        }
        state[0] = next_state[0];
        state[1] = next_state[1];
    }

    ForwardOutput out;
    out.pred.has_attention = attention_on;
    std::vector<Var> loss_terms;
    std::vector<Real> loss_weights;

    for (int dir = 0; dir < 2; ++dir) {
        std::vector<Var> mb_maps, occ_maps, att_maps;
        for (int l = 0; l < L; ++l) {
            mb_maps.push_back(tape.sigmoid(mb_logits_full[dir][l]));
            occ_maps.push_back(tape.sigmoid(occ_logits_full[dir][l]));
            if (attention_on) att_maps.push_back(tape.sigmoid(att_logits_full[dir][l]));
        }
        Var mb_fused = fusion_forward(tape, mb_logits_full[dir], params, "mb");
        Var occ_fused = fusion_forward(tape, occ_logits_full[dir], params, "occ");
        Var att_fused;
        if (attention_on) att_fused = fusion_forward(tape, att_logits_full[dir], params, "att");

        for (int l = 0; l < L; ++l) {
            out.pred.mb_scale[dir].push_back(
                scalar_from_tensor(tape.value(mb_maps[l]), 0, RangeTag::Unit));
            out.pred.occ_scale[dir].push_back(
                scalar_from_tensor(tape.value(occ_maps[l]), 0, RangeTag::Unit));
            if (attention_on)
                out.pred.att_scale[dir].push_back(
                    scalar_from_tensor(tape.value(att_maps[l]), 0, RangeTag::Unit));
        }
        out.pred.mb_fused[dir] = scalar_from_tensor(tape.value(mb_fused), 0, RangeTag::Unit);
        out.pred.occ_fused[dir] = scalar_from_tensor(tape.value(occ_fused), 0, RangeTag::Unit);
        if (attention_on)
            out.pred.att_fused[dir] = scalar_from_tensor(tape.value(att_fused), 0, RangeTag::Unit);

        if (targets) {
            auto mb_t = target_tensor(*targets->mb[dir]);
            auto occ_t = target_tensor(*targets->occ[dir]);
            auto add_term = [&](Var map, std::shared_ptr<const TensorBuf> t, Real w) {
                loss_terms.push_back(tape.focal_loss(map, t, cfg.focal_gamma, cfg.focal_alpha));
                loss_weights.push_back(w);
            };
            for (int l = 0; l < L; ++l) {
                add_term(mb_maps[l], mb_t, 1.0);
                add_term(occ_maps[l], occ_t, 1.0);
                if (attention_on) add_term(att_maps[l], mb_t, cfg.att_loss_weight);
            }
            add_term(mb_fused, mb_t, 1.0);
            add_term(occ_fused, occ_t, 1.0);
            if (attention_on) add_term(att_fused, mb_t, cfg.att_loss_weight);
        }
    }

    if (targets) {
        out.loss = tape.weighted_sum(loss_terms, loss_weights);
        out.loss_value = tape.value(out.loss).v[0];
    }
    return out;
}

ForwardOutput model_forward(Tape& tape, const NetConfig& cfg, ParamStore& params,
                            const SamplePair& sample, bool with_loss, const ForwardHooks* hooks) {
    SampleTargets targets;
    targets.mb[0] = &sample.mb1;
    targets.mb[1] = &sample.mb2;
    targets.occ[0] = &sample.occ1;
    targets.occ[1] = &sample.occ2;
    return model_forward(tape, cfg, params, sample.frame1, sample.frame2, sample.flow12,
                         sample.flow21, with_loss ? &targets : nullptr, hooks);
}

void save_checkpoint(const std::string& dir, const NetConfig& cfg, const ParamStore& params) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "params");
    nlohmann::json index;
    index["config"] = cfg.echo();
    nlohmann::json plist = nlohmann::json::object();
    int file_id = 0;
    for (const auto& [name, t] : params.values) {
        std::string file = "params/p" + std::to_string(file_id++) + ".bin";
        io::Raster r;
        r.height = t.shape.c;  // parameter blobs: raster (H,W,C) = tensor (c,h,w)
        r.width = t.shape.h;
        r.channels = t.shape.w;
        r.data = t.v;
        io::write_raster((fs::path(dir) / file).string(), r, io::kDtypeF64);
        plist[name] = {{"file", file},
                       {"c", t.shape.c},
                       {"h", t.shape.h},
                       {"w", t.shape.w}};
    }
    index["params"] = plist;
    std::ofstream os(fs::path(dir) / "checkpoint.json");
    if (!os) throw std::runtime_error("save_checkpoint: cannot open index");
    os << index.dump(2) << "\n";
}

std::pair<NetConfig, ParamStore> load_checkpoint(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream is(fs::path(dir) / "checkpoint.json");
    if (!is) throw std::runtime_error("load_checkpoint: missing checkpoint.json in " + dir);
    nlohmann::json index = nlohmann::json::parse(is);

    KeyValueFile kv;
    std::string text;
    for (auto& [k, v] : index.at("config").items())
        text += k + " = " + v.get<std::string>() + "\n";
    NetConfig cfg = net_config_from_kv(KeyValueFile::parse_string(text));

    ParamStore ps;
    for (auto& [name, meta] : index.at("params").items()) {
        io::Raster r = io::read_raster((fs::path(dir) / meta.at("file").get<std::string>()).string());
        TensorBuf t(meta.at("c").get<int>(), meta.at("h").get<int>(), meta.at("w").get<int>());
        if (t.v.size() != r.data.size())
            throw std::runtime_error("load_checkpoint: blob size mismatch for " + name);
        t.v = r.data;
        ps.values[name] = std::move(t);
    }
    return {cfg, ps};
}

}  // namespace mbocc::net
