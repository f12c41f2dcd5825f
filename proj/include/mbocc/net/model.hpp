#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mbocc/configfile.hpp"
#include "mbocc/grid.hpp"
#include "mbocc/net/autodiff.hpp"
#include "mbocc/synth.hpp"

namespace mbocc::net {

struct NetConfig {
    int levels = 4;          // scales in the pyramid
    int enc_channels = 32;   // encoder feature channels per scale
    int dec_channels = 32;   // decoder trunk channels
    int dec_convs = 5;       // trunk convolutions per scale
    int att_convs = 3;       // attention module convolutions
    int cost_radius = 2;     // cost-block search radius
    Real focal_gamma = 2.0;
    Real focal_alpha = 0.25;
    Real lr = 1e-4;
    Real att_loss_weight = 0.5;
    Real leaky_slope = 0.1;
    bool use_direct_warp = true;   // D: transport inter-frame maps by forward splat
    bool use_attention = true;     // A: occ-gradient attention on the MB branch
    bool use_cost_block = true;    // B: feed cost blocks to the decoders
    bool fine_to_coarse = true;    // decoder order (false = coarse-to-fine)
    bool joint_tasks = true;       // false: sever all MB<->Occ connections

    void validate() const;
    // Channel count of the per-level decoder trunk input.
    int decoder_in_channels() const;
    std::map<std::string, std::string> echo() const;
};

NetConfig net_config_from_kv(const KeyValueFile& kv);

// Named parameter tensors; shared between the two temporal directions by
// construction (both passes look up the same names).
struct ParamStore {
    std::map<std::string, TensorBuf> values;

    static ParamStore he_init(const NetConfig& cfg, std::uint64_t seed);
    std::size_t scalar_count() const;
};

// Test instrumentation: additive bumps inject perturbations into internal
// signals, counters record which transport path ran.
struct ForwardHooks {
    Real costblock_bump = 0.0;
    Real occgrad_bump = 0.0;
    bool force_attention_one = false;
    mutable long direct_warp_calls = 0;
    mutable long reverse_warp_calls = 0;
};

struct SampleTargets {
    const ScalarMap* mb[2] = {nullptr, nullptr};
    const ScalarMap* occ[2] = {nullptr, nullptr};
};

// All maps at full resolution, values in (0,1); index 0 = frame-1 maps.
struct Prediction {
    std::vector<ScalarMap> mb_scale[2], occ_scale[2], att_scale[2];
    ScalarMap mb_fused[2], occ_fused[2], att_fused[2];
    bool has_attention = false;
};

struct ForwardOutput {
    Prediction pred;
    Var loss;  // valid only when targets were given
    Real loss_value = 0.0;
};

TensorBuf to_tensor(const FeatureMap& f);
TensorBuf to_tensor(const ScalarMap& m);
ScalarMap scalar_from_tensor(const TensorBuf& t, int channel = 0,
                             RangeTag tag = RangeTag::Free);

// Multi-scale flow pyramid: level l is downsampled l times with magnitudes
// halved per level.
std::vector<std::shared_ptr<const FlowField>> flow_pyramid(const FlowField& f, int levels);

struct EncoderFeatures {
    std::vector<Var> f1, f2;  // per scale, finest first
};

// Siamese multi-scale encoder applied to both frames with shared weights.
EncoderFeatures encoder_forward(Tape& tape, Var img1, Var img2, ParamStore& params,
                                const NetConfig& cfg);

// 1x1 fusion over the concatenated full-resolution logits, then sigmoid.
Var fusion_forward(Tape& tape, const std::vector<Var>& full_res_logits, ParamStore& params,
                   const std::string& quantity);

// Full pipeline on externally supplied flows. Builds the graph on the given
// tape; call tape.backward(out.loss) afterwards to get parameter gradients.
ForwardOutput model_forward(Tape& tape, const NetConfig& cfg, ParamStore& params,
                            const FeatureMap& frame1, const FeatureMap& frame2,
                            const FlowField& f12, const FlowField& f21,
                            const SampleTargets* targets = nullptr,
                            const ForwardHooks* hooks = nullptr);

ForwardOutput model_forward(Tape& tape, const NetConfig& cfg, ParamStore& params,
                            const SamplePair& sample, bool with_loss,
                            const ForwardHooks* hooks = nullptr);

// Checkpoint I/O: parameter blobs in the flat binary raster format (f64) plus
// an index and a config echo.
void save_checkpoint(const std::string& dir, const NetConfig& cfg, const ParamStore& params);
std::pair<NetConfig, ParamStore> load_checkpoint(const std::string& dir);

}  // namespace mbocc::net
