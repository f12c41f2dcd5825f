#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mbocc/net/train.hpp"

namespace mbocc {

// Mean fused-map quality of a trained model over an evaluation set: Occ F1 at
// threshold 0.5 and boundary mAP, each averaged over samples and both
// temporal directions. Samples with empty MB ground truth are excluded from
// the mAP mean and counted.
struct EvalSummary {
    Real occ_f1 = 0.0;
    Real mb_map = 0.0;
    long map_excluded = 0;
    long samples = 0;
};

EvalSummary evaluate_model(const net::NetConfig& cfg, net::ParamStore& params,
                           const std::vector<SamplePair>& eval_set);

struct AblateRun {
    std::string components;  // "full", "-A", "-B", "-AB", "-DAB"
    std::string order;       // "f2c" | "c2f"
    std::string tasks;       // "joint" | "single"
    std::uint64_t seed = 0;
    EvalSummary metrics;
    Real first_loss = 0.0;
    Real final_loss = 0.0;
    bool diverged = false;
    double seconds = 0.0;
};

struct AblateReport {
    std::vector<AblateRun> runs;
    long steps = 0;
    std::string markdown() const;              // Tables: components / tasks / order
    std::string json() const;                  // full per-run dump + aggregates
    // Seed-averaged metrics for one configuration; nullopt-free, throws if absent.
    AblateRun aggregate(const std::string& components, const std::string& order,
                        const std::string& tasks) const;
    // Directional expectations, logged as text lines (never hard failures).
    std::vector<std::string> expectation_lines() const;
};

// Trains and evaluates the full flag grid
//   {-DAB, -AB, -B, -A, full} x {f2c, c2f} x {joint, single}
// with the same seeds and the same data split for every cell. Runs execute on
// `parallel` threads (1 = sequential); each run is self-contained and
// deterministic, so the schedule does not affect results. A diverged run is
// recorded and the sweep continues.
AblateReport run_ablation(const net::NetConfig& base, const std::vector<SamplePair>& train_set,
                          const std::vector<SamplePair>& eval_set,
                          const std::vector<std::uint64_t>& seeds, long steps, int parallel,
                          const std::function<void(const AblateRun&)>& on_run = {});

}  // namespace mbocc
