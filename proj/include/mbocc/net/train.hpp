#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mbocc/net/model.hpp"

namespace mbocc::net {

struct TrainResult {
    ParamStore params;
    std::vector<Real> loss_trace;
    bool diverged = false;
    long diverged_at = -1;  // step index of the first non-finite loss
};

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) over He-initialized parameters, one
// sample per step, epoch-shuffled by the seed. Deterministic per
// (config, data, steps, seed). A non-finite loss aborts and returns the last
// good parameters. When eval_every > 0, on_eval sees the current parameters
// every eval_every steps (and after the last step).
TrainResult train(const NetConfig& cfg, const std::vector<const SamplePair*>& data, long steps,
                  std::uint64_t seed,
                  const std::function<void(long step, Real loss)>& on_step = {},
                  long eval_every = 0,
                  const std::function<void(long step, const ParamStore&)>& on_eval = {});

struct GradCheckReport {
    Real max_rel_err = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    long checked = 0;
    bool all_finite = true;
};

// Central finite differences (step h, f64) on a random subset of parameters,
// per_class coordinates from every layer class, against the tape gradients.
GradCheckReport grad_check(const NetConfig& cfg, const SamplePair& sample, std::uint64_t seed,
                           int per_class, Real h = 1e-3);

// Layer class of a parameter name (enc.conv, enc.down, dec.conv, head,
// att.conv, att.head, deconv, fuse).
std::string param_class(const std::string& name);

}  // namespace mbocc::net
