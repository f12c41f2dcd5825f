#include "mbocc/net/train.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mbocc/rng.hpp"

namespace mbocc::net {

TrainResult train(const NetConfig& cfg, const std::vector<const SamplePair*>& data, long steps,
                  std::uint64_t seed, const std::function<void(long, Real)>& on_step,
                  long eval_every, const std::function<void(long, const ParamStore&)>& on_eval) {
    cfg.validate();
    if (data.empty()) throw std::invalid_argument("train: empty dataset");
    std::mt19937_64 rng(seed);

    TrainResult result;
    result.params = ParamStore::he_init(cfg, seed);

    const Real beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    std::map<std::string, TensorBuf> m1, m2;
    for (const auto& [name, t] : result.params.values) {
        m1[name] = TensorBuf(t.shape.c, t.shape.h, t.shape.w, 0.0);
        m2[name] = TensorBuf(t.shape.c, t.shape.h, t.shape.w, 0.0);
    }

    std::vector<std::size_t> schedule;
    auto refill_schedule = [&] {
        schedule.resize(data.size());
        for (std::size_t i = 0; i < schedule.size(); ++i) schedule[i] = i;
        for (std::size_t i = schedule.size(); i > 1; --i)
            std::swap(schedule[i - 1], schedule[uniform_int(rng, 0, static_cast<int>(i) - 1)]);
    };
    refill_schedule();
    std::size_t cursor = 0;

    ParamStore last_good = result.params;
    for (long step = 0; step < steps; ++step) {
        if (cursor >= schedule.size()) {
            refill_schedule();
            cursor = 0;
        }
        const SamplePair& sample = *data[schedule[cursor++]];

        Tape tape;
        ForwardOutput out = model_forward(tape, cfg, result.params, sample, true);
        result.loss_trace.push_back(out.loss_value);
        if (!std::isfinite(out.loss_value)) {
            result.diverged = true;
            result.diverged_at = step;
            result.params = last_good;
            return result;
        }
        last_good = result.params;
        if (on_step) on_step(step, out.loss_value);
        if (on_eval && eval_every > 0 && (step % eval_every == eval_every - 1 || step + 1 == steps))
            on_eval(step, result.params);
        if (cfg.lr == 0.0) continue;

        tape.backward(out.loss);
        const long t = step + 1;
        const Real bc1 = 1.0 - std::pow(beta1, static_cast<Real>(t));
        const Real bc2 = 1.0 - std::pow(beta2, static_cast<Real>(t));
        for (auto& [name, theta] : result.params.values) {
            const TensorBuf* g = tape.grad_of(name);
            if (!g) continue;  // parameter unused by this graph
            TensorBuf& m = m1[name];
            TensorBuf& v = m2[name];
            for (std::size_t i = 0; i < theta.v.size(); ++i) {
                Real gi = g->v[i];
                m.v[i] = beta1 * m.v[i] + (1.0 - beta1) * gi;
                v.v[i] = beta2 * v.v[i] + (1.0 - beta2) * gi * gi;
                Real mhat = m.v[i] / bc1;
                Real vhat = v.v[i] / bc2;
                theta.v[i] -= cfg.lr * mhat / (std::sqrt(vhat) + adam_eps);
            }
        }
    }
    return result;
}

std::string param_class(const std::string& name) {
    auto starts = [&](const char* p) { return name.rfind(p, 0) == 0; };
    if (starts("enc.down")) return "enc.down";
    if (starts("enc.")) return "enc.conv";
    if (starts("dec.")) return "dec.conv";
    if (starts("head.att")) return "att.head";
    if (starts("head.")) return "head";
    if (starts("att.")) return "att.conv";
    if (starts("up.")) return "deconv";
    if (starts("fuse.")) return "fuse";
    return "other";
}

GradCheckReport grad_check(const NetConfig& cfg, const SamplePair& sample, std::uint64_t seed,
                           int per_class, Real h) {
    ParamStore params = ParamStore::he_init(cfg, seed);

    auto loss_at = [&](ParamStore& ps) {
        Tape tape;
        return model_forward(tape, cfg, ps, sample, true).loss_value;
    };

    // Analytic gradients once.
    Tape tape;
    ForwardOutput out = model_forward(tape, cfg, params, sample, true);
    tape.backward(out.loss);

    GradCheckReport report;
    std::map<std::string, std::vector<std::pair<std::string, std::size_t>>> by_class;
    for (const auto& [name, t] : params.values)
        for (std::size_t i = 0; i < t.v.size(); ++i)
            by_class[param_class(name)].push_back({name, i});

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    for (auto& [cls, coords] : by_class) {
        int n = std::min<int>(per_class, static_cast<int>(coords.size()));
        // Partial Fisher-Yates to pick n coordinates without replacement.
        for (int k = 0; k < n; ++k) {
            int j = uniform_int(rng, k, static_cast<int>(coords.size()) - 1);
            std::swap(coords[k], coords[j]);
            const auto& [name, idx] = coords[k];

            const TensorBuf* g = tape.grad_of(name);
            Real analytic = g ? g->v[idx] : 0.0;
            if (!std::isfinite(analytic)) report.all_finite = false;

            Real saved = params.values[name].v[idx];
            params.values[name].v[idx] = saved + h;
            Real lp = loss_at(params);
            params.values[name].v[idx] = saved - h;
            Real lm = loss_at(params);
            params.values[name].v[idx] = saved;

            Real fd = (lp - lm) / (2.0 * h);
            Real rel = std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-5});
            ++report.checked;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = name;
                report.worst_index = idx;
            }
        }
    }
    return report;
}

}  // namespace mbocc::net
