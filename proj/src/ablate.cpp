#include "mbocc/ablate.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "mbocc/evalm.hpp"

namespace mbocc {

EvalSummary evaluate_model(const net::NetConfig& cfg, net::ParamStore& params,
                           const std::vector<SamplePair>& eval_set) {
    if (eval_set.empty()) throw std::invalid_argument("evaluate_model: empty eval set");
    EvalSummary sum;
    Real f1_acc = 0.0, map_acc = 0.0;
    long f1_n = 0, map_n = 0;
    for (const SamplePair& s : eval_set) {
        net::Tape tape;
        net::ForwardOutput out = net::model_forward(tape, cfg, params, s, false);
        Real tol = default_match_tol(s.occ1.width, s.occ1.height);
        for (int dir = 0; dir < 2; ++dir) {
            const ScalarMap& occ_gt = dir == 0 ? s.occ1 : s.occ2;
            const ScalarMap& mb_gt = dir == 0 ? s.mb1 : s.mb2;
            f1_acc += f1_occ(out.pred.occ_fused[dir], occ_gt);
            ++f1_n;
            auto curve = map_mb(out.pred.mb_fused[dir], mb_gt, tol);
            if (curve) {
                map_acc += curve->average_precision;
                ++map_n;
            } else {
                ++sum.map_excluded;
            }
        }
        ++sum.samples;
    }
    sum.occ_f1 = f1_n ? f1_acc / f1_n : 0.0;
    sum.mb_map = map_n ? map_acc / map_n : 0.0;
    return sum;
}

namespace {

struct Cell {
    const char* components;
    bool d, a, b;
};

constexpr Cell kComponentGrid[] = {
    {"-DAB", false, false, false},
    {"-AB", true, false, false},
    {"-B", true, true, false},
    {"-A", true, false, true},
    {"full", true, true, true},
};

net::NetConfig cell_config(const net::NetConfig& base, const Cell& c, bool f2c, bool joint) {
    net::NetConfig cfg = base;
    cfg.use_direct_warp = c.d;
    cfg.use_attention = c.a;
    cfg.use_cost_block = c.b;
    cfg.fine_to_coarse = f2c;
    cfg.joint_tasks = joint;
    return cfg;
}

}  // namespace

AblateReport run_ablation(const net::NetConfig& base, const std::vector<SamplePair>& train_set,
                          const std::vector<SamplePair>& eval_set,
                          const std::vector<std::uint64_t>& seeds, long steps, int parallel,
                          const std::function<void(const AblateRun&)>& on_run) {
    if (train_set.empty() || eval_set.empty())
        throw std::invalid_argument("run_ablation: dataset must not be empty");
    if (seeds.empty()) throw std::invalid_argument("run_ablation: need at least one seed");

    struct Job {
        Cell cell;
        bool f2c;
        bool joint;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const Cell& c : kComponentGrid)
        for (bool f2c : {true, false})
            for (bool joint : {true, false})
                for (std::uint64_t seed : seeds) jobs.push_back({c, f2c, joint, seed});

    std::vector<const SamplePair*> train_ptrs;
    for (const SamplePair& s : train_set) train_ptrs.push_back(&s);

    AblateReport report;
    report.steps = steps;
    report.runs.resize(jobs.size());

    std::atomic<std::size_t> next{0};
    std::mutex cb_mutex;
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            const Job& job = jobs[i];
            AblateRun run;
            run.components = job.cell.components;
            run.order = job.f2c ? "f2c" : "c2f";
            run.tasks = job.joint ? "joint" : "single";
            run.seed = job.seed;
            auto t0 = std::chrono::steady_clock::now();
            net::NetConfig cfg = cell_config(base, job.cell, job.f2c, job.joint);
            net::TrainResult tr = net::train(cfg, train_ptrs, steps, job.seed);
            run.diverged = tr.diverged;
            run.first_loss = tr.loss_trace.empty() ? 0.0 : tr.loss_trace.front();
            run.final_loss = tr.loss_trace.empty() ? 0.0 : tr.loss_trace.back();
            if (!tr.diverged) run.metrics = evaluate_model(cfg, tr.params, eval_set);
            run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                              .count();
            report.runs[i] = run;
            if (on_run) {
                std::lock_guard<std::mutex> lock(cb_mutex);
                on_run(run);
            }
        }
    };

    int threads = std::max(1, parallel);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return report;
}

AblateRun AblateReport::aggregate(const std::string& components, const std::string& order,
                                  const std::string& tasks) const {
    AblateRun agg;
    agg.components = components;
    agg.order = order;
    agg.tasks = tasks;
    long n = 0;
    for (const AblateRun& r : runs) {
        if (r.components != components || r.order != order || r.tasks != tasks) continue;
        if (r.diverged) continue;
        agg.metrics.occ_f1 += r.metrics.occ_f1;
        agg.metrics.mb_map += r.metrics.mb_map;
        agg.final_loss += r.final_loss;
        ++n;
    }
    if (n == 0) throw std::runtime_error("aggregate: no finished runs for " + components + "/" +
                                         order + "/" + tasks);
    agg.metrics.occ_f1 /= n;
    agg.metrics.mb_map /= n;
    agg.final_loss /= n;
    return agg;
}

std::vector<std::string> AblateReport::expectation_lines() const {
    std::vector<std::string> lines;
    auto fmt = [](Real v) {
        std::ostringstream os;
        os.precision(4);
        os << std::fixed << v;
        return os.str();
    };
    auto expect = [&](const std::string& label, Real lhs, Real rhs, const std::string& what) {
        lines.push_back("expectation " + label + ": " + what + " " + fmt(lhs) +
                        (lhs >= rhs ? " >= " : " <  ") + fmt(rhs) +
                        (lhs >= rhs ? "  [met]" : "  [not met]"));
    };
    try {
        AblateRun full = aggregate("full", "f2c", "joint");
        AblateRun bare = aggregate("-DAB", "f2c", "joint");
        expect("full >= -DAB", full.metrics.occ_f1, bare.metrics.occ_f1, "occ_f1");
        expect("full >= -DAB", full.metrics.mb_map, bare.metrics.mb_map, "mb_map");
        AblateRun single = aggregate("full", "f2c", "single");
        expect("joint >= single", full.metrics.occ_f1, single.metrics.occ_f1, "occ_f1");
        expect("joint >= single", full.metrics.mb_map, single.metrics.mb_map, "mb_map");
        AblateRun c2f = aggregate("full", "c2f", "joint");
        expect("f2c >= c2f", full.metrics.occ_f1, c2f.metrics.occ_f1, "occ_f1");
        expect("f2c >= c2f", full.metrics.mb_map, c2f.metrics.mb_map, "mb_map");
    } catch (const std::exception& e) {
        lines.push_back(std::string("expectation aggregation failed: ") + e.what());
    }
    return lines;
}

std::string AblateReport::markdown() const {
    std::ostringstream os;
    os.precision(4);
    os << std::fixed;
    auto row = [&](const AblateRun& r) {
        os << "| " << r.components << " | " << r.order << " | " << r.tasks << " | "
           << r.metrics.occ_f1 << " | " << r.metrics.mb_map << " |\n";
    };
    os << "## Component ablation (joint, F2C, seed-averaged)\n\n";
    os << "| components | order | tasks | occ_f1 | mb_map |\n|---|---|---|---|---|\n";
    for (const char* c : {"-DAB", "-AB", "-B", "-A", "full"}) row(aggregate(c, "f2c", "joint"));
    os << "\n## Joint vs single task (full components, F2C)\n\n";
    os << "| components | order | tasks | occ_f1 | mb_map |\n|---|---|---|---|---|\n";
    row(aggregate("full", "f2c", "joint"));
    row(aggregate("full", "f2c", "single"));
    os << "\n## Decoder order (full components, joint)\n\n";
    os << "| components | order | tasks | occ_f1 | mb_map |\n|---|---|---|---|---|\n";
    row(aggregate("full", "f2c", "joint"));
    row(aggregate("full", "c2f", "joint"));
    os << "\n## Expectations (logged, not enforced)\n\n";
    for (const std::string& line : expectation_lines()) os << "- " << line << "\n";
    return os.str();
}

std::string AblateReport::json() const {
    nlohmann::json j;
    j["steps"] = steps;
    nlohmann::json rs = nlohmann::json::array();
    for (const AblateRun& r : runs) {
        rs.push_back({{"components", r.components},
                      {"order", r.order},
                      {"tasks", r.tasks},
                      {"seed", r.seed},
                      {"occ_f1", r.metrics.occ_f1},
                      {"mb_map", r.metrics.mb_map},
                      {"map_excluded", r.metrics.map_excluded},
                      {"eval_samples", r.metrics.samples},
                      {"first_loss", r.first_loss},
                      {"final_loss", r.final_loss},
                      {"diverged", r.diverged},
                      {"seconds", r.seconds}});
    }
    j["runs"] = rs;
    nlohmann::json aggs = nlohmann::json::array();
    for (const char* c : {"-DAB", "-AB", "-B", "-A", "full"})
        for (const char* order : {"f2c", "c2f"})
            for (const char* tasks : {"joint", "single"}) {
                try {
                    AblateRun a = aggregate(c, order, tasks);
                    aggs.push_back({{"components", a.components},
                                    {"order", a.order},
                                    {"tasks", a.tasks},
                                    {"occ_f1", a.metrics.occ_f1},
                                    {"mb_map", a.metrics.mb_map}});
                } catch (const std::exception&) {
                    // all seeds diverged for this cell; leave it out
                }
            }
    j["aggregates"] = aggs;
    j["expectations"] = expectation_lines();
    return j.dump(2);
}

}  // namespace mbocc
