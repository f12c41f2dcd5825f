#include "mbocc/evalm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

namespace mbocc {

namespace {

struct Pixel {
    int x, y;
};

std::vector<Pixel> positives(const ScalarMap& m) {
    std::vector<Pixel> out;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y) >= 0.5) out.push_back({x, y});
    return out;
}

}  // namespace

Real f1_occ(const ScalarMap& pred, const ScalarMap& gt) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw std::invalid_argument("f1_occ: dimension mismatch");
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.v.size(); ++i) {
        bool p = pred.v[i] >= 0.5;
        bool g = gt.v[i] >= 0.5;
        tp += (p && g);
        fp += (p && !g);
        fn += (!p && g);
    }
    if (tp == 0 && fp == 0 && fn == 0) return 1.0;
    return 2.0 * tp / static_cast<Real>(2 * tp + fp + fn);
}

MatchCounts boundary_match(const ScalarMap& pred_bin, const ScalarMap& gt_bin, Real tol) {
    if (pred_bin.width != gt_bin.width || pred_bin.height != gt_bin.height)
        throw std::invalid_argument("boundary_match: dimension mismatch");
    if (tol < 0.0) throw std::invalid_argument("boundary_match: negative tolerance");
    std::vector<Pixel> preds = positives(pred_bin);
    std::vector<Pixel> gts = positives(gt_bin);

    // Bucket ground-truth pixels so candidate generation only scans cells
    // within the tolerance instead of all |P| x |G| pairs.
    const int cell = std::max(1, static_cast<int>(std::ceil(tol)));
    std::map<std::pair<int, int>, std::vector<int>> buckets;
    for (int gi = 0; gi < static_cast<int>(gts.size()); ++gi)
        buckets[{gts[gi].x / cell, gts[gi].y / cell}].push_back(gi);

    // Candidate pairs within tolerance, nearest first; ties broken by index so
    // the matching is deterministic.
    struct Cand {
        Real d2;
        int pi, gi;
    };
    std::vector<Cand> cands;
    Real tol2 = tol * tol;
    for (int pi = 0; pi < static_cast<int>(preds.size()); ++pi) {
        int cx = preds[pi].x / cell, cy = preds[pi].y / cell;
        for (int by = cy - 1; by <= cy + 1; ++by) {
            for (int bx = cx - 1; bx <= cx + 1; ++bx) {
                auto it = buckets.find({bx, by});
                if (it == buckets.end()) continue;
                for (int gi : it->second) {
                    Real dx = preds[pi].x - gts[gi].x;
                    Real dy = preds[pi].y - gts[gi].y;
                    Real d2 = dx * dx + dy * dy;
                    if (d2 <= tol2) cands.push_back({d2, pi, gi});
                }
            }
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        return std::tie(a.d2, a.pi, a.gi) < std::tie(b.d2, b.pi, b.gi);
    });
    std::vector<std::uint8_t> pused(preds.size(), 0), gused(gts.size(), 0);
    long tp = 0;
    for (const Cand& c : cands) {
        if (pused[c.pi] || gused[c.gi]) continue;
        pused[c.pi] = gused[c.gi] = 1;
        ++tp;
    }
    MatchCounts mc;
    mc.tp = tp;
    mc.fp = static_cast<long>(preds.size()) - tp;
    mc.fn = static_cast<long>(gts.size()) - tp;
    return mc;
}

Real default_match_tol(int width, int height) {
    Real diag = std::sqrt(static_cast<Real>(width) * width + static_cast<Real>(height) * height);
    return std::max(1.0, std::round(0.0075 * diag));
}

std::vector<std::uint8_t> nms_thin(const ScalarMap& score) {
    const int W = score.width, H = score.height;

    // Rank transform: dense rank of each distinct value, normalized. Ranks,
    // and therefore the thinning, survive any strictly monotone rescaling.
    std::vector<Real> distinct = score.v;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    ScalarMap rank(W, H);
    Real denom = distinct.size() > 1 ? static_cast<Real>(distinct.size() - 1) : 1.0;
    for (std::size_t i = 0; i < score.v.size(); ++i) {
        auto it = std::lower_bound(distinct.begin(), distinct.end(), score.v[i]);
        rank.v[i] = static_cast<Real>(it - distinct.begin()) / denom;
    }

    auto rank_at = [&](int x, int y) -> Real {
        if (x < 0 || x >= W || y < 0 || y >= H) return -std::numeric_limits<Real>::infinity();
        return rank.at(x, y);
    };

    std::vector<std::uint8_t> keep(score.v.size(), 0);
    const Real diag_gate = 2.414213562373095;  // tan(67.5 deg)
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            Real gx, gy;
            if (W < 2)
                gx = 0.0;
            else if (x == 0)
                gx = rank.at(1, y) - rank.at(0, y);
            else if (x == W - 1)
                gx = rank.at(x, y) - rank.at(x - 1, y);
            else
                gx = 0.5 * (rank.at(x + 1, y) - rank.at(x - 1, y));
            if (H < 2)
                gy = 0.0;
            else if (y == 0)
                gy = rank.at(x, 1) - rank.at(x, 0);
            else if (y == H - 1)
                gy = rank.at(x, y) - rank.at(x, y - 1);
            else
                gy = 0.5 * (rank.at(x, y + 1) - rank.at(x, y - 1));

            Real ax = std::abs(gx), ay = std::abs(gy);
            if (ax < 1e-15 && ay < 1e-15) {
                keep[score.idx(x, y)] = 1;  // flat: nothing to suppress against
                continue;
            }
            int nx1, ny1, nx2, ny2;
            if (ax >= diag_gate * ay) {
                nx1 = x - 1; ny1 = y; nx2 = x + 1; ny2 = y;
            } else if (ay >= diag_gate * ax) {
                nx1 = x; ny1 = y - 1; nx2 = x; ny2 = y + 1;
            } else if (gx * gy > 0) {
                nx1 = x - 1; ny1 = y - 1; nx2 = x + 1; ny2 = y + 1;
            } else {
                nx1 = x + 1; ny1 = y - 1; nx2 = x - 1; ny2 = y + 1;
            }
            Real r = rank.at(x, y);
            if (r >= rank_at(nx1, ny1) && r >= rank_at(nx2, ny2)) keep[score.idx(x, y)] = 1;
        }
    }
    return keep;
}

std::optional<PRCurve> map_mb(const ScalarMap& pred, const ScalarMap& gt, Real tol,
                              int n_thresholds) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw std::invalid_argument("map_mb: dimension mismatch");
    if (n_thresholds < 2) throw std::invalid_argument("map_mb: need at least 2 thresholds");
    bool gt_any = false;
    for (Real v : gt.v) gt_any |= (v >= 0.5);
    if (!gt_any) return std::nullopt;

    std::vector<std::uint8_t> keep = nms_thin(pred);

    // Candidate scores: surviving pixels with positive score.
    std::vector<Real> scores;
    for (std::size_t i = 0; i < pred.v.size(); ++i)
        if (keep[i] && pred.v[i] > 0.0) scores.push_back(pred.v[i]);

    PRCurve curve;
    if (scores.empty()) {
        curve.thresholds = {1.0};
        curve.precision = {1.0};
        curve.recall = {0.0};
        curve.average_precision = 0.0;
        return curve;
    }
    std::sort(scores.begin(), scores.end());
    scores.erase(std::unique(scores.begin(), scores.end()), scores.end());

    // Rank-uniform threshold selection among the distinct candidate scores.
    std::vector<Real> thresholds;
    int d = static_cast<int>(scores.size());
    if (d <= n_thresholds) {
        thresholds = scores;
    } else {
        for (int k = 0; k < n_thresholds; ++k) {
            int idx = static_cast<int>(std::llround(
                static_cast<double>(k) * (d - 1) / (n_thresholds - 1)));
            thresholds.push_back(scores[idx]);
        }
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    }

    ScalarMap pred_bin(pred.width, pred.height, 0.0, RangeTag::Unit);
    for (Real t : thresholds) {
        for (std::size_t i = 0; i < pred.v.size(); ++i)
            pred_bin.v[i] = (keep[i] && pred.v[i] > 0.0 && pred.v[i] >= t) ? 1.0 : 0.0;
        MatchCounts mc = boundary_match(pred_bin, gt, tol);
        Real prec = (mc.tp + mc.fp) == 0 ? 1.0 : static_cast<Real>(mc.tp) / (mc.tp + mc.fp);
        Real rec = (mc.tp + mc.fn) == 0 ? 1.0 : static_cast<Real>(mc.tp) / (mc.tp + mc.fn);
        curve.thresholds.push_back(t);
        curve.precision.push_back(prec);
        curve.recall.push_back(rec);
    }

    // Step integral over the recall axis, best precision per recall level.
    std::map<Real, Real> best;
    for (std::size_t i = 0; i < curve.recall.size(); ++i) {
        auto [it, fresh] = best.emplace(curve.recall[i], curve.precision[i]);
        if (!fresh) it->second = std::max(it->second, curve.precision[i]);
    }
    Real ap = 0.0, prev_r = 0.0;
    for (const auto& [r, p] : best) {
        ap += (r - prev_r) * p;
        prev_r = r;
    }
    curve.average_precision = ap;
    return curve;
}

namespace {

// 1-D squared distance transform (lower envelope of parabolas).
void dt1d(const std::vector<Real>& f, std::vector<Real>& d, std::vector<int>& vtx,
          std::vector<Real>& z) {
    const int n = static_cast<int>(f.size());
    int k = 0;
    vtx[0] = 0;
    z[0] = -std::numeric_limits<Real>::infinity();
    z[1] = std::numeric_limits<Real>::infinity();
    for (int q = 1; q < n; ++q) {
        Real s;
        while (true) {
            int p = vtx[k];
            s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p);
            if (s <= z[k]) {
                --k;
                continue;
            }
            break;
        }
        ++k;
        vtx[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<Real>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        int p = vtx[k];
        d[q] = (q - p) * static_cast<Real>(q - p) + f[p];
    }
}

}  // namespace

ScalarMap distance_transform(const ScalarMap& source) {
    const int W = source.width, H = source.height;
    const Real INF = 1e18;
    bool any = false;
    for (Real v : source.v) any |= (v >= 0.5);
    ScalarMap out(W, H, 0.0, RangeTag::NonNeg);
    if (!any) {
        Real far = std::sqrt(static_cast<Real>(W) * W + static_cast<Real>(H) * H);
        for (Real& v : out.v) v = far;
        return out;
    }

    std::vector<Real> g(static_cast<std::size_t>(W) * H);
    {
        // Columns first.
        std::vector<Real> f(H), d(H), z(H + 1);
        std::vector<int> vtx(H);
        for (int x = 0; x < W; ++x) {
            for (int y = 0; y < H; ++y) f[y] = source.at(x, y) >= 0.5 ? 0.0 : INF;
            dt1d(f, d, vtx, z);
            for (int y = 0; y < H; ++y) g[source.idx(x, y)] = d[y];
        }
    }
    {
        std::vector<Real> f(W), d(W), z(W + 1);
        std::vector<int> vtx(W);
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) f[x] = g[source.idx(x, y)];
            dt1d(f, d, vtx, z);
            for (int x = 0; x < W; ++x) out.at(x, y) = std::sqrt(d[x]);
        }
    }
    return out;
}

std::vector<StratifiedBin> stratified(const ScalarMap& pred, const ScalarMap& gt,
                                      const ScalarMap& strat_source,
                                      const std::vector<Real>& edges) {
    if (pred.width != gt.width || pred.height != gt.height ||
        pred.width != strat_source.width || pred.height != strat_source.height)
        throw std::invalid_argument("stratified: dimension mismatch");
    if (edges.size() < 2) throw std::invalid_argument("stratified: need at least 2 edges");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (edges[i] <= edges[i - 1])
            throw std::invalid_argument("stratified: edges must be increasing");

    ScalarMap dist = distance_transform(strat_source);
    std::vector<StratifiedBin> out;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        long tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < pred.v.size(); ++i) {
            if (dist.v[i] < edges[k] || dist.v[i] >= edges[k + 1]) continue;
            bool p = pred.v[i] >= 0.5;
            bool g = gt.v[i] >= 0.5;
            tp += (p && g);
            fp += (p && !g);
            tn += (!p && !g);
            fn += (!p && g);
        }
        long total = tp + fp + tn + fn;
        if (total == 0) continue;
        StratifiedBin bin;
        bin.lo = edges[k];
        bin.hi = edges[k + 1];
        bin.count = static_cast<std::size_t>(total);
        if (fp + tn > 0) bin.fpr = static_cast<Real>(fp) / (fp + tn);
        bin.accuracy = static_cast<Real>(tp + tn) / total;
        out.push_back(bin);
    }
    return out;
}

}  // namespace mbocc
