#include "mbocc/net/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mbocc::net {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

struct Taps {
    int x0, y0, x1, y1;
    Real wx, wy;
};

// Border-clamped bilinear footprint; matches mbocc::sample_bilinear.
Taps bilinear_taps(int W, int H, Real x, Real y) {
    x = std::clamp(x, 0.0, static_cast<Real>(W - 1));
    y = std::clamp(y, 0.0, static_cast<Real>(H - 1));
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    if (x0 == W - 1) x0 = std::max(0, W - 2);
    if (y0 == H - 1) y0 = std::max(0, H - 2);
    Taps t;
    t.x0 = x0;
    t.y0 = y0;
    t.x1 = std::min(x0 + 1, W - 1);
    t.y1 = std::min(y0 + 1, H - 1);
    t.wx = x - x0;
    t.wy = y - y0;
    return t;
}

Real taps_sample(const Real* plane, int W, const Taps& t) {
    Real a = plane[static_cast<std::size_t>(t.y0) * W + t.x0];
    Real b = plane[static_cast<std::size_t>(t.y0) * W + t.x1];
    Real c = plane[static_cast<std::size_t>(t.y1) * W + t.x0];
    Real d = plane[static_cast<std::size_t>(t.y1) * W + t.x1];
    Real top = a + t.wx * (b - a);
    Real bot = c + t.wx * (d - c);
    return top + t.wy * (bot - top);
}

void taps_scatter(Real* plane, int W, const Taps& t, Real g) {
    plane[static_cast<std::size_t>(t.y0) * W + t.x0] += g * (1 - t.wx) * (1 - t.wy);
    plane[static_cast<std::size_t>(t.y0) * W + t.x1] += g * t.wx * (1 - t.wy);
    plane[static_cast<std::size_t>(t.y1) * W + t.x0] += g * (1 - t.wx) * t.wy;
    plane[static_cast<std::size_t>(t.y1) * W + t.x1] += g * t.wx * t.wy;
}

// y[co] += sum_ci w[co][ci][k] * shifted x[ci], stride 1, pad 1.
void conv3x3_s1_fwd(const TensorBuf& x, const TensorBuf& w, const TensorBuf& b, TensorBuf& y) {
    const int C = x.shape.c, H = x.shape.h, W = x.shape.w, CO = w.shape.c;
    for (int co = 0; co < CO; ++co) {
        Real* yp = y.plane_ptr(co);
        const Real bias = b.v[co];
        for (std::size_t i = 0; i < y.plane(); ++i) yp[i] = bias;
        for (int ci = 0; ci < C; ++ci) {
            const Real* xp = x.plane_ptr(ci);
            const Real* kk = w.v.data() + (static_cast<std::size_t>(co) * C + ci) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const Real cw = kk[ky * 3 + kx];
                    const int dy = ky - 1, dx = kx - 1;
                    const int ys = dy < 0 ? 1 : 0, ye = dy > 0 ? H - 1 : H;
                    const int xs = dx < 0 ? 1 : 0, xe = dx > 0 ? W - 1 : W;
                    for (int yy = ys; yy < ye; ++yy) {
                        const Real* xr = xp + static_cast<std::size_t>(yy + dy) * W + xs + dx;
                        Real* yr = yp + static_cast<std::size_t>(yy) * W + xs;
                        const int n = xe - xs;
                        for (int xx = 0; xx < n; ++xx) yr[xx] += cw * xr[xx];
                    }
                }
            }
        }
    }
}

// dX accumulation: correlation of dY with the kernel, offsets mirrored.
void conv3x3_s1_bwd_input(const TensorBuf& gy, const TensorBuf& w, TensorBuf& gx) {
    const int C = gx.shape.c, H = gx.shape.h, W = gx.shape.w, CO = w.shape.c;
    for (int co = 0; co < CO; ++co) {
        const Real* gp = gy.plane_ptr(co);
        for (int ci = 0; ci < C; ++ci) {
            Real* xp = gx.plane_ptr(ci);
            const Real* kk = w.v.data() + (static_cast<std::size_t>(co) * C + ci) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const Real cw = kk[ky * 3 + kx];
                    // x[yy+dy][xx+dx] contributed to y[yy][xx]; flip for scatter.
                    const int dy = ky - 1, dx = kx - 1;
                    const int ys = dy < 0 ? 1 : 0, ye = dy > 0 ? H - 1 : H;
                    const int xs = dx < 0 ? 1 : 0, xe = dx > 0 ? W - 1 : W;
                    for (int yy = ys; yy < ye; ++yy) {
                        Real* xr = xp + static_cast<std::size_t>(yy + dy) * W + xs + dx;
                        const Real* gr = gp + static_cast<std::size_t>(yy) * W + xs;
                        const int n = xe - xs;
                        for (int xx = 0; xx < n; ++xx) xr[xx] += cw * gr[xx];
                    }
                }
            }
        }
    }
}

void conv3x3_s1_bwd_weight(const TensorBuf& x, const TensorBuf& gy, TensorBuf& gw,
                           TensorBuf& gb) {
    const int C = x.shape.c, H = x.shape.h, W = x.shape.w, CO = gy.shape.c;
    for (int co = 0; co < CO; ++co) {
        const Real* gp = gy.plane_ptr(co);
        Real bacc = 0.0;
        for (std::size_t i = 0; i < gy.plane(); ++i) bacc += gp[i];
        gb.v[co] += bacc;
        for (int ci = 0; ci < C; ++ci) {
            const Real* xp = x.plane_ptr(ci);
            Real* kk = gw.v.data() + (static_cast<std::size_t>(co) * C + ci) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const int dy = ky - 1, dx = kx - 1;
                    const int ys = dy < 0 ? 1 : 0, ye = dy > 0 ? H - 1 : H;
                    const int xs = dx < 0 ? 1 : 0, xe = dx > 0 ? W - 1 : W;
                    Real acc = 0.0;
                    for (int yy = ys; yy < ye; ++yy) {
                        const Real* xr = xp + static_cast<std::size_t>(yy + dy) * W + xs + dx;
                        const Real* gr = gp + static_cast<std::size_t>(yy) * W + xs;
                        const int n = xe - xs;
                        for (int xx = 0; xx < n; ++xx) acc += xr[xx] * gr[xx];
                    }
                    kk[ky * 3 + kx] += acc;
                }
            }
        }
    }
}

}  // namespace

int Tape::push(TensorBuf val, bool needs_grad, std::function<void(Tape&)> back) {
    Node n;
    n.val = std::move(val);
    n.needs_grad = needs_grad;
    n.back = needs_grad ? std::move(back) : nullptr;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

TensorBuf& Tape::grad_buf(int id) {
    Node& n = nodes_[id];
    if (n.grad.v.empty()) {
        n.grad.shape = n.val.shape;
        n.grad.v.assign(n.val.v.size(), 0.0);
    }
    return n.grad;
}

const TensorBuf& Tape::grad(Var x) const {
    const Node& n = nodes_[x.id];
    if (n.grad.v.empty()) throw std::logic_error("Tape::grad: no gradient recorded");
    return n.grad;
}

const TensorBuf* Tape::grad_of(const std::string& param_name) const {
    auto it = param_ids_.find(param_name);
    if (it == param_ids_.end()) return nullptr;
    const Node& n = nodes_[it->second];
    return n.grad.v.empty() ? nullptr : &n.grad;
}

Var Tape::input(TensorBuf val) { return {push(std::move(val), false, nullptr)}; }

Var Tape::param(const std::string& name, const TensorBuf& val) {
    auto it = param_ids_.find(name);
    if (it != param_ids_.end()) {
        // Same name = same leaf; this is what shares weights across the two
        // temporal directions and across repeated lookups.
        if (!(nodes_[it->second].val.shape == val.shape))
            throw std::logic_error("Tape::param: shape conflict for " + name);
        return {it->second};
    }
    int id = push(val, true, nullptr);
    param_ids_[name] = id;
    return {id};
}

Var Tape::conv3x3(Var x, Var w, Var b, int stride) {
    const TensorBuf& xv = nodes_[x.id].val;
    const TensorBuf& wv = nodes_[w.id].val;
    const TensorBuf& bv = nodes_[b.id].val;
    require(stride == 1 || stride == 2, "conv3x3: stride must be 1 or 2");
    require(wv.shape.h == xv.shape.c && wv.shape.w == 9, "conv3x3: weight shape mismatch");
    require(bv.shape.c == wv.shape.c, "conv3x3: bias shape mismatch");
    const int C = xv.shape.c, H = xv.shape.h, W = xv.shape.w, CO = wv.shape.c;
    const int OH = stride == 1 ? H : (H + 1) / 2;
    const int OW = stride == 1 ? W : (W + 1) / 2;
    TensorBuf y(CO, OH, OW);
    if (stride == 1) {
        conv3x3_s1_fwd(xv, wv, bv, y);
    } else {
        for (int co = 0; co < CO; ++co) {
            for (int oy = 0; oy < OH; ++oy) {
                for (int ox = 0; ox < OW; ++ox) {
                    Real acc = bv.v[co];
                    for (int ci = 0; ci < C; ++ci) {
                        const Real* xp = xv.plane_ptr(ci);
                        const Real* kk = wv.v.data() + (static_cast<std::size_t>(co) * C + ci) * 9;
                        for (int ky = 0; ky < 3; ++ky) {
                            int yy = 2 * oy + ky - 1;
                            if (yy < 0 || yy >= H) continue;
                            for (int kx = 0; kx < 3; ++kx) {
                                int xx = 2 * ox + kx - 1;
                                if (xx < 0 || xx >= W) continue;
                                acc += kk[ky * 3 + kx] * xp[static_cast<std::size_t>(yy) * W + xx];
                            }
                        }
                    }
                    y.at(co, oy, ox) = acc;
                }
            }
        }
    }
    bool ng = nodes_[x.id].needs_grad || nodes_[w.id].needs_grad || nodes_[b.id].needs_grad;
    int xid = x.id, wid = w.id, bid = b.id;
    int yid = push(std::move(y), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [xid, wid, bid, yid, stride, C, H, W, CO, OH, OW](Tape& t) {
            const TensorBuf& gy = t.nodes_[yid].grad;
            const TensorBuf& xv = t.nodes_[xid].val;
            const TensorBuf& wv = t.nodes_[wid].val;
            if (stride == 1) {
                if (t.nodes_[xid].needs_grad)
                    conv3x3_s1_bwd_input(gy, wv, t.grad_buf(xid));
                if (t.nodes_[wid].needs_grad || t.nodes_[bid].needs_grad)
                    conv3x3_s1_bwd_weight(xv, gy, t.grad_buf(wid), t.grad_buf(bid));
                return;
            }
            TensorBuf* gx = t.nodes_[xid].needs_grad ? &t.grad_buf(xid) : nullptr;
            TensorBuf* gw = t.nodes_[wid].needs_grad ? &t.grad_buf(wid) : nullptr;
            TensorBuf* gb = t.nodes_[bid].needs_grad ? &t.grad_buf(bid) : nullptr;
            for (int co = 0; co < CO; ++co) {
                for (int oy = 0; oy < OH; ++oy) {
                    for (int ox = 0; ox < OW; ++ox) {
                        Real g = gy.at(co, oy, ox);
                        if (g == 0.0) continue;
                        if (gb) gb->v[co] += g;
                        for (int ci = 0; ci < C; ++ci) {
                            for (int ky = 0; ky < 3; ++ky) {
                                int yy = 2 * oy + ky - 1;
                                if (yy < 0 || yy >= H) continue;
                                for (int kx = 0; kx < 3; ++kx) {
                                    int xx = 2 * ox + kx - 1;
                                    if (xx < 0 || xx >= W) continue;
                                    std::size_t wi = (static_cast<std::size_t>(co) * C + ci) * 9 +
                                                     ky * 3 + kx;
                                    if (gx)
                                        gx->at(ci, yy, xx) += wv.v[wi] * g;
                                    if (gw) gw->v[wi] += xv.at(ci, yy, xx) * g;
                                }
                            }
                        }
                    }
                }
            }
        };
    }
    return {yid};
}

Var Tape::conv1x1(Var x, Var w, Var b) {
    const TensorBuf& xv = nodes_[x.id].val;
    const TensorBuf& wv = nodes_[w.id].val;
    const TensorBuf& bv = nodes_[b.id].val;
    require(wv.shape.h == xv.shape.c && wv.shape.w == 1, "conv1x1: weight shape mismatch");
    const int C = xv.shape.c, H = xv.shape.h, W = xv.shape.w, CO = wv.shape.c;
    TensorBuf y(CO, H, W);
    for (int co = 0; co < CO; ++co) {
        Real* yp = y.plane_ptr(co);
        const Real bias = bv.v[co];
        for (std::size_t i = 0; i < y.plane(); ++i) yp[i] = bias;
        for (int ci = 0; ci < C; ++ci) {
            const Real cw = wv.v[static_cast<std::size_t>(co) * C + ci];
            const Real* xp = xv.plane_ptr(ci);
            for (std::size_t i = 0; i < y.plane(); ++i) yp[i] += cw * xp[i];
        }
    }
    bool ng = nodes_[x.id].needs_grad || nodes_[w.id].needs_grad || nodes_[b.id].needs_grad;
    int xid = x.id, wid = w.id, bid = b.id;
    int yid = push(std::move(y), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [xid, wid, bid, yid, C, CO](Tape& t) {
            const TensorBuf& gy = t.nodes_[yid].grad;
            const TensorBuf& xv = t.nodes_[xid].val;
            const TensorBuf& wv = t.nodes_[wid].val;
            std::size_t plane = xv.plane();
            if (t.nodes_[xid].needs_grad) {
                TensorBuf& gx = t.grad_buf(xid);
                for (int co = 0; co < CO; ++co) {
                    const Real* gp = gy.plane_ptr(co);
                    for (int ci = 0; ci < C; ++ci) {
                        const Real cw = wv.v[static_cast<std::size_t>(co) * C + ci];
                        Real* xp = gx.plane_ptr(ci);
                        for (std::size_t i = 0; i < plane; ++i) xp[i] += cw * gp[i];
                    }
                }
            }
            if (t.nodes_[wid].needs_grad || t.nodes_[bid].needs_grad) {
                TensorBuf& gw = t.grad_buf(wid);
                TensorBuf& gb = t.grad_buf(bid);
                for (int co = 0; co < CO; ++co) {
                    const Real* gp = gy.plane_ptr(co);
                    Real bacc = 0.0;
                    for (std::size_t i = 0; i < plane; ++i) bacc += gp[i];
                    gb.v[co] += bacc;
                    for (int ci = 0; ci < C; ++ci) {
                        const Real* xp = xv.plane_ptr(ci);
                        Real acc = 0.0;
                        for (std::size_t i = 0; i < plane; ++i) acc += xp[i] * gp[i];
                        gw.v[static_cast<std::size_t>(co) * C + ci] += acc;
                    }
                }
            }
        };
    }
    return {yid};
}

Var Tape::deconv1(Var x, Var w, Var b, int stride, int ksize, int pad, int out_h, int out_w) {
    const TensorBuf& xv = nodes_[x.id].val;
    const TensorBuf& wv = nodes_[w.id].val;
    require(xv.shape.c == 1, "deconv1: expects 1 channel");
    require(wv.shape.c == 1 && wv.shape.h == ksize && wv.shape.w == ksize,
            "deconv1: weight shape mismatch");
    const int H = xv.shape.h, W = xv.shape.w;
    TensorBuf y(1, out_h, out_w, nodes_[b.id].val.v[0]);
    for (int yi = 0; yi < H; ++yi) {
        for (int xi = 0; xi < W; ++xi) {
            Real v = xv.at(0, yi, xi);
            for (int ky = 0; ky < ksize; ++ky) {
                int oy = yi * stride + ky - pad;
                if (oy < 0 || oy >= out_h) continue;
                for (int kx = 0; kx < ksize; ++kx) {
                    int ox = xi * stride + kx - pad;
                    if (ox < 0 || ox >= out_w) continue;
                    y.at(0, oy, ox) += wv.at(0, ky, kx) * v;
                }
            }
        }
    }
    bool ng = nodes_[x.id].needs_grad || nodes_[w.id].needs_grad || nodes_[b.id].needs_grad;
    int xid = x.id, wid = w.id, bid = b.id;
    int yid = push(std::move(y), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [xid, wid, bid, yid, stride, ksize, pad, out_h, out_w, H, W](Tape& t) {
            const TensorBuf& gy = t.nodes_[yid].grad;
            const TensorBuf& xv = t.nodes_[xid].val;
            const TensorBuf& wv = t.nodes_[wid].val;
            TensorBuf* gx = t.nodes_[xid].needs_grad ? &t.grad_buf(xid) : nullptr;
            TensorBuf* gw = t.nodes_[wid].needs_grad ? &t.grad_buf(wid) : nullptr;
            if (t.nodes_[bid].needs_grad) {
                Real acc = 0.0;
                for (Real g : gy.v) acc += g;
                t.grad_buf(bid).v[0] += acc;
            }
            for (int yi = 0; yi < H; ++yi) {
                for (int xi = 0; xi < W; ++xi) {
                    Real xval = xv.at(0, yi, xi);
                    Real gacc = 0.0;
                    for (int ky = 0; ky < ksize; ++ky) {
                        int oy = yi * stride + ky - pad;
                        if (oy < 0 || oy >= out_h) continue;
                        for (int kx = 0; kx < ksize; ++kx) {
                            int ox = xi * stride + kx - pad;
                            if (ox < 0 || ox >= out_w) continue;
                            Real g = gy.at(0, oy, ox);
                            gacc += wv.at(0, ky, kx) * g;
                            if (gw) gw->at(0, ky, kx) += xval * g;
                        }
                    }
                    if (gx) gx->at(0, yi, xi) += gacc;
                }
            }
        };
    }
    return {yid};
}

Var Tape::leaky_relu(Var x, Real slope) {
    const TensorBuf& xv = nodes_[x.id].val;
    TensorBuf y = xv;
    for (Real& v : y.v)
        if (v < 0) v *= slope;
    bool ng = nodes_[x.id].needs_grad;
    int xid = x.id;
    int yid = push(std::move(y), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [xid, yid, slope](Tape& t) {
            const TensorBuf& gy = t.nodes_[yid].grad;
            const TensorBuf& xv = t.nodes_[xid].val;
            TensorBuf& gx = t.grad_buf(xid);
            for (std::size_t i = 0; i < gy.v.size(); ++i)
                gx.v[i] += xv.v[i] >= 0 ? gy.v[i] : slope * gy.v[i];
        };
    }
    return {yid};
}

Var Tape::sigmoid(Var x) {
    const TensorBuf& xv = nodes_[x.id].val;
    TensorBuf y = xv;
    for (Real& v : y.v) {
        if (v >= 0) {
            v = 1.0 / (1.0 + std::exp(-v));
        } else {
            Real e = std::exp(v);
            v = e / (1.0 + e);
        }
    }
    bool ng = nodes_[x.id].needs_grad;
    int xid = x.id;
    int yid = push(std::move(y), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [xid, yid](Tape& t) {
            const TensorBuf& gy = t.nodes_[yid].grad;
            const TensorBuf& yv = t.nodes_[yid].val;
            TensorBuf& gx = t.grad_buf(xid);
            for (std::size_t i = 0; i < gy.v.size(); ++i)
                gx.v[i] += gy.v[i] * yv.v[i] * (1.0 - yv.v[i]);
        };
    }
    return {yid};
}

Var Tape::add(Var a, Var b) {
    const TensorBuf& av = nodes_[a.id].val;
    const TensorBuf& bv = nodes_[b.id].val;
    require(av.shape == bv.shape, "add: shape mismatch");
    TensorBuf y = av;
    for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += bv.v[i];
    bool ng = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
    int aid = a.id, bid = b.id;
    int yid = push(std::move(y), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [aid, bid, yid](Tape& t) {
            const TensorBuf& gy = t.nodes_[yid].grad;
            if (t.nodes_[aid].needs_grad) {
                TensorBuf& ga = t.grad_buf(aid);
                for (std::size_t i = 0; i < gy.v.size(); ++i) ga.v[i] += gy.v[i];
            }
            if (t.nodes_[bid].needs_grad) {
                TensorBuf& gb = t.grad_buf(bid);
                for (std::size_t i = 0; i < gy.v.size(); ++i) gb.v[i] += gy.v[i];
            }
        };
    }
    return {yid};
}

Var Tape::add_const(Var a, Real c) {
    TensorBuf y = nodes_[a.id].val;
    for (Real& v : y.v) v += c;
    bool ng = nodes_[a.id].needs_grad;
    int aid = a.id;
    int yid = push(std::move(y), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [aid, yid](Tape& t) {
            const TensorBuf& gy = t.nodes_[yid].grad;
            TensorBuf& ga = t.grad_buf(aid);
            for (std::size_t i = 0; i < gy.v.size(); ++i) ga.v[i] += gy.v[i];
        };
    }
    return {yid};
}

Var Tape::concat(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat: empty");
    int H = nodes_[parts[0].id].val.shape.h;
    int W = nodes_[parts[0].id].val.shape.w;
    int C = 0;
    bool ng = false;
    for (Var p : parts) {
        const auto& s = nodes_[p.id].val.shape;
        require(s.h == H && s.w == W, "concat: spatial mismatch");
        C += s.c;
        ng = ng || nodes_[p.id].needs_grad;
    }
    TensorBuf y(C, H, W);
    int at = 0;
    for (Var p : parts) {
        const TensorBuf& pv = nodes_[p.id].val;
        std::copy(pv.v.begin(), pv.v.end(), y.plane_ptr(at));
        at += pv.shape.c;
    }
    std::vector<int> ids;
    for (Var p : parts) ids.push_back(p.id);
    int yid = push(std::move(y), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [ids, yid](Tape& t) {
            const TensorBuf& gy = t.nodes_[yid].grad;
            int at = 0;
            for (int pid : ids) {
                int pc = t.nodes_[pid].val.shape.c;
                if (t.nodes_[pid].needs_grad) {
                    TensorBuf& gp = t.grad_buf(pid);
                    const Real* src = gy.plane_ptr(at);
                    for (std::size_t i = 0; i < gp.v.size(); ++i) gp.v[i] += src[i];
                }
                at += pc;
            }
        };
    }
    return {yid};
}

Var Tape::hadamard_broadcast(Var x, Var a) {
    const TensorBuf& xv = nodes_[x.id].val;
    const TensorBuf& av = nodes_[a.id].val;
    require(av.shape.c == 1 && av.shape.h == xv.shape.h && av.shape.w == xv.shape.w,
            "hadamard_broadcast: attention must be (1,H,W)");
    TensorBuf y = xv;
    for (int c = 0; c < xv.shape.c; ++c) {
        Real* yp = y.plane_ptr(c);
        const Real* ap = av.v.data();
        for (std::size_t i = 0; i < y.plane(); ++i) yp[i] *= ap[i];
    }
    bool ng = nodes_[x.id].needs_grad || nodes_[a.id].needs_grad;
    int xid = x.id, aid = a.id;
    int yid = push(std::move(y), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [xid, aid, yid](Tape& t) {
            const TensorBuf& gy = t.nodes_[yid].grad;
            const TensorBuf& xv = t.nodes_[xid].val;
            const TensorBuf& av = t.nodes_[aid].val;
            std::size_t plane = xv.plane();
            if (t.nodes_[xid].needs_grad) {
                TensorBuf& gx = t.grad_buf(xid);
                for (int c = 0; c < xv.shape.c; ++c) {
                    const Real* gp = gy.plane_ptr(c);
                    Real* xp = gx.plane_ptr(c);
                    for (std::size_t i = 0; i < plane; ++i) xp[i] += gp[i] * av.v[i];
                }
            }
            if (t.nodes_[aid].needs_grad) {
                TensorBuf& ga = t.grad_buf(aid);
                for (int c = 0; c < xv.shape.c; ++c) {
                    const Real* gp = gy.plane_ptr(c);
                    const Real* xp = xv.plane_ptr(c);
                    for (std::size_t i = 0; i < plane; ++i) ga.v[i] += gp[i] * xp[i];
                }
            }
        };
    }
    return {yid};
}

Var Tape::avgpool2(Var x) {
    const TensorBuf& xv = nodes_[x.id].val;
    const int C = xv.shape.c, H = xv.shape.h, W = xv.shape.w;
    const int OH = (H + 1) / 2, OW = (W + 1) / 2;
    TensorBuf y(C, OH, OW);
    for (int c = 0; c < C; ++c)
        for (int oy = 0; oy < OH; ++oy)
            for (int ox = 0; ox < OW; ++ox) {
                Real acc = 0.0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx)
                        acc += xv.at(c, std::min(2 * oy + dy, H - 1), std::min(2 * ox + dx, W - 1));
                y.at(c, oy, ox) = acc * 0.25;
            }
    bool ng = nodes_[x.id].needs_grad;
    int xid = x.id;
    int yid = push(std::move(y), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [xid, yid, C, H, W, OH, OW](Tape& t) {
            const TensorBuf& gy = t.nodes_[yid].grad;
            TensorBuf& gx = t.grad_buf(xid);
            for (int c = 0; c < C; ++c)
                for (int oy = 0; oy < OH; ++oy)
                    for (int ox = 0; ox < OW; ++ox) {
                        Real g = 0.25 * gy.at(c, oy, ox);
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx)
                                gx.at(c, std::min(2 * oy + dy, H - 1),
                                      std::min(2 * ox + dx, W - 1)) += g;
                    }
        };
    }
    return {yid};
}

Var Tape::bilinear_resize(Var x, int out_h, int out_w) {
    const TensorBuf& xv = nodes_[x.id].val;
    const int C = xv.shape.c, H = xv.shape.h, W = xv.shape.w;
    TensorBuf y(C, out_h, out_w);
    Real sx = out_w > 1 ? static_cast<Real>(W - 1) / (out_w - 1) : 0.0;
    Real sy = out_h > 1 ? static_cast<Real>(H - 1) / (out_h - 1) : 0.0;
    for (int c = 0; c < C; ++c) {
        const Real* xp = xv.plane_ptr(c);
        for (int oy = 0; oy < out_h; ++oy)
            for (int ox = 0; ox < out_w; ++ox)
                y.at(c, oy, ox) = taps_sample(xp, W, bilinear_taps(W, H, ox * sx, oy * sy));
    }
    bool ng = nodes_[x.id].needs_grad;
    int xid = x.id;
    int yid = push(std::move(y), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [xid, yid, C, H, W, out_h, out_w, sx, sy](Tape& t) {
            const TensorBuf& gy = t.nodes_[yid].grad;
            TensorBuf& gx = t.grad_buf(xid);
            for (int c = 0; c < C; ++c) {
                Real* gp = gx.plane_ptr(c);
                for (int oy = 0; oy < out_h; ++oy)
                    for (int ox = 0; ox < out_w; ++ox)
                        taps_scatter(gp, W, bilinear_taps(W, H, ox * sx, oy * sy),
                                     gy.at(c, oy, ox));
            }
        };
    }
    return {yid};
}

namespace {

// Central differences inside, one-sided at the borders; shared by the
// forward and backward passes of grad_mag.
void map_diffs(const TensorBuf& m, int x0, int y0, int W, int H, Real& gx, Real& gy) {
    if (x0 == 0)
        gx = m.at(0, y0, 1) - m.at(0, y0, 0);
    else if (x0 == W - 1)
        gx = m.at(0, y0, x0) - m.at(0, y0, x0 - 1);
    else
        gx = 0.5 * (m.at(0, y0, x0 + 1) - m.at(0, y0, x0 - 1));
    if (y0 == 0)
        gy = m.at(0, 1, x0) - m.at(0, 0, x0);
    else if (y0 == H - 1)
        gy = m.at(0, y0, x0) - m.at(0, y0 - 1, x0);
    else
        gy = 0.5 * (m.at(0, y0 + 1, x0) - m.at(0, y0 - 1, x0));
}

}  // namespace

Var Tape::grad_mag(Var x, Real eps) {
    const TensorBuf& xv = nodes_[x.id].val;
    require(xv.shape.c == 1, "grad_mag: expects 1 channel");
    require(xv.shape.h >= 2 && xv.shape.w >= 2, "grad_mag: needs H, W >= 2");
    const int H = xv.shape.h, W = xv.shape.w;
    TensorBuf y(1, H, W);
    for (int yy = 0; yy < H; ++yy)
        for (int xx = 0; xx < W; ++xx) {
            Real gx, gy;
            map_diffs(xv, xx, yy, W, H, gx, gy);
            y.at(0, yy, xx) = std::sqrt(gx * gx + gy * gy + eps);
        }
    bool ng = nodes_[x.id].needs_grad;
    int xid = x.id;
    int yid = push(std::move(y), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [xid, yid, H, W](Tape& t) {
            const TensorBuf& gout = t.nodes_[yid].grad;
            const TensorBuf& yv = t.nodes_[yid].val;
            const TensorBuf& xv = t.nodes_[xid].val;
            TensorBuf& gin = t.grad_buf(xid);
            auto addx = [&](int x0, int y0, Real g) { gin.at(0, y0, x0) += g; };
            for (int yy = 0; yy < H; ++yy) {
                for (int xx = 0; xx < W; ++xx) {
                    Real gx, gy;
                    map_diffs(xv, xx, yy, W, H, gx, gy);
                    Real denom = yv.at(0, yy, xx);
                    Real fx = gout.at(0, yy, xx) * gx / denom;
                    Real fy = gout.at(0, yy, xx) * gy / denom;
                    if (xx == 0) {
                        addx(1, yy, fx);
                        addx(0, yy, -fx);
                    } else if (xx == W - 1) {
                        addx(xx, yy, fx);
                        addx(xx - 1, yy, -fx);
                    } else {
                        addx(xx + 1, yy, 0.5 * fx);
                        addx(xx - 1, yy, -0.5 * fx);
                    }
                    if (yy == 0) {
                        addx(xx, 1, fy);
                        addx(xx, 0, -fy);
                    } else if (yy == H - 1) {
                        addx(xx, yy, fy);
                        addx(xx, yy - 1, -fy);
                    } else {
                        addx(xx, yy + 1, 0.5 * fy);
                        addx(xx, yy - 1, -0.5 * fy);
                    }
                }
            }
        };
    }
    return {yid};
}

Var Tape::warp_direct_max(Var x, std::shared_ptr<const FlowField> flow, TensorBuf* out_mask) {
    const TensorBuf& xv = nodes_[x.id].val;
    require(xv.shape.c == 1, "warp_direct_max: expects 1 channel");
    const int H = xv.shape.h, W = xv.shape.w;
    require(flow->width == W && flow->height == H, "warp_direct_max: flow size mismatch");
    TensorBuf y(1, H, W);
    std::vector<int> argmax(static_cast<std::size_t>(H) * W, -1);
    for (int yy = 0; yy < H; ++yy) {
        for (int xx = 0; xx < W; ++xx) {
            long tx = std::lround(xx + flow->ux(xx, yy));
            long ty = std::lround(yy + flow->vy(xx, yy));
            if (tx < 0 || tx >= W || ty < 0 || ty >= H) continue;
            std::size_t t = static_cast<std::size_t>(ty) * W + tx;
            std::size_t s = static_cast<std::size_t>(yy) * W + xx;
            Real v = xv.v[s];
            if (argmax[t] < 0 || v > y.v[t]) {
                y.v[t] = v;
                argmax[t] = static_cast<int>(s);
            }
        }
    }
    if (out_mask) {
        *out_mask = TensorBuf(1, H, W);
        for (std::size_t i = 0; i < argmax.size(); ++i) out_mask->v[i] = argmax[i] >= 0 ? 1.0 : 0.0;
    }
    bool ng = nodes_[x.id].needs_grad;
    int xid = x.id;
    int yid = push(std::move(y), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [xid, yid, argmax = std::move(argmax)](Tape& t) {
            const TensorBuf& gy = t.nodes_[yid].grad;
            TensorBuf& gx = t.grad_buf(xid);
            for (std::size_t i = 0; i < argmax.size(); ++i)
                if (argmax[i] >= 0) gx.v[argmax[i]] += gy.v[i];
        };
    }
    return {yid};
}

Var Tape::warp_reverse(Var x, std::shared_ptr<const FlowField> flow) {
    const TensorBuf& xv = nodes_[x.id].val;
    require(xv.shape.c == 1, "warp_reverse: expects 1 channel");
    const int H = xv.shape.h, W = xv.shape.w;
    require(flow->width == W && flow->height == H, "warp_reverse: flow size mismatch");
    TensorBuf y(1, H, W);
    for (int yy = 0; yy < H; ++yy)
        for (int xx = 0; xx < W; ++xx)
            y.at(0, yy, xx) = taps_sample(
                xv.v.data(), W,
                bilinear_taps(W, H, xx + flow->ux(xx, yy), yy + flow->vy(xx, yy)));
    bool ng = nodes_[x.id].needs_grad;
    int xid = x.id;
    int yid = push(std::move(y), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [xid, yid, flow, H, W](Tape& t) {
            const TensorBuf& gy = t.nodes_[yid].grad;
            TensorBuf& gx = t.grad_buf(xid);
            for (int yy = 0; yy < H; ++yy)
                for (int xx = 0; xx < W; ++xx)
                    taps_scatter(gx.v.data(), W,
                                 bilinear_taps(W, H, xx + flow->ux(xx, yy), yy + flow->vy(xx, yy)),
                                 gy.at(0, yy, xx));
        };
    }
    return {yid};
}

Var Tape::cost_block_min(Var fa, Var fb, std::shared_ptr<const FlowField> flow, int radius,
                         Real eps) {
    const TensorBuf& av = nodes_[fa.id].val;
    const TensorBuf& bv = nodes_[fb.id].val;
    require(av.shape == bv.shape, "cost_block_min: shape mismatch");
    require(radius >= 0, "cost_block_min: negative radius");
    const int C = av.shape.c, H = av.shape.h, W = av.shape.w;
    require(flow->width == W && flow->height == H, "cost_block_min: flow size mismatch");
    TensorBuf y(1, H, W);
    std::vector<std::pair<std::int8_t, std::int8_t>> best(static_cast<std::size_t>(H) * W);
    for (int yy = 0; yy < H; ++yy) {
        for (int xx = 0; xx < W; ++xx) {
            Real cx = xx + flow->ux(xx, yy);
            Real cy = yy + flow->vy(xx, yy);
            Real best_ssd = std::numeric_limits<Real>::infinity();
            int bdx = 0, bdy = 0;
            for (int dy = -radius; dy <= radius; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    Taps taps = bilinear_taps(W, H, cx + dx, cy + dy);
                    Real ssd = 0.0;
                    for (int c = 0; c < C; ++c) {
                        Real s = taps_sample(bv.plane_ptr(c), W, taps);
                        Real d = av.at(c, yy, xx) - s;
                        ssd += d * d;
                    }
                    if (ssd < best_ssd) {
                        best_ssd = ssd;
                        bdx = dx;
                        bdy = dy;
                    }
                }
            }
            best[static_cast<std::size_t>(yy) * W + xx] = {static_cast<std::int8_t>(bdx),
                                                           static_cast<std::int8_t>(bdy)};
            y.at(0, yy, xx) = std::sqrt(best_ssd + eps);
        }
    }
    bool ng = nodes_[fa.id].needs_grad || nodes_[fb.id].needs_grad;
    int aid = fa.id, bid = fb.id;
    int yid = push(std::move(y), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [aid, bid, yid, flow, C, H, W, best = std::move(best)](Tape& t) {
            const TensorBuf& gy = t.nodes_[yid].grad;
            const TensorBuf& yv = t.nodes_[yid].val;
            const TensorBuf& av = t.nodes_[aid].val;
            const TensorBuf& bv = t.nodes_[bid].val;
            TensorBuf* ga = t.nodes_[aid].needs_grad ? &t.grad_buf(aid) : nullptr;
            TensorBuf* gb = t.nodes_[bid].needs_grad ? &t.grad_buf(bid) : nullptr;
            for (int yy = 0; yy < H; ++yy) {
                for (int xx = 0; xx < W; ++xx) {
                    std::size_t i = static_cast<std::size_t>(yy) * W + xx;
                    Real g = gy.v[i];
                    if (g == 0.0) continue;
                    auto [bdx, bdy] = best[i];
                    Taps taps = bilinear_taps(W, H, xx + flow->ux(xx, yy) + bdx,
                                              yy + flow->vy(xx, yy) + bdy);
                    Real denom = yv.v[i];
                    for (int c = 0; c < C; ++c) {
                        Real s = taps_sample(bv.plane_ptr(c), W, taps);
                        Real diff = av.at(c, yy, xx) - s;
                        Real f = g * diff / denom;
                        if (ga) ga->at(c, yy, xx) += f;
                        if (gb) taps_scatter(gb->plane_ptr(c), W, taps, -f);
                    }
                }
            }
        };
    }
    return {yid};
}

Var Tape::focal_loss(Var pred, std::shared_ptr<const TensorBuf> target, Real gamma, Real alpha,
                     Real clamp_eps) {
    const TensorBuf& pv = nodes_[pred.id].val;
    require(target->shape == pv.shape, "focal_loss: target shape mismatch");
    const std::size_t n = pv.v.size();
    Real acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Real p = std::clamp(pv.v[i], clamp_eps, 1.0 - clamp_eps);
        bool pos = target->v[i] >= 0.5;
        Real pt = pos ? p : 1.0 - p;
        Real at = pos ? alpha : 1.0 - alpha;
        acc += -at * std::pow(1.0 - pt, gamma) * std::log(pt);
    }
    TensorBuf y(1, 1, 1, acc / static_cast<Real>(n));
    bool ng = nodes_[pred.id].needs_grad;
    int pid = pred.id;
    int yid = push(std::move(y), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [pid, yid, target, gamma, alpha, clamp_eps, n](Tape& t) {
            Real gout = t.nodes_[yid].grad.v[0] / static_cast<Real>(n);
            const TensorBuf& pv = t.nodes_[pid].val;
            TensorBuf& gp = t.grad_buf(pid);
            for (std::size_t i = 0; i < n; ++i) {
                Real raw = pv.v[i];
                if (raw <= clamp_eps || raw >= 1.0 - clamp_eps) continue;  // clamp kills grad
                Real p = raw;
                bool pos = target->v[i] >= 0.5;
                Real d;
                if (pos) {
                    Real gterm = gamma > 0 ? gamma * std::pow(1.0 - p, gamma - 1.0) * std::log(p)
                                           : 0.0;
                    d = alpha * (gterm - std::pow(1.0 - p, gamma) / p);
                } else {
                    Real gterm = gamma > 0 ? gamma * std::pow(p, gamma - 1.0) * std::log(1.0 - p)
                                           : 0.0;
                    d = (1.0 - alpha) * (-gterm + std::pow(p, gamma) / (1.0 - p));
                }
                gp.v[i] += gout * d;
            }
        };
    }
    return {yid};
}

Var Tape::weighted_sum(const std::vector<Var>& scalars, const std::vector<Real>& weights) {
    require(!scalars.empty() && scalars.size() == weights.size(), "weighted_sum: bad arity");
    Real acc = 0.0;
    bool ng = false;
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        const TensorBuf& sv = nodes_[scalars[i].id].val;
        require(sv.v.size() == 1, "weighted_sum: inputs must be scalars");
        acc += weights[i] * sv.v[0];
        ng = ng || nodes_[scalars[i].id].needs_grad;
    }
    std::vector<int> ids;
    for (Var s : scalars) ids.push_back(s.id);
    int yid = push(TensorBuf(1, 1, 1, acc), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [ids, weights, yid](Tape& t) {
            Real g = t.nodes_[yid].grad.v[0];
            for (std::size_t i = 0; i < ids.size(); ++i)
                if (t.nodes_[ids[i]].needs_grad) t.grad_buf(ids[i]).v[0] += weights[i] * g;
        };
    }
    return {yid};
}

Var Tape::dot_const(Var x, std::shared_ptr<const TensorBuf> w) {
    const TensorBuf& xv = nodes_[x.id].val;
    require(w->shape == xv.shape, "dot_const: shape mismatch");
    Real acc = 0.0;
    for (std::size_t i = 0; i < xv.v.size(); ++i) acc += xv.v[i] * w->v[i];
    bool ng = nodes_[x.id].needs_grad;
    int xid = x.id;
    int yid = push(TensorBuf(1, 1, 1, acc), ng, nullptr);
    if (ng) {
        nodes_[yid].back = [xid, yid, w](Tape& t) {
            Real g = t.nodes_[yid].grad.v[0];
            TensorBuf& gx = t.grad_buf(xid);
            for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += g * w->v[i];
        };
    }
    return {yid};
}

void Tape::backward(Var loss) {
    require(nodes_[loss.id].val.v.size() == 1, "backward: loss must be scalar");
    grad_buf(loss.id).v[0] = 1.0;
    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.back && !n.grad.v.empty()) n.back(*this);
    }
}

}  // namespace mbocc::net
