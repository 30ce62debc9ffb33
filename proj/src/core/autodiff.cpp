#include "core/autodiff.hpp"

#include <cmath>
#include <unordered_set>

namespace semples {

namespace {

Var make_node(Tensor val, std::vector<Var> parents, std::function<void(Node&)> back) {
    auto n = std::make_shared<Node>();
    n->val = std::move(val);
    n->parents = std::move(parents);
    for (const auto& p : n->parents)
        if (p->requires_grad) n->requires_grad = true;
    if (n->requires_grad) n->back = std::move(back);
    return n;
}

void ensure_grad(const Var& n) {
    if (n->grad.v.empty()) n->grad = Tensor::zeros(n->val.shape);
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a->val.same_shape(b->val))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a->val.shape) +
                                    " vs " + shape_str(b->val.shape));
}

}  // namespace

Var leaf(Tensor t, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->val = std::move(t);
    n->requires_grad = requires_grad;
    return n;
}

Var detach(const Var& a) { return leaf(a->val, false); }

void backward(const Var& root) {
    if (root->val.size() != 1) throw std::logic_error("backward: root must be scalar");
    // Postorder DFS gives children before parents; reverse for accumulation.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [n, i] = stack.back();
        if (i < n->parents.size()) {
            Node* p = n->parents[i++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    ensure_grad(root);
    root->grad.v[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->back) {
            for (const auto& p : n->parents)
                if (p->requires_grad) ensure_grad(p);
            n->back(*n);
        }
    }
}

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor out = a->val;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += b->val.v[i];
    return make_node(std::move(out), {a, b}, [](Node& n) {
        for (int s = 0; s < 2; ++s) {
            auto& p = n.parents[s];
            if (!p->requires_grad) continue;
            for (std::size_t i = 0; i < n.grad.size(); ++i) p->grad.v[i] += n.grad.v[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor out = a->val;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] -= b->val.v[i];
    return make_node(std::move(out), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad)
            for (std::size_t i = 0; i < n.grad.size(); ++i) n.parents[0]->grad.v[i] += n.grad.v[i];
        if (n.parents[1]->requires_grad)
            for (std::size_t i = 0; i < n.grad.size(); ++i) n.parents[1]->grad.v[i] -= n.grad.v[i];
    });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Tensor out = a->val;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= b->val.v[i];
    return make_node(std::move(out), {a, b}, [](Node& n) {
        auto& a = n.parents[0];
        auto& b = n.parents[1];
        if (a->requires_grad)
            for (std::size_t i = 0; i < n.grad.size(); ++i) a->grad.v[i] += n.grad.v[i] * b->val.v[i];
        if (b->requires_grad)
            for (std::size_t i = 0; i < n.grad.size(); ++i) b->grad.v[i] += n.grad.v[i] * a->val.v[i];
    });
}

Var scale(const Var& a, double c) {
    Tensor out = a->val;
    for (double& x : out.v) x *= c;
    return make_node(std::move(out), {a}, [c](Node& n) {
        auto& a = n.parents[0];
        for (std::size_t i = 0; i < n.grad.size(); ++i) a->grad.v[i] += c * n.grad.v[i];
    });
}

Var one_minus(const Var& a) {
    Tensor out = a->val;
    for (double& x : out.v) x = 1.0 - x;
    return make_node(std::move(out), {a}, [](Node& n) {
        auto& a = n.parents[0];
        for (std::size_t i = 0; i < n.grad.size(); ++i) a->grad.v[i] -= n.grad.v[i];
    });
}

Var log_op(const Var& a) {
    Tensor out = a->val;
    for (double& x : out.v) {
        if (x <= 0.0) throw NumericError("log of non-positive value");
        x = std::log(x);
    }
    return make_node(std::move(out), {a}, [](Node& n) {
        auto& a = n.parents[0];
        for (std::size_t i = 0; i < n.grad.size(); ++i) a->grad.v[i] += n.grad.v[i] / a->val.v[i];
    });
}

Var clamp_min(const Var& a, double lo) {
    Tensor out = a->val;
    for (double& x : out.v) x = std::max(x, lo);
    return make_node(std::move(out), {a}, [lo](Node& n) {
        auto& a = n.parents[0];
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            if (a->val.v[i] >= lo) a->grad.v[i] += n.grad.v[i];
    });
}

Var relu(const Var& a) {
    Tensor out = a->val;
    for (double& x : out.v) x = std::max(x, 0.0);
    return make_node(std::move(out), {a}, [](Node& n) {
        auto& a = n.parents[0];
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            if (a->val.v[i] > 0.0) a->grad.v[i] += n.grad.v[i];
    });
}

Var sigmoid(const Var& a) {
    Tensor out = a->val;
    for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
    return make_node(std::move(out), {a}, [](Node& n) {
        auto& a = n.parents[0];
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            double s = n.val.v[i];
            a->grad.v[i] += n.grad.v[i] * s * (1.0 - s);
        }
    });
}

Var sum(const Var& a) {
    double s = 0.0;
    for (double x : a->val.v) s += x;
    return make_node(Tensor::scalar(s), {a}, [](Node& n) {
        auto& a = n.parents[0];
        double g = n.grad.v[0];
        for (double& x : a->grad.v) x += g;
    });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a->val.size())); }

Var dot(const Var& a, const Var& b) {
    check_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a->val.size(); ++i) s += a->val.v[i] * b->val.v[i];
    return make_node(Tensor::scalar(s), {a, b}, [](Node& n) {
        auto& a = n.parents[0];
        auto& b = n.parents[1];
        double g = n.grad.v[0];
        if (a->requires_grad)
            for (std::size_t i = 0; i < a->val.size(); ++i) a->grad.v[i] += g * b->val.v[i];
        if (b->requires_grad)
            for (std::size_t i = 0; i < b->val.size(); ++i) b->grad.v[i] += g * a->val.v[i];
    });
}

Var l2_normalize(const Var& a) {
    double nrm2 = 0.0;
    for (double x : a->val.v) nrm2 += x * x;
    double nrm = std::sqrt(nrm2);
    if (nrm == 0.0) throw NumericError("l2_normalize: zero vector");
    Tensor out = a->val;
    for (double& x : out.v) x /= nrm;
    return make_node(std::move(out), {a}, [nrm](Node& n) {
        auto& a = n.parents[0];
        // d(x/|x|) = (I - y y^T)/|x| applied to upstream grad, y = x/|x|.
        double gy = 0.0;
        for (std::size_t i = 0; i < n.val.size(); ++i) gy += n.grad.v[i] * n.val.v[i];
        for (std::size_t i = 0; i < n.val.size(); ++i)
            a->grad.v[i] += (n.grad.v[i] - gy * n.val.v[i]) / nrm;
    });
}

Var cosine(const Var& a, const Var& b) { return dot(l2_normalize(a), l2_normalize(b)); }

Var matvec(const Tensor& w, const Var& x) {
    if (w.shape.size() != 2 || static_cast<std::size_t>(w.dim(1)) != x->val.size())
        throw std::invalid_argument("matvec: shape mismatch");
    int m = w.dim(0), k = w.dim(1);
    Tensor out({m});
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += w.v[static_cast<std::size_t>(i) * k + j] * x->val.v[j];
        out.v[i] = s;
    }
    return make_node(std::move(out), {x}, [w, m, k](Node& n) {
        auto& x = n.parents[0];
        for (int i = 0; i < m; ++i) {
            double g = n.grad.v[i];
            for (int j = 0; j < k; ++j) x->grad.v[j] += g * w.v[static_cast<std::size_t>(i) * k + j];
        }
    });
}

Var mean_rows(const Var& x) {
    if (x->val.shape.size() != 2) throw std::invalid_argument("mean_rows: expects {L,D}");
    int L = x->val.dim(0), D = x->val.dim(1);
    Tensor out({D});
    for (int l = 0; l < L; ++l)
        for (int d = 0; d < D; ++d) out.v[d] += x->val.v[static_cast<std::size_t>(l) * D + d];
    for (double& v : out.v) v /= L;
    return make_node(std::move(out), {x}, [L, D](Node& n) {
        auto& x = n.parents[0];
        for (int l = 0; l < L; ++l)
            for (int d = 0; d < D; ++d)
                x->grad.v[static_cast<std::size_t>(l) * D + d] += n.grad.v[d] / L;
    });
}

Var select_seq(const Var& bank, int k) {
    if (bank->val.shape.size() != 3) throw std::invalid_argument("select_seq: expects {K,L,D}");
    int K = bank->val.dim(0), L = bank->val.dim(1), D = bank->val.dim(2);
    if (k < 0 || k >= K) throw std::out_of_range("select_seq: class index out of range");
    std::size_t off = static_cast<std::size_t>(k) * L * D;
    Tensor out({L, D});
    std::copy(bank->val.v.begin() + off, bank->val.v.begin() + off + static_cast<std::size_t>(L) * D,
              out.v.begin());
    return make_node(std::move(out), {bank}, [off](Node& n) {
        auto& bank = n.parents[0];
        for (std::size_t i = 0; i < n.grad.size(); ++i) bank->grad.v[off + i] += n.grad.v[i];
    });
}

Var reshape(const Var& a, std::vector<int> shape) {
    if (Tensor::count(shape) != a->val.size()) throw std::invalid_argument("reshape: size mismatch");
    Tensor out(std::move(shape), a->val.v);
    return make_node(std::move(out), {a}, [](Node& n) {
        auto& a = n.parents[0];
        for (std::size_t i = 0; i < n.grad.size(); ++i) a->grad.v[i] += n.grad.v[i];
    });
}

Var mask_mul(const Var& img, const Var& mask_hw) {
    if (img->val.shape.size() != 3 || mask_hw->val.shape.size() != 2 ||
        img->val.dim(1) != mask_hw->val.dim(0) || img->val.dim(2) != mask_hw->val.dim(1))
        throw std::invalid_argument("mask_mul: expects {C,H,W} and {H,W}");
    int C = img->val.dim(0);
    std::size_t hw = mask_hw->val.size();
    Tensor out = img->val;
    for (int c = 0; c < C; ++c)
        for (std::size_t i = 0; i < hw; ++i) out.v[c * hw + i] *= mask_hw->val.v[i];
    return make_node(std::move(out), {img, mask_hw}, [C, hw](Node& n) {
        auto& img = n.parents[0];
        auto& m = n.parents[1];
        if (img->requires_grad)
            for (int c = 0; c < C; ++c)
                for (std::size_t i = 0; i < hw; ++i)
                    img->grad.v[c * hw + i] += n.grad.v[c * hw + i] * m->val.v[i];
        if (m->requires_grad)
            for (int c = 0; c < C; ++c)
                for (std::size_t i = 0; i < hw; ++i)
                    m->grad.v[i] += n.grad.v[c * hw + i] * img->val.v[c * hw + i];
    });
}

Var conv2d(const Var& x, const Var& w, const Var& b) {
    if (x->val.shape.size() != 3 || w->val.shape.size() != 4 || b->val.shape.size() != 1)
        throw std::invalid_argument("conv2d: bad ranks");
    int Ci = x->val.dim(0), H = x->val.dim(1), W = x->val.dim(2);
    int Co = w->val.dim(0), kh = w->val.dim(2), kw = w->val.dim(3);
    if (w->val.dim(1) != Ci || b->val.dim(0) != Co || kh % 2 == 0 || kw % 2 == 0)
        throw std::invalid_argument("conv2d: shape mismatch");
    int ph = kh / 2, pw = kw / 2;
    Tensor out({Co, H, W});
    auto xat = [&](int c, int y, int xx) { return x->val.v[(static_cast<std::size_t>(c) * H + y) * W + xx]; };
    for (int co = 0; co < Co; ++co) {
        for (int y = 0; y < H; ++y)
            for (int xx = 0; xx < W; ++xx) out.v[(static_cast<std::size_t>(co) * H + y) * W + xx] = b->val.v[co];
        for (int ci = 0; ci < Ci; ++ci)
            for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx) {
                    double wv = w->val.v[((static_cast<std::size_t>(co) * Ci + ci) * kh + ky) * kw + kx];
                    if (wv == 0.0) continue;
                    int y0 = std::max(0, ph - ky), y1 = std::min(H, H + ph - ky);
                    int x0 = std::max(0, pw - kx), x1 = std::min(W, W + pw - kx);
                    for (int y = y0; y < y1; ++y) {
                        std::size_t orow = (static_cast<std::size_t>(co) * H + y) * W;
                        int iy = y + ky - ph;
                        for (int xx = x0; xx < x1; ++xx)
                            out.v[orow + xx] += wv * xat(ci, iy, xx + kx - pw);
                    }
                }
    }
    return make_node(std::move(out), {x, w, b}, [Ci, H, W, Co, kh, kw, ph, pw](Node& n) {
        auto& x = n.parents[0];
        auto& w = n.parents[1];
        auto& b = n.parents[2];
        for (int co = 0; co < Co; ++co) {
            if (b->requires_grad) {
                double s = 0.0;
                for (int y = 0; y < H; ++y)
                    for (int xx = 0; xx < W; ++xx) s += n.grad.v[(static_cast<std::size_t>(co) * H + y) * W + xx];
                b->grad.v[co] += s;
            }
            for (int ci = 0; ci < Ci; ++ci)
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx) {
                        std::size_t widx = ((static_cast<std::size_t>(co) * Ci + ci) * kh + ky) * kw + kx;
                        double wv = w->val.v[widx];
                        double dw = 0.0;
                        int y0 = std::max(0, ph - ky), y1 = std::min(H, H + ph - ky);
                        int x0 = std::max(0, pw - kx), x1 = std::min(W, W + pw - kx);
                        for (int y = y0; y < y1; ++y) {
                            std::size_t orow = (static_cast<std::size_t>(co) * H + y) * W;
                            std::size_t irow = (static_cast<std::size_t>(ci) * H + (y + ky - ph)) * W;
                            for (int xx = x0; xx < x1; ++xx) {
                                double g = n.grad.v[orow + xx];
                                dw += g * x->val.v[irow + xx + kx - pw];
                                if (x->requires_grad) x->grad.v[irow + xx + kx - pw] += g * wv;
                            }
                        }
                        if (w->requires_grad) w->grad.v[widx] += dw;
                    }
        }
    });
}

Var avgpool2(const Var& x) {
    if (x->val.shape.size() != 3 || x->val.dim(1) % 2 || x->val.dim(2) % 2)
        throw std::invalid_argument("avgpool2: dims must be even");
    int C = x->val.dim(0), H = x->val.dim(1), W = x->val.dim(2);
    int oh = H / 2, ow = W / 2;
    Tensor out({C, oh, ow});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < oh; ++y)
            for (int xx = 0; xx < ow; ++xx) {
                double s = 0.0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx)
                        s += x->val.v[(static_cast<std::size_t>(c) * H + 2 * y + dy) * W + 2 * xx + dx];
                out.v[(static_cast<std::size_t>(c) * oh + y) * ow + xx] = s * 0.25;
            }
    return make_node(std::move(out), {x}, [C, H, W, oh, ow](Node& n) {
        auto& x = n.parents[0];
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < oh; ++y)
                for (int xx = 0; xx < ow; ++xx) {
                    double g = 0.25 * n.grad.v[(static_cast<std::size_t>(c) * oh + y) * ow + xx];
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx)
                            x->grad.v[(static_cast<std::size_t>(c) * H + 2 * y + dy) * W + 2 * xx + dx] += g;
                }
    });
}

namespace {
struct LerpCoord {
    int i0, i1;
    double w1;  // weight of i1; i0 gets (1 - w1)
};
LerpCoord lerp_coord(int o, int out_n, int in_n) {
    double s = (o + 0.5) * static_cast<double>(in_n) / out_n - 0.5;
    if (s < 0.0) s = 0.0;
    if (s > in_n - 1) s = in_n - 1;
    int i0 = static_cast<int>(std::floor(s));
    int i1 = std::min(i0 + 1, in_n - 1);
    return {i0, i1, s - i0};
}
}  // namespace

Var bilinear_resize(const Var& x, int out_h, int out_w) {
    if (x->val.shape.size() != 3) throw std::invalid_argument("bilinear_resize: expects {C,H,W}");
    int C = x->val.dim(0), H = x->val.dim(1), W = x->val.dim(2);
    std::vector<LerpCoord> ys(out_h), xs(out_w);
    for (int y = 0; y < out_h; ++y) ys[y] = lerp_coord(y, out_h, H);
    for (int xx = 0; xx < out_w; ++xx) xs[xx] = lerp_coord(xx, out_w, W);
    Tensor out({C, out_h, out_w});
    for (int c = 0; c < C; ++c) {
        std::size_t base = static_cast<std::size_t>(c) * H * W;
        for (int y = 0; y < out_h; ++y)
            for (int xx = 0; xx < out_w; ++xx) {
                const auto& cy = ys[y];
                const auto& cx = xs[xx];
                double v00 = x->val.v[base + static_cast<std::size_t>(cy.i0) * W + cx.i0];
                double v01 = x->val.v[base + static_cast<std::size_t>(cy.i0) * W + cx.i1];
                double v10 = x->val.v[base + static_cast<std::size_t>(cy.i1) * W + cx.i0];
                double v11 = x->val.v[base + static_cast<std::size_t>(cy.i1) * W + cx.i1];
                out.v[(static_cast<std::size_t>(c) * out_h + y) * out_w + xx] =
                    (1 - cy.w1) * ((1 - cx.w1) * v00 + cx.w1 * v01) +
                    cy.w1 * ((1 - cx.w1) * v10 + cx.w1 * v11);
            }
    }
    return make_node(std::move(out), {x}, [C, H, W, out_h, out_w, ys, xs](Node& n) {
        auto& x = n.parents[0];
        for (int c = 0; c < C; ++c) {
            std::size_t base = static_cast<std::size_t>(c) * H * W;
            for (int y = 0; y < out_h; ++y)
                for (int xx = 0; xx < out_w; ++xx) {
                    const auto& cy = ys[y];
                    const auto& cx = xs[xx];
                    double g = n.grad.v[(static_cast<std::size_t>(c) * out_h + y) * out_w + xx];
                    x->grad.v[base + static_cast<std::size_t>(cy.i0) * W + cx.i0] += g * (1 - cy.w1) * (1 - cx.w1);
                    x->grad.v[base + static_cast<std::size_t>(cy.i0) * W + cx.i1] += g * (1 - cy.w1) * cx.w1;
                    x->grad.v[base + static_cast<std::size_t>(cy.i1) * W + cx.i0] += g * cy.w1 * (1 - cx.w1);
                    x->grad.v[base + static_cast<std::size_t>(cy.i1) * W + cx.i1] += g * cy.w1 * cx.w1;
                }
        }
    });
}

Var grid_avgpool(const Var& x, int gh, int gw) {
    if (x->val.shape.size() != 3) throw std::invalid_argument("grid_avgpool: expects {C,H,W}");
    int C = x->val.dim(0), H = x->val.dim(1), W = x->val.dim(2);
    if (H % gh || W % gw)
        throw std::invalid_argument("grid_avgpool: dims " + shape_str(x->val.shape) +
                                    " not divisible by grid " + std::to_string(gh) + "x" + std::to_string(gw));
    int ch = H / gh, cw = W / gw;
    double inv = 1.0 / (static_cast<double>(ch) * cw);
    Tensor out({C, gh, gw});
    for (int c = 0; c < C; ++c)
        for (int gy = 0; gy < gh; ++gy)
            for (int gx = 0; gx < gw; ++gx) {
                double s = 0.0;
                for (int y = gy * ch; y < (gy + 1) * ch; ++y)
                    for (int xx = gx * cw; xx < (gx + 1) * cw; ++xx)
                        s += x->val.v[(static_cast<std::size_t>(c) * H + y) * W + xx];
                out.v[(static_cast<std::size_t>(c) * gh + gy) * gw + gx] = s * inv;
            }
    return make_node(std::move(out), {x}, [C, H, W, gh, gw, ch, cw, inv](Node& n) {
        auto& x = n.parents[0];
        for (int c = 0; c < C; ++c)
            for (int gy = 0; gy < gh; ++gy)
                for (int gx = 0; gx < gw; ++gx) {
                    double g = inv * n.grad.v[(static_cast<std::size_t>(c) * gh + gy) * gw + gx];
                    for (int y = gy * ch; y < (gy + 1) * ch; ++y)
                        for (int xx = gx * cw; xx < (gx + 1) * cw; ++xx)
                            x->grad.v[(static_cast<std::size_t>(c) * H + y) * W + xx] += g;
                }
    });
}

}  // namespace semples
