#include "marsdust/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <fmt/format.h>

#include "marsdust/error.hpp"

namespace marsdust::nn {

Tensor& Node::grad_buffer() {
    if (grad.numel() != value.numel()) grad = Tensor(value.shape());
    return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
}

Var Var::from_node(std::shared_ptr<Node> node) {
    Var v;
    v.node_ = std::move(node);
    return v;
}

void Var::zero_grad() {
    if (node_->grad.numel() == node_->value.numel()) node_->grad.fill(0.0);
}

void backward(const Var& root) {
    if (root.value().numel() != 1) {
        throw ValidationError(fmt::format("backward needs a scalar root, got shape {}", root.shape().str()));
    }
    if (!root.requires_grad()) return;

    // Iterative post-order DFS gives inputs before their consumers.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
    visited.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    for (Node* n : order) {
        if (n->backward) n->grad_buffer().fill(0.0);
    }
    root.node()->grad_buffer()[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward) (*it)->backward(**it);
    }
}

namespace ops {
namespace {

Var make_result(Tensor value, std::vector<std::shared_ptr<Node>> inputs, std::function<void(Node&)> bw) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    const bool tracked = std::any_of(inputs.begin(), inputs.end(), [](const auto& in) { return in && in->requires_grad; });
    if (tracked) {
        node->requires_grad = true;
        node->inputs = std::move(inputs);
        node->backward = std::move(bw);
    }
    return Var::from_node(std::move(node));
}

// Grad buffer of input i, or nullptr when it does not need one.
Tensor* input_grad(Node& self, std::size_t i) {
    auto& in = self.inputs[i];
    return (in && in->requires_grad) ? &in->grad_buffer() : nullptr;
}

void require_same(const Shape& a, const Shape& b, const char* op) {
    if (!(a == b)) throw DimensionError(fmt::format("{}: shapes {} and {} differ", op, a.str(), b.str()));
}

Var scalar_result(double v, std::vector<std::shared_ptr<Node>> inputs, std::function<void(Node&)> bw) {
    return make_result(Tensor(Shape{1, 1, 1, 1}, v), std::move(inputs), std::move(bw));
}

// Output columns ox with 0 <= ox * stride - pad + k < in_len.
std::pair<int, int> valid_range(int k, int pad, int stride, int in_len, int out_len) {
    const int lo_num = pad - k;
    const int lo = lo_num <= 0 ? 0 : (lo_num + stride - 1) / stride;
    const int hi_num = in_len - 1 + pad - k;
    const int hi = hi_num < 0 ? -1 : std::min(out_len - 1, hi_num / stride);
    return {lo, hi};
}

}  // namespace

Var conv2d(const Var& x, const Var& weight, const Var& bias, Conv2dOptions opt) {
    const Shape xs = x.shape();
    const Shape ws = weight.shape();
    const int groups = opt.groups;
    if (groups < 1 || xs.c % groups != 0 || ws.n % groups != 0) {
        throw DimensionError(fmt::format("conv2d: {} groups do not divide {} inputs / {} outputs", groups, xs.c, ws.n));
    }
    const int cin_g = xs.c / groups;
    const int cout_g = ws.n / groups;
    if (ws.c != cin_g || ws.h != ws.w) {
        throw DimensionError(fmt::format("conv2d: weight {} incompatible with input {} and {} groups", ws.str(),
                                         xs.str(), groups));
    }
    const bool has_bias = static_cast<bool>(bias.node());
    if (has_bias && !(bias.shape() == Shape{1, ws.n, 1, 1})) {
        throw DimensionError(fmt::format("conv2d: bias {} does not match {} outputs", bias.shape().str(), ws.n));
    }
    const int k = ws.h;
    const int s = opt.stride;
    const int p = opt.padding;
    const int out_h = (xs.h + 2 * p - k) / s + 1;
    const int out_w = (xs.w + 2 * p - k) / s + 1;
    if (s < 1 || out_h < 1 || out_w < 1) {
        throw DimensionError(fmt::format("conv2d: input {} too small for kernel {}", xs.str(), k));
    }

    Tensor out(Shape{xs.n, ws.n, out_h, out_w});
    const Tensor& in = x.value();
    const Tensor& w = weight.value();
    for (int n = 0; n < xs.n; ++n) {
        for (int co = 0; co < ws.n; ++co) {
            double* o = out.plane(n, co);
            if (has_bias) std::fill(o, o + out.shape().plane(), bias.value()[static_cast<std::size_t>(co)]);
            const int g = co / cout_g;
            for (int cil = 0; cil < cin_g; ++cil) {
                const double* src = in.plane(n, g * cin_g + cil);
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const double wv = w.at(co, cil, ky, kx);
                        const auto [lo, hi] = valid_range(kx, p, s, xs.w, out_w);
                        for (int oy = 0; oy < out_h; ++oy) {
                            const int iy = oy * s - p + ky;
                            if (iy < 0 || iy >= xs.h) continue;
                            const double* irow = src + static_cast<std::ptrdiff_t>(iy) * xs.w;
                            double* orow = o + static_cast<std::ptrdiff_t>(oy) * out_w;
                            if (s == 1) {
                                const double* ishift = irow - p + kx;
                                for (int ox = lo; ox <= hi; ++ox) orow[ox] += wv * ishift[ox];
                            } else {
                                for (int ox = lo; ox <= hi; ++ox) orow[ox] += wv * irow[ox * s - p + kx];
                            }
                        }
                    }
                }
            }
        }
    }

    std::vector<std::shared_ptr<Node>> inputs{x.node(), weight.node()};
    if (has_bias) inputs.push_back(bias.node());
    return make_result(std::move(out), std::move(inputs), [=](Node& self) {
        const Tensor& dout = self.grad;
        const Tensor& xin = self.inputs[0]->value;
        const Tensor& wt = self.inputs[1]->value;
        Tensor* dx = input_grad(self, 0);
        Tensor* dw = input_grad(self, 1);
        Tensor* db = has_bias ? input_grad(self, 2) : nullptr;
        for (int n = 0; n < xs.n; ++n) {
            for (int co = 0; co < ws.n; ++co) {
                const double* go = dout.plane(n, co);
                if (db != nullptr) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < dout.shape().plane(); ++i) acc += go[i];
                    (*db)[static_cast<std::size_t>(co)] += acc;
                }
                const int g = co / cout_g;
                for (int cil = 0; cil < cin_g; ++cil) {
                    const int ci = g * cin_g + cil;
                    const double* src = xin.plane(n, ci);
                    double* gsrc = dx != nullptr ? dx->plane(n, ci) : nullptr;
                    for (int ky = 0; ky < k; ++ky) {
                        for (int kx = 0; kx < k; ++kx) {
                            const double wv = wt.at(co, cil, ky, kx);
                            const auto [lo, hi] = valid_range(kx, p, s, xs.w, out_w);
                            double wacc = 0.0;
                            for (int oy = 0; oy < out_h; ++oy) {
                                const int iy = oy * s - p + ky;
                                if (iy < 0 || iy >= xs.h) continue;
                                const double* grow = go + static_cast<std::ptrdiff_t>(oy) * out_w;
                                const std::ptrdiff_t row = static_cast<std::ptrdiff_t>(iy) * xs.w;
                                for (int ox = lo; ox <= hi; ++ox) {
                                    const std::ptrdiff_t ix = row + ox * s - p + kx;
                                    wacc += src[ix] * grow[ox];
                                    if (gsrc != nullptr) gsrc[ix] += wv * grow[ox];
                                }
                            }
                            if (dw != nullptr) dw->at(co, cil, ky, kx) += wacc;
                        }
                    }
                }
            }
        }
    });
}

Var relu(const Var& x) {
    Tensor out = x.value();
    for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
    return make_result(std::move(out), {x.node()}, [](Node& self) {
        Tensor& dx = self.inputs[0]->grad_buffer();
        const Tensor& in = self.inputs[0]->value;
        for (std::size_t i = 0; i < in.numel(); ++i) {
            if (in[i] > 0.0) dx[i] += self.grad[i];
        }
    });
}

Var sigmoid(const Var& x) {
    Tensor out = x.value();
    for (auto& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
    return make_result(std::move(out), {x.node()}, [](Node& self) {
        Tensor& dx = self.inputs[0]->grad_buffer();
        for (std::size_t i = 0; i < self.value.numel(); ++i) {
            const double y = self.value[i];
            dx[i] += self.grad[i] * y * (1.0 - y);
        }
    });
}

Var add(const Var& a, const Var& b) {
    require_same(a.shape(), b.shape(), "add");
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bv[i];
    return make_result(std::move(out), {a.node(), b.node()}, [](Node& self) {
        for (std::size_t k = 0; k < 2; ++k) {
            if (Tensor* d = input_grad(self, k)) {
                for (std::size_t i = 0; i < d->numel(); ++i) (*d)[i] += self.grad[i];
            }
        }
    });
}

Var scale_channels(const Var& x, const Var& gate) {
    const Shape xs = x.shape();
    if (!(gate.shape() == Shape{xs.n, xs.c, 1, 1})) {
        throw DimensionError(fmt::format("scale_channels: gate {} for input {}", gate.shape().str(), xs.str()));
    }
    Tensor out = x.value();
    for (int n = 0; n < xs.n; ++n) {
        for (int c = 0; c < xs.c; ++c) {
            const double g = gate.value().at(n, c, 0, 0);
            double* o = out.plane(n, c);
            for (std::size_t i = 0; i < xs.plane(); ++i) o[i] *= g;
        }
    }
    return make_result(std::move(out), {x.node(), gate.node()}, [xs](Node& self) {
        const Tensor& xv = self.inputs[0]->value;
        const Tensor& gv = self.inputs[1]->value;
        Tensor* dx = input_grad(self, 0);
        Tensor* dg = input_grad(self, 1);
        for (int n = 0; n < xs.n; ++n) {
            for (int c = 0; c < xs.c; ++c) {
                const double* go = self.grad.plane(n, c);
                const double* xp = xv.plane(n, c);
                const double g = gv.at(n, c, 0, 0);
                double acc = 0.0;
                for (std::size_t i = 0; i < xs.plane(); ++i) acc += go[i] * xp[i];
                if (dg != nullptr) dg->at(n, c, 0, 0) += acc;
                if (dx != nullptr) {
                    double* d = dx->plane(n, c);
                    for (std::size_t i = 0; i < xs.plane(); ++i) d[i] += go[i] * g;
                }
            }
        }
    });
}

Var scale_pixels(const Var& x, const Var& gate) {
    const Shape xs = x.shape();
    if (!(gate.shape() == Shape{xs.n, 1, xs.h, xs.w})) {
        throw DimensionError(fmt::format("scale_pixels: gate {} for input {}", gate.shape().str(), xs.str()));
    }
    Tensor out = x.value();
    for (int n = 0; n < xs.n; ++n) {
        const double* g = gate.value().plane(n, 0);
        for (int c = 0; c < xs.c; ++c) {
            double* o = out.plane(n, c);
            for (std::size_t i = 0; i < xs.plane(); ++i) o[i] *= g[i];
        }
    }
    return make_result(std::move(out), {x.node(), gate.node()}, [xs](Node& self) {
        const Tensor& xv = self.inputs[0]->value;
        const Tensor& gv = self.inputs[1]->value;
        Tensor* dx = input_grad(self, 0);
        Tensor* dg = input_grad(self, 1);
        for (int n = 0; n < xs.n; ++n) {
            const double* g = gv.plane(n, 0);
            double* dgp = dg != nullptr ? dg->plane(n, 0) : nullptr;
            for (int c = 0; c < xs.c; ++c) {
                const double* go = self.grad.plane(n, c);
                const double* xp = xv.plane(n, c);
                double* d = dx != nullptr ? dx->plane(n, c) : nullptr;
                for (std::size_t i = 0; i < xs.plane(); ++i) {
                    if (dgp != nullptr) dgp[i] += go[i] * xp[i];
                    if (d != nullptr) d[i] += go[i] * g[i];
                }
            }
        }
    });
}

Var concat_channels(std::span<const Var> parts) {
    if (parts.empty()) throw ValidationError("concat of zero tensors");
    const Shape first = parts.front().shape();
    int channels = 0;
    for (const auto& part : parts) {
        const Shape s = part.shape();
        if (s.n != first.n || s.h != first.h || s.w != first.w) {
            throw DimensionError(fmt::format("concat: shape {} does not match {}", s.str(), first.str()));
        }
        channels += s.c;
    }
    Tensor out(Shape{first.n, channels, first.h, first.w});
    std::vector<std::shared_ptr<Node>> inputs;
    for (int n = 0; n < first.n; ++n) {
        int c0 = 0;
        for (const auto& part : parts) {
            const Shape s = part.shape();
            std::copy(part.value().plane(n, 0), part.value().plane(n, 0) + s.c * first.plane(), out.plane(n, c0));
            c0 += s.c;
        }
    }
    for (const auto& part : parts) inputs.push_back(part.node());
    return make_result(std::move(out), std::move(inputs), [first](Node& self) {
        for (int n = 0; n < first.n; ++n) {
            int c0 = 0;
            for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                const int c = self.inputs[k]->value.shape().c;
                if (Tensor* d = input_grad(self, k)) {
                    const double* src = self.grad.plane(n, c0);
                    double* dst = d->plane(n, 0);
                    for (std::size_t i = 0; i < static_cast<std::size_t>(c) * first.plane(); ++i) dst[i] += src[i];
                }
                c0 += c;
            }
        }
    });
}

Var upsample_nearest2x(const Var& x) {
    const Shape xs = x.shape();
    Tensor out(Shape{xs.n, xs.c, xs.h * 2, xs.w * 2});
    for (int n = 0; n < xs.n; ++n) {
        for (int c = 0; c < xs.c; ++c) {
            for (int y = 0; y < 2 * xs.h; ++y) {
                for (int xx = 0; xx < 2 * xs.w; ++xx) out.at(n, c, y, xx) = x.value().at(n, c, y / 2, xx / 2);
            }
        }
    }
    return make_result(std::move(out), {x.node()}, [xs](Node& self) {
        Tensor& dx = self.inputs[0]->grad_buffer();
        for (int n = 0; n < xs.n; ++n) {
            for (int c = 0; c < xs.c; ++c) {
                for (int y = 0; y < 2 * xs.h; ++y) {
                    for (int xx = 0; xx < 2 * xs.w; ++xx) dx.at(n, c, y / 2, xx / 2) += self.grad.at(n, c, y, xx);
                }
            }
        }
    });
}

Var global_avg_pool(const Var& x) {
    const Shape xs = x.shape();
    Tensor out(Shape{xs.n, xs.c, 1, 1});
    const auto plane = static_cast<double>(xs.plane());
    for (int n = 0; n < xs.n; ++n) {
        for (int c = 0; c < xs.c; ++c) {
            const double* p = x.value().plane(n, c);
            double acc = 0.0;
            for (std::size_t i = 0; i < xs.plane(); ++i) acc += p[i];
            out.at(n, c, 0, 0) = acc / plane;
        }
    }
    return make_result(std::move(out), {x.node()}, [xs, plane](Node& self) {
        Tensor& dx = self.inputs[0]->grad_buffer();
        for (int n = 0; n < xs.n; ++n) {
            for (int c = 0; c < xs.c; ++c) {
                const double g = self.grad.at(n, c, 0, 0) / plane;
                double* d = dx.plane(n, c);
                for (std::size_t i = 0; i < xs.plane(); ++i) d[i] += g;
            }
        }
    });
}

Var clamp(const Var& x, double lo, double hi) {
    Tensor out = x.value();
    for (auto& v : out.data()) v = std::clamp(v, lo, hi);
    return make_result(std::move(out), {x.node()}, [lo, hi](Node& self) {
        Tensor& dx = self.inputs[0]->grad_buffer();
        const Tensor& in = self.inputs[0]->value;
        for (std::size_t i = 0; i < in.numel(); ++i) {
            if (in[i] >= lo && in[i] <= hi) dx[i] += self.grad[i];
        }
    });
}

Var mean(const Var& x) {
    const auto n = static_cast<double>(x.value().numel());
    double acc = 0.0;
    for (double v : x.value().data()) acc += v;
    return scalar_result(acc / n, {x.node()}, [n](Node& self) {
        Tensor& dx = self.inputs[0]->grad_buffer();
        const double g = self.grad[0] / n;
        for (auto& v : dx.data()) v += g;
    });
}

Var l1_loss(const Var& pred, const Tensor& target) {
    require_same(pred.shape(), target.shape(), "l1_loss");
    const auto n = static_cast<double>(target.numel());
    double acc = 0.0;
    for (std::size_t i = 0; i < target.numel(); ++i) acc += std::abs(pred.value()[i] - target[i]);
    return scalar_result(acc / n, {pred.node()}, [target, n](Node& self) {
        Tensor& dp = self.inputs[0]->grad_buffer();
        const Tensor& p = self.inputs[0]->value;
        const double g = self.grad[0] / n;
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double diff = p[i] - target[i];
            if (diff > 0.0) {
                dp[i] += g;
            } else if (diff < 0.0) {
                dp[i] -= g;
            }
        }
    });
}

Var dot(const Var& x, const Tensor& weights) {
    require_same(x.shape(), weights.shape(), "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.numel(); ++i) acc += x.value()[i] * weights[i];
    return scalar_result(acc, {x.node()}, [weights](Node& self) {
        Tensor& dx = self.inputs[0]->grad_buffer();
        const double g = self.grad[0];
        for (std::size_t i = 0; i < weights.numel(); ++i) dx[i] += g * weights[i];
    });
}

}  // namespace ops
}  // namespace marsdust::nn
