#include "cropforge/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <utility>

#include "cropforge/errors.hpp"

namespace cropforge {

Var::Var(Tensor value, bool requires_grad) {
  node_ = std::make_shared<Node>();
  node_->tensor = std::move(value);
  node_->requires_grad = requires_grad;
}

Var Var::detach() const {
  return Var(node_->tensor, /*requires_grad=*/false);
}

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop) {
  auto node = std::make_shared<Node>();
  node->tensor = std::move(value);
  bool needs = false;
  for (const Var& p : parents) {
    node->parents.push_back(p.node());
    needs = needs || p.requires_grad();
  }
  node->requires_grad = needs;
  if (needs) node->backprop = std::move(backprop);
  Var v;
  v.node_ = std::move(node);
  return v;
}

namespace {

void check_rank(const Var& v, int rank, const char* what) {
  if (v.value().rank() != rank) {
    throw ShapeError(std::string(what) + " must have rank " + std::to_string(rank) + ", got shape " +
                     v.value().shape_str());
  }
}

}  // namespace

Var conv2d(const Var& input, const Var& weights, const Var& bias, Padding padding) {
  check_rank(input, 3, "conv2d input");
  check_rank(weights, 4, "conv2d weights");
  check_rank(bias, 1, "conv2d bias");
  const int cin = input.shape()[0], h = input.shape()[1], w = input.shape()[2];
  const int cout = weights.shape()[0], k = weights.shape()[2];
  if (weights.shape()[1] != cin) {
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(cin) + " channels, weights expect " +
                     std::to_string(weights.shape()[1]));
  }
  if (weights.shape()[3] != k) throw ShapeError("conv2d kernel must be square, got " + weights.value().shape_str());
  if (k % 2 == 0) throw ShapeError("conv2d kernel size must be odd, got " + std::to_string(k));
  if (bias.shape()[0] != cout) throw ShapeError("conv2d bias size mismatch");
  const int pad = padding == Padding::kSame ? k / 2 : 0;
  if (padding == Padding::kValid && (h < k || w < k)) {
    throw ShapeError("conv2d valid padding needs spatial dims >= kernel size");
  }
  const int ho = h + 2 * pad - k + 1;
  const int wo = w + 2 * pad - k + 1;

  Tensor out({cout, ho, wo});
  {
    const double* in = input.value().data();
    const double* wt = weights.value().data();
    const double* b = bias.value().data();
    double* o = out.data();
    for (int co = 0; co < cout; ++co) {
      double* ochan = o + static_cast<std::size_t>(co) * ho * wo;
      std::fill(ochan, ochan + static_cast<std::size_t>(ho) * wo, b[co]);
      for (int ci = 0; ci < cin; ++ci) {
        const double* ichan = in + static_cast<std::size_t>(ci) * h * w;
        const double* wk = wt + ((static_cast<std::size_t>(co) * cin + ci) * k) * k;
        for (int ky = 0; ky < k; ++ky) {
          const int y0 = std::max(0, pad - ky), y1 = std::min(ho, h + pad - ky);
          for (int kx = 0; kx < k; ++kx) {
            const double wv = wk[ky * k + kx];
            const int x0 = std::max(0, pad - kx), x1 = std::min(wo, w + pad - kx);
            for (int y = y0; y < y1; ++y) {
              const double* irow = ichan + static_cast<std::size_t>(y + ky - pad) * w + (kx - pad);
              double* orow = ochan + static_cast<std::size_t>(y) * wo;
              for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
            }
          }
        }
      }
    }
  }

  Var vi = input, vw = weights, vb = bias;
  return make_op(std::move(out), {input, weights, bias}, [vi, vw, vb, cin, h, w, cout, k, pad, ho, wo](Node& n) {
    const double* g = n.tensor.grad().data();
    const double* in = vi.value().data();
    const double* wt = vw.value().data();
    double* gin = vi.requires_grad() ? vi.value().ensure_grad().data() : nullptr;
    double* gw = vw.requires_grad() ? vw.value().ensure_grad().data() : nullptr;
    double* gb = vb.requires_grad() ? vb.value().ensure_grad().data() : nullptr;
    for (int co = 0; co < cout; ++co) {
      const double* gchan = g + static_cast<std::size_t>(co) * ho * wo;
      if (gb) {
        double acc = 0.0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(ho) * wo; ++i) acc += gchan[i];
        gb[co] += acc;
      }
      for (int ci = 0; ci < cin; ++ci) {
        const double* ichan = in + static_cast<std::size_t>(ci) * h * w;
        double* gichan = gin ? gin + static_cast<std::size_t>(ci) * h * w : nullptr;
        const std::size_t wbase = (static_cast<std::size_t>(co) * cin + ci) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          const int y0 = std::max(0, pad - ky), y1 = std::min(ho, h + pad - ky);
          for (int kx = 0; kx < k; ++kx) {
            const double wv = wt[wbase + ky * k + kx];
            const int x0 = std::max(0, pad - kx), x1 = std::min(wo, w + pad - kx);
            double wacc = 0.0;
            for (int y = y0; y < y1; ++y) {
              const std::size_t ioff = static_cast<std::size_t>(y + ky - pad) * w + (kx - pad);
              const double* grow = gchan + static_cast<std::size_t>(y) * wo;
              const double* irow = ichan + ioff;
              if (gichan) {
                double* girow = gichan + ioff;
                for (int x = x0; x < x1; ++x) girow[x] += wv * grow[x];
              }
              if (gw) {
                for (int x = x0; x < x1; ++x) wacc += irow[x] * grow[x];
              }
            }
            if (gw) gw[wbase + ky * k + kx] += wacc;
          }
        }
      }
    }
  });
}

Var conv_transpose2d(const Var& input, const Var& weights, const Var& bias) {
  check_rank(input, 3, "conv_transpose2d input");
  check_rank(weights, 4, "conv_transpose2d weights");
  check_rank(bias, 1, "conv_transpose2d bias");
  const int cin = input.shape()[0], h = input.shape()[1], w = input.shape()[2];
  const int cout = weights.shape()[1], k = weights.shape()[2];
  if (weights.shape()[0] != cin) {
    throw ShapeError("conv_transpose2d channel mismatch: input has " + std::to_string(cin) +
                     " channels, weights expect " + std::to_string(weights.shape()[0]));
  }
  if (weights.shape()[3] != k || k % 2 == 0) {
    throw ShapeError("conv_transpose2d kernel must be square and odd, got " + weights.value().shape_str());
  }
  if (bias.shape()[0] != cout) throw ShapeError("conv_transpose2d bias size mismatch");
  const int pad = k / 2;

  // Scatter form: out[co, iy+ky-pad, ix+kx-pad] += in[ci,iy,ix] * w[ci,co,ky,kx].
  Tensor out({cout, h, w});
  {
    const double* in = input.value().data();
    const double* wt = weights.value().data();
    const double* b = bias.value().data();
    double* o = out.data();
    for (int co = 0; co < cout; ++co) {
      double* ochan = o + static_cast<std::size_t>(co) * h * w;
      std::fill(ochan, ochan + static_cast<std::size_t>(h) * w, b[co]);
    }
    for (int ci = 0; ci < cin; ++ci) {
      const double* ichan = in + static_cast<std::size_t>(ci) * h * w;
      for (int co = 0; co < cout; ++co) {
        double* ochan = o + static_cast<std::size_t>(co) * h * w;
        const double* wk = wt + ((static_cast<std::size_t>(ci) * cout + co) * k) * k;
        for (int ky = 0; ky < k; ++ky) {
          const int oy_off = ky - pad;
          const int y0 = std::max(0, -oy_off), y1 = std::min(h, h - oy_off);
          for (int kx = 0; kx < k; ++kx) {
            const double wv = wk[ky * k + kx];
            const int ox_off = kx - pad;
            const int x0 = std::max(0, -ox_off), x1 = std::min(w, w - ox_off);
            for (int y = y0; y < y1; ++y) {
              const double* irow = ichan + static_cast<std::size_t>(y) * w;
              double* orow = ochan + static_cast<std::size_t>(y + oy_off) * w + ox_off;
              for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
            }
          }
        }
      }
    }
  }

  Var vi = input, vw = weights, vb = bias;
  return make_op(std::move(out), {input, weights, bias}, [vi, vw, vb, cin, h, w, cout, k, pad](Node& n) {
    const double* g = n.tensor.grad().data();
    const double* in = vi.value().data();
    const double* wt = vw.value().data();
    double* gin = vi.requires_grad() ? vi.value().ensure_grad().data() : nullptr;
    double* gw = vw.requires_grad() ? vw.value().ensure_grad().data() : nullptr;
    double* gb = vb.requires_grad() ? vb.value().ensure_grad().data() : nullptr;
    if (gb) {
      for (int co = 0; co < cout; ++co) {
        const double* gchan = g + static_cast<std::size_t>(co) * h * w;
        double acc = 0.0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) acc += gchan[i];
        gb[co] += acc;
      }
    }
    for (int ci = 0; ci < cin; ++ci) {
      const double* ichan = in + static_cast<std::size_t>(ci) * h * w;
      double* gichan = gin ? gin + static_cast<std::size_t>(ci) * h * w : nullptr;
      for (int co = 0; co < cout; ++co) {
        const double* gchan = g + static_cast<std::size_t>(co) * h * w;
        const std::size_t wbase = (static_cast<std::size_t>(ci) * cout + co) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          const int oy_off = ky - pad;
          const int y0 = std::max(0, -oy_off), y1 = std::min(h, h - oy_off);
          for (int kx = 0; kx < k; ++kx) {
            const double wv = wt[wbase + ky * k + kx];
            const int ox_off = kx - pad;
            const int x0 = std::max(0, -ox_off), x1 = std::min(w, w - ox_off);
            double wacc = 0.0;
            for (int y = y0; y < y1; ++y) {
              const double* grow = gchan + static_cast<std::size_t>(y + oy_off) * w + ox_off;
              const double* irow = ichan + static_cast<std::size_t>(y) * w;
              if (gichan) {
                double* girow = gichan + static_cast<std::size_t>(y) * w;
                for (int x = x0; x < x1; ++x) girow[x] += wv * grow[x];
              }
              if (gw) {
                for (int x = x0; x < x1; ++x) wacc += irow[x] * grow[x];
              }
            }
            if (gw) gw[wbase + ky * k + kx] += wacc;
          }
        }
      }
    }
  });
}

Var maxpool2d(const Var& input) {
  check_rank(input, 3, "maxpool2d input");
  const int c = input.shape()[0], h = input.shape()[1], w = input.shape()[2];
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("maxpool2d requires even spatial dims, got " + input.value().shape_str());
  }
  const int ho = h / 2, wo = w / 2;
  Tensor out({c, ho, wo});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  {
    const double* in = input.value().data();
    double* o = out.data();
    std::size_t oi = 0;
    for (int ch = 0; ch < c; ++ch) {
      const double* ichan = in + static_cast<std::size_t>(ch) * h * w;
      for (int y = 0; y < ho; ++y) {
        for (int x = 0; x < wo; ++x, ++oi) {
          const std::size_t base = static_cast<std::size_t>(2 * y) * w + 2 * x;
          // Row-major window scan; strict > keeps the first maximum on ties.
          std::size_t best = base;
          double bv = ichan[base];
          const std::size_t cand[3] = {base + 1, base + w, base + w + 1};
          for (std::size_t idx : cand) {
            if (ichan[idx] > bv) {
              bv = ichan[idx];
              best = idx;
            }
          }
          o[oi] = bv;
          (*argmax)[oi] = static_cast<std::size_t>(ch) * h * w + best;
        }
      }
    }
  }
  Var vi = input;
  return make_op(std::move(out), {input}, [vi, argmax](Node& n) {
    if (!vi.requires_grad()) return;
    const double* g = n.tensor.grad().data();
    double* gin = vi.value().ensure_grad().data();
    for (std::size_t i = 0; i < argmax->size(); ++i) gin[(*argmax)[i]] += g[i];
  });
}

Var upsample_nearest(const Var& input) {
  check_rank(input, 3, "upsample_nearest input");
  const int c = input.shape()[0], h = input.shape()[1], w = input.shape()[2];
  Tensor out({c, 2 * h, 2 * w});
  {
    const double* in = input.value().data();
    double* o = out.data();
    for (int ch = 0; ch < c; ++ch) {
      const double* ichan = in + static_cast<std::size_t>(ch) * h * w;
      double* ochan = o + static_cast<std::size_t>(ch) * 4 * h * w;
      for (int y = 0; y < h; ++y) {
        const double* irow = ichan + static_cast<std::size_t>(y) * w;
        double* r0 = ochan + static_cast<std::size_t>(2 * y) * 2 * w;
        double* r1 = r0 + 2 * w;
        for (int x = 0; x < w; ++x) {
          const double v = irow[x];
          r0[2 * x] = v;
          r0[2 * x + 1] = v;
          r1[2 * x] = v;
          r1[2 * x + 1] = v;
        }
      }
    }
  }
  Var vi = input;
  return make_op(std::move(out), {input}, [vi, c, h, w](Node& n) {
    if (!vi.requires_grad()) return;
    const double* g = n.tensor.grad().data();
    double* gin = vi.value().ensure_grad().data();
    for (int ch = 0; ch < c; ++ch) {
      const double* gchan = g + static_cast<std::size_t>(ch) * 4 * h * w;
      double* gichan = gin + static_cast<std::size_t>(ch) * h * w;
      for (int y = 0; y < h; ++y) {
        const double* r0 = gchan + static_cast<std::size_t>(2 * y) * 2 * w;
        const double* r1 = r0 + 2 * w;
        double* girow = gichan + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
          girow[x] += r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1];
        }
      }
    }
  });
}

Var concat_channels(const Var& a, const Var& b) {
  check_rank(a, 3, "concat_channels input");
  check_rank(b, 3, "concat_channels input");
  const int ca = a.shape()[0], h = a.shape()[1], w = a.shape()[2];
  const int cb = b.shape()[0];
  if (b.shape()[1] != h || b.shape()[2] != w) {
    throw ShapeError("concat_channels spatial mismatch: " + a.value().shape_str() + " vs " + b.value().shape_str());
  }
  Tensor out({ca + cb, h, w});
  const std::size_t na = a.size(), nb = b.size();
  std::copy(a.value().data(), a.value().data() + na, out.data());
  std::copy(b.value().data(), b.value().data() + nb, out.data() + na);
  Var va = a, vb = b;
  return make_op(std::move(out), {a, b}, [va, vb, na, nb](Node& n) {
    const double* g = n.tensor.grad().data();
    if (va.requires_grad()) {
      double* ga = va.value().ensure_grad().data();
      for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
    }
    if (vb.requires_grad()) {
      double* gb = vb.value().ensure_grad().data();
      for (std::size_t i = 0; i < nb; ++i) gb[i] += g[na + i];
    }
  });
}

Var fully_connected(const Var& input, const Var& weights, const Var& bias) {
  check_rank(input, 1, "fully_connected input");
  check_rank(weights, 2, "fully_connected weights");
  check_rank(bias, 1, "fully_connected bias");
  const int m = weights.shape()[0], nfeat = weights.shape()[1];
  if (input.shape()[0] != nfeat) {
    throw ShapeError("fully_connected dimension mismatch: input " + input.value().shape_str() + ", weights " +
                     weights.value().shape_str());
  }
  if (bias.shape()[0] != m) throw ShapeError("fully_connected bias size mismatch");
  Tensor out({m});
  {
    const double* x = input.value().data();
    const double* wt = weights.value().data();
    const double* b = bias.value().data();
    double* o = out.data();
    for (int r = 0; r < m; ++r) {
      const double* wrow = wt + static_cast<std::size_t>(r) * nfeat;
      double acc = b[r];
      for (int j = 0; j < nfeat; ++j) acc += wrow[j] * x[j];
      o[r] = acc;
    }
  }
  Var vi = input, vw = weights, vb = bias;
  return make_op(std::move(out), {input, weights, bias}, [vi, vw, vb, m, nfeat](Node& n) {
    const double* g = n.tensor.grad().data();
    const double* x = vi.value().data();
    const double* wt = vw.value().data();
    double* gx = vi.requires_grad() ? vi.value().ensure_grad().data() : nullptr;
    double* gw = vw.requires_grad() ? vw.value().ensure_grad().data() : nullptr;
    double* gb = vb.requires_grad() ? vb.value().ensure_grad().data() : nullptr;
    for (int r = 0; r < m; ++r) {
      const double gr = g[r];
      const double* wrow = wt + static_cast<std::size_t>(r) * nfeat;
      if (gb) gb[r] += gr;
      if (gx) {
        for (int j = 0; j < nfeat; ++j) gx[j] += gr * wrow[j];
      }
      if (gw) {
        double* gwrow = gw + static_cast<std::size_t>(r) * nfeat;
        for (int j = 0; j < nfeat; ++j) gwrow[j] += gr * x[j];
      }
    }
  });
}

Var relu(const Var& input) {
  Tensor out(input.shape());
  const double* x = input.value().data();
  double* o = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = x[i] > 0.0 ? x[i] : 0.0;
  Var vi = input;
  return make_op(std::move(out), {input}, [vi](Node& n) {
    if (!vi.requires_grad()) return;
    const double* g = n.tensor.grad().data();
    const double* x = vi.value().data();
    double* gin = vi.value().ensure_grad().data();
    for (std::size_t i = 0; i < n.tensor.size(); ++i) {
      if (x[i] > 0.0) gin[i] += g[i];
    }
  });
}

Var sigmoid(const Var& input) {
  Tensor out(input.shape());
  const double* x = input.value().data();
  double* o = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s;
    if (x[i] >= 0.0) {
      s = 1.0 / (1.0 + std::exp(-x[i]));
    } else {
      const double e = std::exp(x[i]);
      s = e / (1.0 + e);
    }
    // Keep the open-interval contract even for saturated logits.
    if (s >= 1.0) s = std::nextafter(1.0, 0.0);
    if (s <= 0.0) s = std::nextafter(0.0, 1.0);
    o[i] = s;
  }
  Var vi = input;
  return make_op(std::move(out), {input}, [vi](Node& n) {
    if (!vi.requires_grad()) return;
    const double* g = n.tensor.grad().data();
    const double* s = n.tensor.data();
    double* gin = vi.value().ensure_grad().data();
    for (std::size_t i = 0; i < n.tensor.size(); ++i) gin[i] += g[i] * s[i] * (1.0 - s[i]);
  });
}

Var flatten(const Var& input) {
  return reshape(input, {static_cast<int>(input.size())});
}

Var reshape(const Var& input, Shape shape) {
  if (shape_size(shape) != input.size()) {
    throw ShapeError("reshape size mismatch: " + input.value().shape_str() + " -> " + shape_to_string(shape));
  }
  Tensor out(std::move(shape), input.value().values());
  Var vi = input;
  return make_op(std::move(out), {input}, [vi](Node& n) {
    if (!vi.requires_grad()) return;
    const double* g = n.tensor.grad().data();
    double* gin = vi.value().ensure_grad().data();
    for (std::size_t i = 0; i < n.tensor.size(); ++i) gin[i] += g[i];
  });
}

Var sum(const Var& input) {
  double acc = 0.0;
  for (std::size_t i = 0; i < input.size(); ++i) acc += input.value()[i];
  Var vi = input;
  return make_op(Tensor({1}, {acc}), {input}, [vi](Node& n) {
    if (!vi.requires_grad()) return;
    const double g = n.tensor.grad()[0];
    double* gin = vi.value().ensure_grad().data();
    for (std::size_t i = 0; i < vi.size(); ++i) gin[i] += g;
  });
}

Var weighted_sum(const Var& input, const Tensor& projection) {
  if (projection.size() != input.size()) throw ShapeError("weighted_sum projection size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < input.size(); ++i) acc += input.value()[i] * projection[i];
  Var vi = input;
  Tensor proj = projection;
  return make_op(Tensor({1}, {acc}), {input}, [vi, proj](Node& n) {
    if (!vi.requires_grad()) return;
    const double g = n.tensor.grad()[0];
    double* gin = vi.value().ensure_grad().data();
    for (std::size_t i = 0; i < vi.size(); ++i) gin[i] += g * proj[i];
  });
}

Var sub(const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) {
    throw ShapeError("sub shape mismatch: " + a.value().shape_str() + " vs " + b.value().shape_str());
  }
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  Var va = a, vb = b;
  return make_op(std::move(out), {a, b}, [va, vb](Node& n) {
    const double* g = n.tensor.grad().data();
    if (va.requires_grad()) {
      double* ga = va.value().ensure_grad().data();
      for (std::size_t i = 0; i < n.tensor.size(); ++i) ga[i] += g[i];
    }
    if (vb.requires_grad()) {
      double* gb = vb.value().ensure_grad().data();
      for (std::size_t i = 0; i < n.tensor.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var square_sum(const Var& input) {
  double acc = 0.0;
  for (std::size_t i = 0; i < input.size(); ++i) acc += input.value()[i] * input.value()[i];
  Var vi = input;
  return make_op(Tensor({1}, {acc}), {input}, [vi](Node& n) {
    if (!vi.requires_grad()) return;
    const double g = n.tensor.grad()[0];
    const double* x = vi.value().data();
    double* gin = vi.value().ensure_grad().data();
    for (std::size_t i = 0; i < vi.size(); ++i) gin[i] += g * 2.0 * x[i];
  });
}

Var add_scaled(const Var& a, const Var& b, double b_scale) {
  if (!a.value().same_shape(b.value())) {
    throw ShapeError("add_scaled shape mismatch: " + a.value().shape_str() + " vs " + b.value().shape_str());
  }
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b_scale * b.value()[i];
  Var va = a, vb = b;
  return make_op(std::move(out), {a, b}, [va, vb, b_scale](Node& n) {
    const double* g = n.tensor.grad().data();
    if (va.requires_grad()) {
      double* ga = va.value().ensure_grad().data();
      for (std::size_t i = 0; i < n.tensor.size(); ++i) ga[i] += g[i];
    }
    if (vb.requires_grad()) {
      double* gb = vb.value().ensure_grad().data();
      for (std::size_t i = 0; i < n.tensor.size(); ++i) gb[i] += b_scale * g[i];
    }
  });
}

void backward(const Var& root, const Tensor& upstream) {
  if (!root.value().same_shape(upstream)) {
    throw ShapeError("backward seed shape " + upstream.shape_str() + " does not match root " +
                     root.value().shape_str());
  }
  // Post-order DFS: parents land before consumers, so the reversed list is a
  // valid backprop schedule.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  auto& seed = root.value().ensure_grad();
  for (std::size_t i = 0; i < seed.size(); ++i) seed[i] += upstream[i];

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backprop) {
      node->tensor.ensure_grad();
      node->backprop(*node);
    }
  }
}

void backward(const Var& root) {
  if (root.size() != 1) {
    throw ShapeError("scalar backward requires a size-1 root, got " + root.value().shape_str());
  }
  backward(root, Tensor({1}, {1.0}));
}

}  // namespace cropforge
