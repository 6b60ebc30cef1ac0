#include "rde/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rde/distortions.hpp"

namespace rde {

namespace {

// Activation tensor: spatial planes (channel-major) or a flat vector.
struct Act {
  std::vector<double> v;
  std::size_t h = 0, w = 0, c = 0;
  bool spatial = false;
};

Act input_act(const ModelSpec& model, const Signal& x) {
  if (!(x.shape() == model.input_shape)) {
    fail("model forward: input shape does not match the model's input shape");
  }
  Act a;
  a.v = x.values();
  const Shape& shape = x.shape();
  if (shape.is_composite()) {
    // Named parts become channels; all parts must share the plane size.
    const auto& [name0, dims0] = shape.parts[0];
    std::size_t plane = 1;
    for (std::size_t d : dims0) plane *= d;
    for (const auto& [name, dims] : shape.parts) {
      std::size_t p = 1;
      for (std::size_t d : dims) p *= d;
      if (p != plane || dims.size() != 2) {
        fail("model forward: composite parts must be equal-size 2D planes");
      }
    }
    a.spatial = true;
    a.h = dims0[0];
    a.w = dims0[1];
    a.c = shape.parts.size();
  } else if (shape.dims.size() >= 2) {
    a.spatial = true;
    a.h = shape.height();
    a.w = shape.width();
    a.c = shape.channels();
  }
  return a;
}

std::size_t conv_out_side(std::size_t n, std::size_t kernel, std::size_t stride) {
  const std::size_t pad = kernel / 2;
  return (n + 2 * pad - kernel) / stride + 1;
}

void conv_forward(const Layer& layer, const Act& in, Act& out) {
  if (!in.spatial) fail("conv2d: input is not spatial");
  if (in.c != layer.in_ch) {
    std::ostringstream os;
    os << "conv2d: input has " << in.c << " channels, layer expects " << layer.in_ch;
    fail(os.str());
  }
  const long h = static_cast<long>(in.h);
  const long w = static_cast<long>(in.w);
  const long k = static_cast<long>(layer.kernel);
  const long pad = k / 2;
  const long stride = static_cast<long>(layer.stride);
  out.spatial = true;
  out.h = conv_out_side(in.h, layer.kernel, layer.stride);
  out.w = conv_out_side(in.w, layer.kernel, layer.stride);
  out.c = layer.out_ch;
  out.v.assign(out.h * out.w * out.c, 0.0);

  const std::size_t in_plane = in.h * in.w;
  const std::size_t out_plane = out.h * out.w;
  for (std::size_t oc = 0; oc < layer.out_ch; ++oc) {
    double* dst = out.v.data() + oc * out_plane;
    for (std::size_t p = 0; p < out_plane; ++p) dst[p] = layer.bias[oc];
    for (std::size_t ic = 0; ic < layer.in_ch; ++ic) {
      const double* src = in.v.data() + ic * in_plane;
      const double* ker = layer.weights.data() + (oc * layer.in_ch + ic) * layer.kernel *
                          layer.kernel;
      for (std::size_t oy = 0; oy < out.h; ++oy) {
        const long base_y = static_cast<long>(oy) * stride - pad;
        for (std::size_t ox = 0; ox < out.w; ++ox) {
          const long base_x = static_cast<long>(ox) * stride - pad;
          double acc = 0.0;
          for (long ky = 0; ky < k; ++ky) {
            const long y = base_y + ky;
            if (y < 0 || y >= h) continue;
            for (long kx = 0; kx < k; ++kx) {
              const long xx = base_x + kx;
              if (xx < 0 || xx >= w) continue;
              acc += ker[ky * k + kx] * src[y * w + xx];
            }
          }
          dst[oy * out.w + ox] += acc;
        }
      }
    }
  }
}

void conv_backward(const Layer& layer, const Act& in, const Act& gout, Act& gin,
                   double* weight_grads, double* bias_grads) {
  const long h = static_cast<long>(in.h);
  const long w = static_cast<long>(in.w);
  const long k = static_cast<long>(layer.kernel);
  const long pad = k / 2;
  const long stride = static_cast<long>(layer.stride);
  gin.spatial = true;
  gin.h = in.h;
  gin.w = in.w;
  gin.c = in.c;
  gin.v.assign(in.v.size(), 0.0);

  const std::size_t in_plane = in.h * in.w;
  const std::size_t out_plane = gout.h * gout.w;
  for (std::size_t oc = 0; oc < layer.out_ch; ++oc) {
    const double* go = gout.v.data() + oc * out_plane;
    if (bias_grads) {
      double acc = 0.0;
      for (std::size_t p = 0; p < out_plane; ++p) acc += go[p];
      bias_grads[oc] += acc;
    }
    for (std::size_t ic = 0; ic < layer.in_ch; ++ic) {
      const double* src = in.v.data() + ic * in_plane;
      double* gi = gin.v.data() + ic * in_plane;
      const double* ker =
          layer.weights.data() + (oc * layer.in_ch + ic) * layer.kernel * layer.kernel;
      double* gker =
          weight_grads ? weight_grads + (oc * layer.in_ch + ic) * layer.kernel * layer.kernel
                       : nullptr;
      for (std::size_t oy = 0; oy < gout.h; ++oy) {
        const long base_y = static_cast<long>(oy) * stride - pad;
        for (std::size_t ox = 0; ox < gout.w; ++ox) {
          const long base_x = static_cast<long>(ox) * stride - pad;
          const double g = go[oy * gout.w + ox];
          if (g == 0.0) continue;
          for (long ky = 0; ky < k; ++ky) {
            const long y = base_y + ky;
            if (y < 0 || y >= h) continue;
            for (long kx = 0; kx < k; ++kx) {
              const long xx = base_x + kx;
              if (xx < 0 || xx >= w) continue;
              gi[y * w + xx] += g * ker[ky * k + kx];
              if (gker) gker[ky * k + kx] += g * src[y * w + xx];
            }
          }
        }
      }
    }
  }
}

std::vector<Act> forward_cached(const ModelSpec& model, const Signal& x) {
  std::vector<Act> acts;
  acts.reserve(model.layers.size() + 1);
  acts.push_back(input_act(model, x));
  for (const Layer& layer : model.layers) {
    const Act& in = acts.back();
    Act out;
    switch (layer.type) {
      case LayerType::dense: {
        if (in.spatial) fail("dense: input is spatial; add a flatten layer first");
        if (in.v.size() != layer.in) {
          std::ostringstream os;
          os << "dense: input size " << in.v.size() << " != layer in " << layer.in;
          fail(os.str());
        }
        out.v.assign(layer.out, 0.0);
        for (std::size_t o = 0; o < layer.out; ++o) {
          const double* row = layer.weights.data() + o * layer.in;
          double acc = layer.bias[o];
          for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * in.v[i];
          out.v[o] = acc;
        }
        break;
      }
      case LayerType::relu: {
        out = in;
        for (double& v : out.v) v = v > 0.0 ? v : 0.0;
        break;
      }
      case LayerType::conv2d:
        conv_forward(layer, in, out);
        break;
      case LayerType::flatten: {
        out.v = in.v;
        out.spatial = false;
        break;
      }
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

}  // namespace

Layer Layer::dense(std::size_t in, std::size_t out) {
  Layer l;
  l.type = LayerType::dense;
  l.in = in;
  l.out = out;
  l.weights.assign(in * out, 0.0);
  l.bias.assign(out, 0.0);
  return l;
}

Layer Layer::relu() {
  Layer l;
  l.type = LayerType::relu;
  return l;
}

Layer Layer::conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride) {
  if (kernel % 2 == 0) fail("conv2d: kernel side must be odd");
  if (stride == 0) fail("conv2d: stride must be >= 1");
  Layer l;
  l.type = LayerType::conv2d;
  l.in_ch = in_ch;
  l.out_ch = out_ch;
  l.kernel = kernel;
  l.stride = stride;
  l.weights.assign(out_ch * in_ch * kernel * kernel, 0.0);
  l.bias.assign(out_ch, 0.0);
  return l;
}

Layer Layer::flatten() {
  Layer l;
  l.type = LayerType::flatten;
  return l;
}

std::size_t Layer::param_count() const { return weights.size() + bias.size(); }

std::size_t ModelSpec::param_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.param_count();
  return n;
}

void init_params(ModelSpec& model, RngStream& rng) {
  for (Layer& layer : model.layers) {
    double scale = 0.0;
    if (layer.type == LayerType::dense) {
      scale = std::sqrt(2.0 / static_cast<double>(layer.in));
    } else if (layer.type == LayerType::conv2d) {
      scale = std::sqrt(2.0 / static_cast<double>(layer.in_ch * layer.kernel * layer.kernel));
    } else {
      continue;
    }
    for (double& w : layer.weights) w = scale * rng.gaussian();
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
}

std::vector<double> get_params(const ModelSpec& model) {
  std::vector<double> params;
  params.reserve(model.param_count());
  for (const Layer& l : model.layers) {
    params.insert(params.end(), l.weights.begin(), l.weights.end());
    params.insert(params.end(), l.bias.begin(), l.bias.end());
  }
  return params;
}

void set_params(ModelSpec& model, std::span<const double> params) {
  if (params.size() != model.param_count()) fail("set_params: parameter count mismatch");
  std::size_t pos = 0;
  for (Layer& l : model.layers) {
    std::copy(params.begin() + pos, params.begin() + pos + l.weights.size(), l.weights.begin());
    pos += l.weights.size();
    std::copy(params.begin() + pos, params.begin() + pos + l.bias.size(), l.bias.begin());
    pos += l.bias.size();
  }
}

std::vector<double> forward(const ModelSpec& model, const Signal& x) {
  std::vector<Act> acts = forward_cached(model, x);
  return std::move(acts.back().v);
}

Gradients backprop(const ModelSpec& model, const Signal& x, std::span<const double> cotangent,
                   bool want_param_grads) {
  const std::vector<Act> acts = forward_cached(model, x);
  if (cotangent.size() != acts.back().v.size()) {
    std::ostringstream os;
    os << "input_gradient: cotangent length " << cotangent.size() << " != output dim "
       << acts.back().v.size();
    fail(os.str());
  }

  Gradients grads;
  if (want_param_grads) grads.params.assign(model.param_count(), 0.0);

  // Parameter offsets per layer in the flattened vector.
  std::vector<std::size_t> offsets(model.layers.size());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    offsets[i] = pos;
    pos += model.layers[i].param_count();
  }

  Act grad;
  grad.v.assign(cotangent.begin(), cotangent.end());
  grad.spatial = acts.back().spatial;
  grad.h = acts.back().h;
  grad.w = acts.back().w;
  grad.c = acts.back().c;

  for (std::size_t li = model.layers.size(); li-- > 0;) {
    const Layer& layer = model.layers[li];
    const Act& in = acts[li];
    Act gin;
    switch (layer.type) {
      case LayerType::dense: {
        gin.spatial = false;
        gin.v.assign(layer.in, 0.0);
        double* wg = want_param_grads ? grads.params.data() + offsets[li] : nullptr;
        double* bg = want_param_grads ? wg + layer.weights.size() : nullptr;
        for (std::size_t o = 0; o < layer.out; ++o) {
          const double g = grad.v[o];
          const double* row = layer.weights.data() + o * layer.in;
          if (g != 0.0) {
            for (std::size_t i = 0; i < layer.in; ++i) gin.v[i] += g * row[i];
          }
          if (want_param_grads) {
            double* wrow = wg + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) wrow[i] += g * in.v[i];
            bg[o] += g;
          }
        }
        break;
      }
      case LayerType::relu: {
        gin = grad;
        for (std::size_t i = 0; i < gin.v.size(); ++i) {
          if (in.v[i] <= 0.0) gin.v[i] = 0.0;
        }
        gin.spatial = in.spatial;
        gin.h = in.h;
        gin.w = in.w;
        gin.c = in.c;
        break;
      }
      case LayerType::conv2d: {
        double* wg = want_param_grads ? grads.params.data() + offsets[li] : nullptr;
        double* bg = want_param_grads ? wg + layer.weights.size() : nullptr;
        conv_backward(layer, in, grad, gin, wg, bg);
        break;
      }
      case LayerType::flatten: {
        gin.v = grad.v;
        gin.spatial = in.spatial;
        gin.h = in.h;
        gin.w = in.w;
        gin.c = in.c;
        break;
      }
    }
    grad = std::move(gin);
  }
  grads.input = std::move(grad.v);
  return grads;
}

std::vector<double> input_gradient(const ModelSpec& model, const Signal& x,
                                   std::span<const double> cotangent) {
  return backprop(model, x, cotangent, false).input;
}

std::size_t infer_output_dim(const ModelSpec& model) {
  // Trace shapes through the stack without touching values.
  const Shape& shape = model.input_shape;
  bool spatial = false;
  std::size_t h = 0, w = 0, c = 0, flat = shape.value_count();
  if (shape.is_composite()) {
    spatial = true;
    h = shape.parts[0].second[0];
    w = shape.parts[0].second[1];
    c = shape.parts.size();
  } else if (shape.dims.size() >= 2) {
    spatial = true;
    h = shape.height();
    w = shape.width();
    c = shape.channels();
  }
  for (const Layer& layer : model.layers) {
    switch (layer.type) {
      case LayerType::dense:
        if (spatial) fail("model: dense after spatial output requires flatten");
        if (flat != layer.in) fail("model: dense layer input size mismatch");
        flat = layer.out;
        break;
      case LayerType::relu:
        break;
      case LayerType::conv2d:
        if (!spatial) fail("model: conv2d requires spatial input");
        if (c != layer.in_ch) fail("model: conv2d channel mismatch");
        h = conv_out_side(h, layer.kernel, layer.stride);
        w = conv_out_side(w, layer.kernel, layer.stride);
        c = layer.out_ch;
        break;
      case LayerType::flatten:
        if (spatial) {
          flat = h * w * c;
          spatial = false;
        }
        break;
    }
  }
  return spatial ? h * w * c : flat;
}

NeuralModel::NeuralModel(std::shared_ptr<const ModelSpec> spec) : spec_(std::move(spec)) {
  output_dim_ = infer_output_dim(*spec_);
}

NeuralModel::NeuralModel(ModelSpec spec)
    : NeuralModel(std::make_shared<const ModelSpec>(std::move(spec))) {}

std::vector<double> NeuralModel::forward(const Signal& x) const { return rde::forward(*spec_, x); }

std::vector<double> NeuralModel::input_gradient(const Signal& x,
                                                std::span<const double> cotangent) const {
  return rde::input_gradient(*spec_, x, cotangent);
}

AdamState AdamState::init(std::size_t n, double lr) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.lr = lr;
  return s;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    fail("adam_step: parameter/gradient/state length mismatch");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, state.t);
  const double bc2 = 1.0 - std::pow(state.beta2, state.t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

ModelSpec train_model(ModelSpec model, const std::vector<TrainExample>& data,
                      const TrainOptions& options) {
  if (data.empty()) fail("train_model: dataset is empty");
  const std::size_t n_params = model.param_count();
  std::vector<double> params = get_params(model);
  AdamState adam = AdamState::init(n_params, options.lr);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    RngStream shuffle_rng = RngStream::substream(options.seed, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(shuffle_rng.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t idx : order) {
      const TrainExample& ex = data[idx];
      set_params(model, params);
      const std::vector<double> out = forward(model, ex.input);

      double loss = 0.0;
      std::vector<double> cot(out.size(), 0.0);
      if (model.task == Task::classification) {
        if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= out.size()) {
          fail("train_model: example label out of range");
        }
        const std::vector<double> probs = softmax(out);
        loss = -std::log(std::max(probs[static_cast<std::size_t>(ex.label)], 1e-300));
        for (std::size_t j = 0; j < out.size(); ++j) {
          cot[j] = probs[j] - (j == static_cast<std::size_t>(ex.label) ? 1.0 : 0.0);
        }
      } else {
        if (ex.target.size() != out.size()) fail("train_model: target size mismatch");
        for (std::size_t j = 0; j < out.size(); ++j) {
          const double diff = out[j] - ex.target[j];
          loss += diff * diff;
          cot[j] = 2.0 * diff;
        }
      }

      std::vector<double> grad_params;
      const bool regularize = ex.flagged && options.gamma > 0.0;
      if (regularize) {
        if (ex.region.empty()) fail("train_model: flagged example without a region");
        const std::vector<double> out_tilde = forward(model, ex.modified);
        std::vector<double> cot_tilde(out.size(), 0.0);
        for (std::size_t j : ex.region) {
          const double diff = out[j] - out_tilde[j];
          loss += options.gamma * diff * diff;
          cot[j] += options.gamma * 2.0 * diff;
          cot_tilde[j] = -options.gamma * 2.0 * diff;
        }
        grad_params = backprop(model, ex.input, cot, true).params;
        const std::vector<double> gp2 = backprop(model, ex.modified, cot_tilde, true).params;
        for (std::size_t p = 0; p < grad_params.size(); ++p) grad_params[p] += gp2[p];
      } else {
        grad_params = backprop(model, ex.input, cot, true).params;
      }

      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "train_model: non-finite loss at epoch " << epoch;
        fail(os.str());
      }
      adam_step(adam, params, grad_params);
    }
  }
  set_params(model, params);
  return model;
}

double interpretation_loss(const ModelHandle& model, const Signal& x,
                           const std::vector<std::size_t>& region, const Signal& x_tilde) {
  if (region.empty()) fail("interpretation_loss: region must be non-empty");
  const std::vector<double> out = model.forward(x);
  const std::vector<double> out_tilde = model.forward(x_tilde);
  return SubsetL2Distortion(region).evaluate(out, out_tilde);
}

GradCheckReport finite_diff_check(const ModelSpec& model, const Signal& x, double tolerance,
                                  std::uint64_t seed) {
  if (tolerance <= 0.0) fail("finite_diff_check: tolerance must be positive");
  const double h = 1e-4;
  GradCheckReport report;

  // Kink detection: any relu pre-activation within 10h of zero.
  {
    std::vector<Act> acts = forward_cached(model, x);
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
      if (model.layers[li].type != LayerType::relu) continue;
      for (double v : acts[li].v) {
        if (std::abs(v) < 10.0 * h) {
          report.at_kink = true;
          break;
        }
      }
      if (report.at_kink) break;
    }
  }

  const std::size_t n = x.size();
  const std::size_t m = infer_output_dim(model);
  const bool full = n * m <= 4096;
  report.mode = full ? "full" : "directional";

  auto perturbed = [&](const std::vector<double>& delta) {
    std::vector<double> values = x.values();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += delta[i];
    return forward(model, Signal(std::move(values), x.shape()));
  };

  double max_rel = 0.0;
  if (full) {
    std::vector<double> delta(n, 0.0);
    // Per-coordinate central differences of the full Jacobian.
    std::vector<std::vector<double>> numeric(m, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      delta[i] = h;
      const std::vector<double> plus = perturbed(delta);
      delta[i] = -h;
      const std::vector<double> minus = perturbed(delta);
      delta[i] = 0.0;
      for (std::size_t j = 0; j < m; ++j) numeric[j][i] = (plus[j] - minus[j]) / (2.0 * h);
    }
    std::vector<double> cot(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      cot[j] = 1.0;
      const std::vector<double> analytic = input_gradient(model, x, cot);
      cot[j] = 0.0;
      double diff_sq = 0.0, ref_sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = analytic[i] - numeric[j][i];
        diff_sq += d * d;
        ref_sq += analytic[i] * analytic[i];
      }
      const double rel = std::sqrt(diff_sq) / std::max(std::sqrt(ref_sq), 1e-12);
      max_rel = std::max(max_rel, ref_sq == 0.0 && diff_sq == 0.0 ? 0.0 : rel);
    }
  } else {
    RngStream rng = RngStream::substream(seed, 0x6664ULL);
    const int n_dirs = 8;
    std::vector<std::vector<double>> dirs(n_dirs, std::vector<double>(n));
    for (auto& u : dirs) {
      double norm_sq = 0.0;
      for (double& ui : u) {
        ui = rng.gaussian();
        norm_sq += ui * ui;
      }
      const double inv = 1.0 / std::sqrt(norm_sq);
      for (double& ui : u) ui *= inv;
    }
    std::vector<std::vector<double>> analytic(m);
    std::vector<double> grad_norm(m, 0.0);
    std::vector<double> cot(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      cot[j] = 1.0;
      analytic[j] = input_gradient(model, x, cot);
      cot[j] = 0.0;
      double s = 0.0;
      for (double g : analytic[j]) s += g * g;
      grad_norm[j] = std::sqrt(s);
    }
    for (const auto& u : dirs) {
      std::vector<double> scaled(n);
      for (std::size_t i = 0; i < n; ++i) scaled[i] = h * u[i];
      const std::vector<double> plus = perturbed(scaled);
      for (std::size_t i = 0; i < n; ++i) scaled[i] = -h * u[i];
      const std::vector<double> minus = perturbed(scaled);
      for (std::size_t j = 0; j < m; ++j) {
        const double numeric = (plus[j] - minus[j]) / (2.0 * h);
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += analytic[j][i] * u[i];
        const double rel = std::abs(dot - numeric) / std::max(grad_norm[j], 1e-12);
        max_rel = std::max(max_rel, grad_norm[j] == 0.0 && numeric == 0.0 ? 0.0 : rel);
      }
    }
  }

  report.max_rel_error = max_rel;
  report.pass = report.at_kink || max_rel <= tolerance;
  return report;
}

}  // namespace rde
