#include "telezoom/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace telezoom {

using nlohmann::json;

namespace {

constexpr const char* kMagic = "telezoom-checkpoint";
constexpr int kCheckpointVersion = 1;
constexpr double kLnEps = 1e-5;

// y[n x out] = x[n x in] * W^T + b, W stored [out x in].
void linear_fwd(const double* x, std::size_t n, std::size_t in, const double* w, const double* b, std::size_t out,
                double* y) {
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x + r * in;
    double* yr = y + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w + o * in;
      double s = b ? b[o] : 0.0;
      for (std::size_t i = 0; i < in; ++i) s += wo[i] * xr[i];
      yr[o] = s;
    }
  }
}

// Accumulates dW, db and (optionally) dx for linear_fwd.
void linear_bwd(const double* x, const double* dy, std::size_t n, std::size_t in, std::size_t out, const double* w,
                double* dw, double* db, double* dx) {
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x + r * in;
    const double* dyr = dy + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dyr[o];
      if (g == 0.0) continue;
      double* dwo = dw + o * in;
      for (std::size_t i = 0; i < in; ++i) dwo[i] += g * xr[i];
      if (db) db[o] += g;
      if (dx) {
        const double* wo = w + o * in;
        double* dxr = dx + r * in;
        for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wo[i];
      }
    }
  }
}

void layernorm_fwd(const double* x, std::size_t n, std::size_t d, const double* g, const double* b, double* xhat,
                   double* rstd, double* y) {
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x + r * d;
    double mu = 0;
    for (std::size_t i = 0; i < d; ++i) mu += xr[i];
    mu /= static_cast<double>(d);
    double var = 0;
    for (std::size_t i = 0; i < d; ++i) var += (xr[i] - mu) * (xr[i] - mu);
    var /= static_cast<double>(d);
    const double rs = 1.0 / std::sqrt(var + kLnEps);
    rstd[r] = rs;
    for (std::size_t i = 0; i < d; ++i) {
      const double h = (xr[i] - mu) * rs;
      xhat[r * d + i] = h;
      y[r * d + i] = g[i] * h + b[i];
    }
  }
}

// dx += LN backward of dy.
void layernorm_bwd(const double* dy, const double* xhat, const double* rstd, std::size_t n, std::size_t d,
                   const double* g, double* dg, double* db, double* dx) {
  std::vector<double> dh(d);
  for (std::size_t r = 0; r < n; ++r) {
    const double* dyr = dy + r * d;
    const double* hr = xhat + r * d;
    double mean_dh = 0, mean_dh_h = 0;
    for (std::size_t i = 0; i < d; ++i) {
      dg[i] += dyr[i] * hr[i];
      db[i] += dyr[i];
      dh[i] = dyr[i] * g[i];
      mean_dh += dh[i];
      mean_dh_h += dh[i] * hr[i];
    }
    mean_dh /= static_cast<double>(d);
    mean_dh_h /= static_cast<double>(d);
    for (std::size_t i = 0; i < d; ++i) dx[r * d + i] += rstd[r] * (dh[i] - mean_dh - hr[i] * mean_dh_h);
  }
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x))); }

double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + 0.044715 * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
}

void make_mask(std::vector<double>& mask, std::size_t n, double p, Rng* rng) {
  if (rng == nullptr || p <= 0) {
    mask.clear();
    return;
  }
  mask.resize(n);
  const double keep = 1.0 / (1.0 - p);
  for (auto& m : mask) m = rng->uniform() < p ? 0.0 : keep;
}

json entry_json(const EntrySpec& e) {
  return {{"name", e.name}, {"channel", e.channel}, {"kind", std::string(to_string(e.spec.kind))},
          {"zoom", e.spec.zoom}, {"offset", e.spec.offset}};
}

}  // namespace

void ModelConfig::validate() const {
  if (layers < 1) throw ConfigError("model needs at least one layer");
  if (width < 1 || heads < 1 || width % heads != 0) {
    throw ConfigError("model width " + std::to_string(width) + " must be a positive multiple of heads " +
                      std::to_string(heads));
  }
  if (ff_width < 1) throw ConfigError("feedforward width must be positive");
  if (dropout < 0 || dropout >= 1) throw ConfigError("dropout must lie in [0, 1)");
}

Normalizer Normalizer::fit(const std::vector<WindowExample>& train, const std::vector<EntrySpec>& layout) {
  if (train.empty()) throw DataError("cannot fit normalization on an empty training split");
  Normalizer n;
  n.mean.assign(layout.size(), 0.0);
  n.std.assign(layout.size(), 1.0);
  for (std::size_t e = 0; e < layout.size(); ++e) {
    double s = 0, s2 = 0, cnt = 0;
    for (const auto& w : train) {
      for (double v : w.input.at(layout[e].name).values) {
        s += v;
        s2 += v * v;
        cnt += 1;
      }
    }
    const double mu = s / cnt;
    const double var = std::max(0.0, s2 / cnt - mu * mu);
    n.mean[e] = mu;
    n.std[e] = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  double s = 0, s2 = 0, cnt = 0;
  for (const auto& w : train) {
    for (double v : w.target.values) {
      s += v;
      s2 += v * v;
      cnt += 1;
    }
  }
  const double mu = s / cnt;
  const double var = std::max(0.0, s2 / cnt - mu * mu);
  n.target_scale = var > 1e-12 ? std::sqrt(var) : 1.0;
  return n;
}

ImputationModel::ImputationModel(ModelConfig cfg, std::vector<EntrySpec> layout, int context_len, int zoom,
                                 std::string target, ValueDomain domain)
    : cfg_(cfg), layout_(std::move(layout)), context_len_(context_len), zoom_(zoom), target_(std::move(target)),
      domain_(domain) {
  cfg_.validate();
  if (layout_.empty()) throw ConfigError("model needs at least one coarse entry");
  if (context_len_ < 1 || zoom_ < 2) throw ConfigError("bad context length or zoom for the model");
  norm_.mean.assign(layout_.size(), 0.0);
  norm_.std.assign(layout_.size(), 1.0);
  build_offsets();
  init_params();
}

void ImputationModel::build_offsets() {
  const std::size_t d = static_cast<std::size_t>(cfg_.width);
  const std::size_t f = static_cast<std::size_t>(cfg_.ff_width);
  const std::size_t e = layout_.size();
  const std::size_t z = static_cast<std::size_t>(zoom_);
  std::size_t off = 0;
  auto take = [&](std::size_t n) {
    const std::size_t o = off;
    off += n;
    return o;
  };
  w_in_ = take(d * e);
  b_in_ = take(d);
  pos_ = take(static_cast<std::size_t>(context_len_) * d);
  layer_off_.clear();
  for (int l = 0; l < cfg_.layers; ++l) {
    LayerOff L{};
    L.ln1_g = take(d);
    L.ln1_b = take(d);
    L.wq = take(d * d);
    L.bq = take(d);
    L.wk = take(d * d);
    L.bk = take(d);
    L.wv = take(d * d);
    L.bv = take(d);
    L.wo = take(d * d);
    L.bo = take(d);
    L.ln2_g = take(d);
    L.ln2_b = take(d);
    L.w1 = take(f * d);
    L.b1 = take(f);
    L.w2 = take(d * f);
    L.b2 = take(d);
    layer_off_.push_back(L);
  }
  lnf_g_ = take(d);
  lnf_b_ = take(d);
  w_out_ = take(z * d);
  b_out_ = take(z);
  params_.assign(off, 0.0);
}

void ImputationModel::init_params() {
  Rng rng(derive_seed(cfg_.seed, 0x1417ull));
  const std::size_t d = static_cast<std::size_t>(cfg_.width);
  const std::size_t f = static_cast<std::size_t>(cfg_.ff_width);
  const std::size_t e = layout_.size();
  const std::size_t z = static_cast<std::size_t>(zoom_);
  std::fill(params_.begin(), params_.end(), 0.0);
  auto fill = [&](std::size_t off, std::size_t n, double sd) {
    for (std::size_t i = 0; i < n; ++i) params_[off + i] = sd * rng.normal();
  };
  auto ones = [&](std::size_t off, std::size_t n) { std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(off), n, 1.0); };
  const double resid = 1.0 / std::sqrt(2.0 * cfg_.layers);
  fill(w_in_, d * e, 1.0 / std::sqrt(static_cast<double>(e)));
  fill(pos_, static_cast<std::size_t>(context_len_) * d, 0.1);
  for (const auto& L : layer_off_) {
    ones(L.ln1_g, d);
    ones(L.ln2_g, d);
    const double sd = 1.0 / std::sqrt(static_cast<double>(d));
    fill(L.wq, d * d, sd);
    fill(L.wk, d * d, sd);
    fill(L.wv, d * d, sd);
    fill(L.wo, d * d, sd * resid);
    fill(L.w1, f * d, sd);
    fill(L.w2, d * f, resid / std::sqrt(static_cast<double>(f)));
  }
  ones(lnf_g_, d);
  fill(w_out_, z * d, 0.5 / std::sqrt(static_cast<double>(d)));
}

std::vector<double> ImputationModel::encode(const CoarseBundle& bundle) const {
  if (bundle.context_len != context_len_) {
    throw ShapeError("input has " + std::to_string(bundle.context_len) + " coarse steps, model expects " +
                     std::to_string(context_len_));
  }
  const std::size_t e = layout_.size();
  std::vector<double> tokens(token_len());
  for (std::size_t k = 0; k < e; ++k) {
    const auto* entry = bundle.find(layout_[k].name);
    if (entry == nullptr) throw ShapeError("input lacks coarse entry '" + layout_[k].name + "' required by the model");
    if (entry->entry.spec != layout_[k].spec) {
      throw ShapeError("coarse entry '" + layout_[k].name + "' does not match the model's operator or zoom");
    }
    if (entry->values.size() != static_cast<std::size_t>(context_len_)) {
      throw ShapeError("coarse entry '" + layout_[k].name + "' has the wrong length");
    }
    for (int t = 0; t < context_len_; ++t) {
      tokens[static_cast<std::size_t>(t) * e + k] = (entry->values[static_cast<std::size_t>(t)] - norm_.mean[k]) / norm_.std[k];
    }
  }
  return tokens;
}

void ImputationModel::forward(std::span<const double> tokens, std::span<double> z, Cache* cache, Rng* dropout) const {
  if (tokens.size() != token_len()) throw ShapeError("token buffer has the wrong size");
  if (z.size() != output_len()) throw ShapeError("output buffer has the wrong size");
  const std::size_t n = static_cast<std::size_t>(context_len_);
  const std::size_t d = static_cast<std::size_t>(cfg_.width);
  const std::size_t f = static_cast<std::size_t>(cfg_.ff_width);
  const std::size_t e = layout_.size();
  const std::size_t H = static_cast<std::size_t>(cfg_.heads);
  const std::size_t dh = d / H;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const double* P = params_.data();

  Cache local;
  Cache& c = cache ? *cache : local;
  c.tokens.assign(tokens.begin(), tokens.end());
  c.layers.resize(layer_off_.size());

  std::vector<double> h(n * d);
  linear_fwd(tokens.data(), n, e, P + w_in_, P + b_in_, d, h.data());
  for (std::size_t i = 0; i < n * d; ++i) h[i] += P[pos_ + i];

  for (std::size_t l = 0; l < layer_off_.size(); ++l) {
    const auto& L = layer_off_[l];
    auto& C = c.layers[l];
    C.h_in = h;
    C.xhat1.resize(n * d);
    C.rstd1.resize(n);
    C.a.resize(n * d);
    layernorm_fwd(h.data(), n, d, P + L.ln1_g, P + L.ln1_b, C.xhat1.data(), C.rstd1.data(), C.a.data());
    C.q.resize(n * d);
    C.k.resize(n * d);
    C.v.resize(n * d);
    linear_fwd(C.a.data(), n, d, P + L.wq, P + L.bq, d, C.q.data());
    linear_fwd(C.a.data(), n, d, P + L.wk, P + L.bk, d, C.k.data());
    linear_fwd(C.a.data(), n, d, P + L.wv, P + L.bv, d, C.v.data());
    C.p.assign(H * n * n, 0.0);
    C.ctx.assign(n * d, 0.0);
    for (std::size_t hh = 0; hh < H; ++hh) {
      const std::size_t o = hh * dh;
      for (std::size_t i = 0; i < n; ++i) {
        double* pr = C.p.data() + (hh * n + i) * n;
        double mx = -1e300;
        for (std::size_t j = 0; j < n; ++j) {
          double s = 0;
          for (std::size_t k = 0; k < dh; ++k) s += C.q[i * d + o + k] * C.k[j * d + o + k];
          pr[j] = s * inv_sqrt;
          mx = std::max(mx, pr[j]);
        }
        double sum = 0;
        for (std::size_t j = 0; j < n; ++j) {
          pr[j] = std::exp(pr[j] - mx);
          sum += pr[j];
        }
        for (std::size_t j = 0; j < n; ++j) pr[j] /= sum;
        for (std::size_t j = 0; j < n; ++j) {
          for (std::size_t k = 0; k < dh; ++k) C.ctx[i * d + o + k] += pr[j] * C.v[j * d + o + k];
        }
      }
    }
    std::vector<double> att(n * d);
    linear_fwd(C.ctx.data(), n, d, P + L.wo, P + L.bo, d, att.data());
    make_mask(C.mask1, n * d, cfg_.dropout, dropout);
    for (std::size_t i = 0; i < n * d; ++i) h[i] += C.mask1.empty() ? att[i] : att[i] * C.mask1[i];
    C.h_mid = h;

    C.xhat2.resize(n * d);
    C.rstd2.resize(n);
    C.b.resize(n * d);
    layernorm_fwd(h.data(), n, d, P + L.ln2_g, P + L.ln2_b, C.xhat2.data(), C.rstd2.data(), C.b.data());
    C.f1.resize(n * f);
    C.g.resize(n * f);
    linear_fwd(C.b.data(), n, d, P + L.w1, P + L.b1, f, C.f1.data());
    for (std::size_t i = 0; i < n * f; ++i) C.g[i] = gelu(C.f1[i]);
    std::vector<double> ff(n * d);
    linear_fwd(C.g.data(), n, f, P + L.w2, P + L.b2, d, ff.data());
    make_mask(C.mask2, n * d, cfg_.dropout, dropout);
    for (std::size_t i = 0; i < n * d; ++i) h[i] += C.mask2.empty() ? ff[i] : ff[i] * C.mask2[i];
  }

  c.h_last = h;
  c.xhatf.resize(n * d);
  c.rstdf.resize(n);
  c.hf.resize(n * d);
  layernorm_fwd(h.data(), n, d, P + lnf_g_, P + lnf_b_, c.xhatf.data(), c.rstdf.data(), c.hf.data());
  linear_fwd(c.hf.data(), n, d, P + w_out_, P + b_out_, static_cast<std::size_t>(zoom_), z.data());
}

void ImputationModel::backward(const Cache& c, std::span<const double> dz, std::span<double> grad) const {
  if (grad.size() != params_.size()) throw ShapeError("gradient buffer has the wrong size");
  if (dz.size() != output_len()) throw ShapeError("output gradient has the wrong size");
  const std::size_t n = static_cast<std::size_t>(context_len_);
  const std::size_t d = static_cast<std::size_t>(cfg_.width);
  const std::size_t f = static_cast<std::size_t>(cfg_.ff_width);
  const std::size_t e = layout_.size();
  const std::size_t H = static_cast<std::size_t>(cfg_.heads);
  const std::size_t dh = d / H;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const double* P = params_.data();
  double* G = grad.data();

  std::vector<double> dhf(n * d, 0.0);
  linear_bwd(c.hf.data(), dz.data(), n, d, static_cast<std::size_t>(zoom_), P + w_out_, G + w_out_, G + b_out_,
             dhf.data());
  std::vector<double> dh_(n * d, 0.0);
  layernorm_bwd(dhf.data(), c.xhatf.data(), c.rstdf.data(), n, d, P + lnf_g_, G + lnf_g_, G + lnf_b_, dh_.data());

  for (std::size_t li = layer_off_.size(); li-- > 0;) {
    const auto& L = layer_off_[li];
    const auto& C = c.layers[li];
    // Feed-forward branch.
    std::vector<double> dff(n * d);
    for (std::size_t i = 0; i < n * d; ++i) dff[i] = C.mask2.empty() ? dh_[i] : dh_[i] * C.mask2[i];
    std::vector<double> dg(n * f, 0.0);
    linear_bwd(C.g.data(), dff.data(), n, f, d, P + L.w2, G + L.w2, G + L.b2, dg.data());
    for (std::size_t i = 0; i < n * f; ++i) dg[i] *= gelu_grad(C.f1[i]);
    std::vector<double> db(n * d, 0.0);
    linear_bwd(C.b.data(), dg.data(), n, d, f, P + L.w1, G + L.w1, G + L.b1, db.data());
    layernorm_bwd(db.data(), C.xhat2.data(), C.rstd2.data(), n, d, P + L.ln2_g, G + L.ln2_g, G + L.ln2_b, dh_.data());

    // Attention branch.
    std::vector<double> datt(n * d);
    for (std::size_t i = 0; i < n * d; ++i) datt[i] = C.mask1.empty() ? dh_[i] : dh_[i] * C.mask1[i];
    std::vector<double> dctx(n * d, 0.0);
    linear_bwd(C.ctx.data(), datt.data(), n, d, d, P + L.wo, G + L.wo, G + L.bo, dctx.data());
    std::vector<double> dq(n * d, 0.0), dk(n * d, 0.0), dv(n * d, 0.0), dp(n);
    for (std::size_t hh = 0; hh < H; ++hh) {
      const std::size_t o = hh * dh;
      for (std::size_t i = 0; i < n; ++i) {
        const double* pr = C.p.data() + (hh * n + i) * n;
        double dot = 0;
        for (std::size_t j = 0; j < n; ++j) {
          double s = 0;
          for (std::size_t k = 0; k < dh; ++k) {
            s += dctx[i * d + o + k] * C.v[j * d + o + k];
            dv[j * d + o + k] += pr[j] * dctx[i * d + o + k];
          }
          dp[j] = s;
          dot += pr[j] * s;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const double ds = pr[j] * (dp[j] - dot) * inv_sqrt;
          if (ds == 0.0) continue;
          for (std::size_t k = 0; k < dh; ++k) {
            dq[i * d + o + k] += ds * C.k[j * d + o + k];
            dk[j * d + o + k] += ds * C.q[i * d + o + k];
          }
        }
      }
    }
    std::vector<double> da(n * d, 0.0);
    linear_bwd(C.a.data(), dq.data(), n, d, d, P + L.wq, G + L.wq, G + L.bq, da.data());
    linear_bwd(C.a.data(), dk.data(), n, d, d, P + L.wk, G + L.wk, G + L.bk, da.data());
    linear_bwd(C.a.data(), dv.data(), n, d, d, P + L.wv, G + L.wv, G + L.bv, da.data());
    layernorm_bwd(da.data(), C.xhat1.data(), C.rstd1.data(), n, d, P + L.ln1_g, G + L.ln1_g, G + L.ln1_b, dh_.data());
  }

  for (std::size_t i = 0; i < n * d; ++i) G[pos_ + i] += dh_[i];
  linear_bwd(c.tokens.data(), dh_.data(), n, e, d, P + w_in_, G + w_in_, G + b_in_, nullptr);
}

FineSeries ImputationModel::impute(const CoarseBundle& bundle) const {
  const auto tokens = encode(bundle);
  std::vector<double> z(output_len());
  forward(tokens, z, nullptr, nullptr);
  FineSeries out;
  out.channel = target_;
  out.domain = domain_;
  out.values.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out.values[i] = std::max(0.0, z[i] * norm_.target_scale);
  return out;
}

void ImputationModel::save(const std::string& path) const {
  json layout = json::array();
  for (const auto& e : layout_) layout.push_back(entry_json(e));
  json meta = {{"version", kCheckpointVersion},
               {"config",
                {{"layers", cfg_.layers},
                 {"width", cfg_.width},
                 {"heads", cfg_.heads},
                 {"ff_width", cfg_.ff_width},
                 {"dropout", cfg_.dropout},
                 {"seed", cfg_.seed}}},
               {"layout", layout},
               {"context_len", context_len_},
               {"zoom", zoom_},
               {"target", target_},
               {"target_domain", std::string(to_string(domain_))},
               {"normalizer", {{"mean", norm_.mean}, {"std", norm_.std}, {"target_scale", norm_.target_scale}}},
               {"info", info},
               {"param_count", params_.size()}};
  if (target_bound) meta["target_bound"] = *target_bound;
  if (!kal_state_json.empty()) meta["kal_state"] = json::parse(kal_state_json);
  const std::string m = meta.dump();
  std::string blob = std::string(kMagic) + "\n" + std::to_string(m.size()) + "\n" + m;
  const auto* bytes = reinterpret_cast<const char*>(params_.data());
  blob.append(bytes, params_.size() * sizeof(double));
  write_file_atomic(path, blob);
}

ImputationModel ImputationModel::load(const std::string& path) {
  const std::string blob = read_file(path);
  const std::string magic = std::string(kMagic) + "\n";
  if (blob.compare(0, magic.size(), magic) != 0) throw DataError(path + ": not a telezoom checkpoint");
  const auto nl = blob.find('\n', magic.size());
  if (nl == std::string::npos) throw DataError(path + ": truncated checkpoint header");
  std::size_t meta_len = 0;
  try {
    meta_len = std::stoul(blob.substr(magic.size(), nl - magic.size()));
  } catch (const std::exception&) {
    throw DataError(path + ": corrupt checkpoint header");
  }
  if (nl + 1 + meta_len > blob.size()) throw DataError(path + ": truncated checkpoint metadata");
  json meta;
  try {
    meta = json::parse(blob.substr(nl + 1, meta_len));
  } catch (const json::exception& e) {
    throw DataError(path + ": corrupt checkpoint metadata: " + e.what());
  }
  if (meta.value("version", 0) != kCheckpointVersion) {
    throw DataError(path + ": checkpoint format version " + std::to_string(meta.value("version", 0)) +
                    " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  try {
    ModelConfig cfg;
    const auto& jc = meta.at("config");
    cfg.layers = jc.at("layers");
    cfg.width = jc.at("width");
    cfg.heads = jc.at("heads");
    cfg.ff_width = jc.at("ff_width");
    cfg.dropout = jc.at("dropout");
    cfg.seed = jc.at("seed");
    std::vector<EntrySpec> layout;
    for (const auto& j : meta.at("layout")) {
      EntrySpec e;
      e.name = j.at("name");
      e.channel = j.at("channel");
      e.spec.kind = parse_coarsen_kind(j.at("kind").get<std::string>());
      e.spec.zoom = j.at("zoom");
      e.spec.offset = j.at("offset");
      layout.push_back(e);
    }
    ImputationModel m(cfg, layout, meta.at("context_len"), meta.at("zoom"), meta.at("target"),
                      parse_domain(meta.at("target_domain").get<std::string>()));
    m.norm_.mean = meta.at("normalizer").at("mean").get<std::vector<double>>();
    m.norm_.std = meta.at("normalizer").at("std").get<std::vector<double>>();
    m.norm_.target_scale = meta.at("normalizer").at("target_scale");
    m.info = meta.at("info").get<std::map<std::string, std::string>>();
    if (meta.contains("target_bound")) m.target_bound = meta.at("target_bound").get<double>();
    if (meta.contains("kal_state")) m.kal_state_json = meta.at("kal_state").dump();
    const std::size_t count = meta.at("param_count");
    if (count != m.params_.size()) throw DataError(path + ": parameter count does not match the architecture");
    const std::size_t start = nl + 1 + meta_len;
    if (blob.size() - start != count * sizeof(double)) throw DataError(path + ": truncated parameter block");
    std::memcpy(m.params_.data(), blob.data() + start, count * sizeof(double));
    return m;
  } catch (const json::exception& e) {
    throw DataError(path + ": bad checkpoint metadata: " + e.what());
  }
}

Adam::Adam(std::size_t n, double lr_, double beta1, double beta2, double eps)
    : lr(lr_), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
    v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

}  // namespace telezoom
