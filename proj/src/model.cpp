#include "segcal/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "segcal/calibration.hpp"
#include "segcal/rng.hpp"
#include "segcal/seg_metrics.hpp"

namespace segcal {

namespace {

constexpr int H = ToyModel::kHidden;

// w index helpers, weights stored [out][in][ky][kx]
inline std::size_t w3x3(int out, int in, int in_ch, int ky, int kx) {
  return ((std::size_t(out) * in_ch + in) * 3 + ky) * 3 + kx;
}

struct Slice {
  std::size_t nx, ny;
};

// Same-padding 3x3 convolution over one slice. in: [y][x][cin], out: [y][x][cout].
void conv3x3(const double* in, int cin, double* out, int cout, Slice s,
             const std::vector<double>& w, const std::vector<double>& b) {
  for (std::size_t y = 0; y < s.ny; ++y)
    for (std::size_t x = 0; x < s.nx; ++x)
      for (int o = 0; o < cout; ++o) {
        double acc = b[o];
        for (int ky = 0; ky < 3; ++ky) {
          long long yy = (long long)y + ky - 1;
          if (yy < 0 || yy >= (long long)s.ny) continue;
          for (int kx = 0; kx < 3; ++kx) {
            long long xx = (long long)x + kx - 1;
            if (xx < 0 || xx >= (long long)s.nx) continue;
            const double* pix = in + (std::size_t(yy) * s.nx + xx) * cin;
            for (int i = 0; i < cin; ++i)
              acc += w[w3x3(o, i, cin, ky, kx)] * pix[i];
          }
        }
        out[(y * s.nx + x) * cout + o] = acc;
      }
}

// Backward of conv3x3: accumulates dw/db and writes din (din may be null for
// the first layer).
void conv3x3_backward(const double* in, int cin, const double* dout, int cout,
                      Slice s, const std::vector<double>& w,
                      std::vector<double>& dw, std::vector<double>& db,
                      double* din) {
  for (std::size_t y = 0; y < s.ny; ++y)
    for (std::size_t x = 0; x < s.nx; ++x)
      for (int o = 0; o < cout; ++o) {
        double g = dout[(y * s.nx + x) * cout + o];
        if (g == 0.0) continue;
        db[o] += g;
        for (int ky = 0; ky < 3; ++ky) {
          long long yy = (long long)y + ky - 1;
          if (yy < 0 || yy >= (long long)s.ny) continue;
          for (int kx = 0; kx < 3; ++kx) {
            long long xx = (long long)x + kx - 1;
            if (xx < 0 || xx >= (long long)s.nx) continue;
            std::size_t pi = (std::size_t(yy) * s.nx + xx) * cin;
            for (int i = 0; i < cin; ++i) {
              dw[w3x3(o, i, cin, ky, kx)] += g * in[pi + i];
              if (din) din[pi + i] += g * w[w3x3(o, i, cin, ky, kx)];
            }
          }
        }
      }
}

struct ForwardCache {
  std::vector<double> r1;       // relu(conv1), [vox][H]
  std::vector<double> r2;       // relu(conv2), pre-dropout
  std::vector<double> mask;     // dropout scale per r2 element (1 or 0 or 1/(1-p))
  std::vector<double> h2;       // r2 * mask
  std::vector<double> logits;   // [vox][K]
  std::vector<double> probs;    // [vox][K]
};

void head_apply(Head head, const std::vector<double>& logits, int K,
                std::vector<double>& probs) {
  probs.resize(logits.size());
  const std::size_t n = logits.size() / K;
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = logits.data() + i * K;
    double* p = probs.data() + i * K;
    if (head == Head::Softmax) {
      double mx = z[0];
      for (int k = 1; k < K; ++k) mx = std::max(mx, z[k]);
      double s = 0.0;
      for (int k = 0; k < K; ++k) {
        p[k] = std::exp(z[k] - mx);
        s += p[k];
      }
      for (int k = 0; k < K; ++k) p[k] /= s;
    } else {
      for (int k = 0; k < K; ++k) p[k] = 1.0 / (1.0 + std::exp(-z[k]));
    }
  }
}

void run_forward(const ToyModel& m, const FeatureVolume& x, bool sample_dropout,
                 std::mt19937_64& rng, ForwardCache& c) {
  if (x.channels != m.in_channels)
    throw ValidationError("forward: channel count mismatch");
  if (x.meta.dims[0] < 3 || x.meta.dims[1] < 3)
    throw ValidationError("forward: spatial dims must be >= 3x3");
  const auto [nx, ny, nz] = x.meta.dims;
  const std::size_t nvox = x.size();
  const int K = m.classes;
  Slice s{nx, ny};

  c.r1.assign(nvox * H, 0.0);
  c.r2.assign(nvox * H, 0.0);
  c.logits.assign(nvox * K, 0.0);

  const std::size_t slice_vox = nx * ny;
  for (std::size_t z = 0; z < nz; ++z) {
    const double* xin = x.data.data() + z * slice_vox * x.channels;
    double* r1 = c.r1.data() + z * slice_vox * H;
    conv3x3(xin, x.channels, r1, H, s, m.w1, m.b1);
    for (std::size_t i = 0; i < slice_vox * H; ++i) r1[i] = std::max(0.0, r1[i]);
    double* r2 = c.r2.data() + z * slice_vox * H;
    conv3x3(r1, H, r2, H, s, m.w2, m.b2);
    for (std::size_t i = 0; i < slice_vox * H; ++i) r2[i] = std::max(0.0, r2[i]);
  }

  const bool drop = sample_dropout && m.dropout_p > 0.0;
  if (drop) {
    c.mask.resize(nvox * H);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep = 1.0 - m.dropout_p;
    for (auto& v : c.mask) v = (u(rng) < keep) ? 1.0 / keep : 0.0;
    c.h2.resize(nvox * H);
    for (std::size_t i = 0; i < c.h2.size(); ++i) c.h2[i] = c.r2[i] * c.mask[i];
  } else {
    c.mask.clear();
    c.h2 = c.r2;
  }

  // 1x1 conv head
  for (std::size_t i = 0; i < nvox; ++i) {
    const double* h = c.h2.data() + i * H;
    double* z = c.logits.data() + i * K;
    for (int k = 0; k < K; ++k) {
      double acc = m.b3[k];
      for (int ch = 0; ch < H; ++ch) acc += m.w3[std::size_t(k) * H + ch] * h[ch];
      z[k] = acc;
    }
  }
  head_apply(m.head, c.logits, K, c.probs);
}

}  // namespace

std::size_t ToyModel::param_count() const {
  return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size();
}

std::vector<double> ToyModel::flatten() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const auto* v : {&w1, &b1, &w2, &b2, &w3, &b3})
    out.insert(out.end(), v->begin(), v->end());
  return out;
}

void ToyModel::unflatten(const std::vector<double>& flat) {
  std::size_t off = 0;
  for (auto* v : {&w1, &b1, &w2, &b2, &w3, &b3}) {
    std::copy(flat.begin() + off, flat.begin() + off + v->size(), v->begin());
    off += v->size();
  }
}

ToyModel init_model(int in_channels, int classes, Head head, double dropout_p,
                    std::uint64_t seed) {
  if (in_channels < 1 || classes < 2)
    throw ValidationError("init_model: need in_channels >= 1, classes >= 2");
  if (dropout_p < 0.0 || dropout_p >= 1.0)
    throw ValidationError("init_model: dropout_p must be in [0, 1)");
  ToyModel m;
  m.in_channels = in_channels;
  m.classes = classes;
  m.head = head;
  m.dropout_p = dropout_p;
  m.seed = seed;
  m.w1.resize(std::size_t(H) * in_channels * 9);
  m.b1.assign(H, 0.0);
  m.w2.resize(std::size_t(H) * H * 9);
  m.b2.assign(H, 0.0);
  m.w3.resize(std::size_t(classes) * H);
  // Start the head biased low so sigmoid channels grow toward their own
  // targets instead of collapsing onto a shared bright-region solution.
  // Softmax is shift-invariant, so CE training is unaffected.
  m.b3.assign(classes, -2.0);

  auto rng = make_rng(seed, {0x1417});
  auto fill = [&rng](std::vector<double>& w, int fan_in) {
    std::normal_distribution<double> g(0.0, std::sqrt(2.0 / fan_in));
    for (auto& v : w) v = g(rng);
  };
  fill(m.w1, in_channels * 9);
  fill(m.w2, H * 9);
  fill(m.w3, H);
  return m;
}

ProbabilityVolume forward(const ToyModel& model, const FeatureVolume& x,
                          bool sample_dropout, std::mt19937_64& rng) {
  ForwardCache c;
  run_forward(model, x, sample_dropout, rng, c);
  ProbabilityVolume out;
  out.meta = x.meta;
  out.classes = model.classes;
  out.normalized = model.head == Head::Softmax;
  out.probs.resize(c.probs.size());
  for (std::size_t i = 0; i < c.probs.size(); ++i)
    out.probs[i] = std::clamp(float(c.probs[i]), 0.0f, 1.0f);
  return out;
}

ProbabilityVolume forward(const ToyModel& model, const FeatureVolume& x) {
  std::mt19937_64 rng(0);
  return forward(model, x, false, rng);
}

LossValue ce_loss(const std::vector<double>& probs,
                  const std::vector<std::uint8_t>& labels, int classes,
                  const LossConfig& cfg) {
  const std::size_t n = labels.size();
  const auto& w = cfg.class_weights;
  LossValue out;
  out.grad.assign(probs.size(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int yi = labels[i];
    const double* p = probs.data() + i * classes;
    double* g = out.grad.data() + i * classes;
    loss -= w[yi] * std::log(std::clamp(p[yi], kLogEps, 1.0));
    // softmax-CE composite gradient w.r.t. logits
    for (int k = 0; k < classes; ++k)
      g[k] = w[yi] * (p[k] - (k == yi ? 1.0 : 0.0)) / double(n);
  }
  out.loss = loss / double(n);
  return out;
}

LossValue dice_loss(const std::vector<double>& probs,
                    const std::vector<std::uint8_t>& labels, int classes,
                    const LossConfig& cfg) {
  const std::size_t n = labels.size();
  const auto& w = cfg.class_weights;
  LossValue out;
  out.grad.assign(probs.size(), 0.0);
  double loss = 0.0;
  for (int k = 0; k < classes; ++k) {
    double num = 0.0, den = cfg.epsilon;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = probs[i * classes + k];
      const double t = labels[i] == k ? 1.0 : 0.0;
      num += p * t;
      den += p + t;
    }
    loss -= 2.0 * w[k] * num / den;
    // quotient rule: d/dp [num/den] = (t*den - num) / den^2
    const double inv_den2 = 1.0 / (den * den);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = labels[i] == k ? 1.0 : 0.0;
      out.grad[i * classes + k] -= 2.0 * w[k] * (t * den - num) * inv_den2;
    }
  }
  out.loss = loss;
  return out;
}

std::vector<double> inverse_frequency_weights(
    const std::vector<const LabelVolume*>& train_labels, int classes) {
  std::vector<std::size_t> counts(classes, 0);
  std::size_t total = 0;
  for (const auto* v : train_labels) {
    for (auto l : v->labels) counts[l]++;
    total += v->labels.size();
  }
  std::vector<double> w(classes);
  for (int k = 0; k < classes; ++k) {
    if (counts[k] == 0)
      throw ValidationError("inverse_frequency_weights: class " +
                            std::to_string(k) + " absent from training data");
    w[k] = double(total) / (double(classes) * double(counts[k]));
  }
  return w;
}

ParamGrad loss_and_param_grad(const ToyModel& m, const FeatureVolume& x,
                              const LabelVolume& y, const LossConfig& loss,
                              bool sample_dropout, std::mt19937_64& rng) {
  require_same_meta(x.meta, y.meta, "loss_and_param_grad");
  ForwardCache c;
  run_forward(m, x, sample_dropout, rng, c);
  const int K = m.classes;
  const std::size_t nvox = x.size();

  LossValue lv = loss.kind == LossKind::CrossEntropy
                     ? ce_loss(c.probs, y.labels, K, loss)
                     : dice_loss(c.probs, y.labels, K, loss);

  // Gradient w.r.t. logits.
  std::vector<double> dz(nvox * K);
  if (loss.kind == LossKind::CrossEntropy) {
    dz = lv.grad;  // already w.r.t. logits via the softmax composite
  } else if (m.head == Head::Sigmoid) {
    for (std::size_t i = 0; i < dz.size(); ++i) {
      const double p = c.probs[i];
      dz[i] = lv.grad[i] * p * (1.0 - p);
    }
  } else {  // Dice through softmax: full per-voxel Jacobian
    for (std::size_t i = 0; i < nvox; ++i) {
      const double* p = c.probs.data() + i * K;
      const double* gp = lv.grad.data() + i * K;
      double dot = 0.0;
      for (int k = 0; k < K; ++k) dot += gp[k] * p[k];
      for (int k = 0; k < K; ++k) dz[i * K + k] = p[k] * (gp[k] - dot);
    }
  }

  ParamGrad out;
  out.loss = lv.loss;

  std::vector<double> dw1(m.w1.size(), 0.0), db1(H, 0.0);
  std::vector<double> dw2(m.w2.size(), 0.0), db2(H, 0.0);
  std::vector<double> dw3(m.w3.size(), 0.0), db3(K, 0.0);

  // head (1x1 conv) backward
  std::vector<double> dh2(nvox * H, 0.0);
  for (std::size_t i = 0; i < nvox; ++i) {
    const double* h = c.h2.data() + i * H;
    const double* g = dz.data() + i * K;
    double* dh = dh2.data() + i * H;
    for (int k = 0; k < K; ++k) {
      db3[k] += g[k];
      for (int ch = 0; ch < H; ++ch) {
        dw3[std::size_t(k) * H + ch] += g[k] * h[ch];
        dh[ch] += m.w3[std::size_t(k) * H + ch] * g[k];
      }
    }
  }

  // dropout and ReLU2 backward
  if (!c.mask.empty())
    for (std::size_t i = 0; i < dh2.size(); ++i) dh2[i] *= c.mask[i];
  for (std::size_t i = 0; i < dh2.size(); ++i)
    if (c.r2[i] <= 0.0) dh2[i] = 0.0;

  const auto [nx, ny, nz] = x.meta.dims;
  Slice s{nx, ny};
  const std::size_t slice_vox = nx * ny;
  std::vector<double> dh1(nvox * H, 0.0);
  for (std::size_t z = 0; z < nz; ++z) {
    conv3x3_backward(c.r1.data() + z * slice_vox * H, H,
                     dh2.data() + z * slice_vox * H, H, s, m.w2, dw2, db2,
                     dh1.data() + z * slice_vox * H);
  }
  for (std::size_t i = 0; i < dh1.size(); ++i)
    if (c.r1[i] <= 0.0) dh1[i] = 0.0;
  for (std::size_t z = 0; z < nz; ++z) {
    conv3x3_backward(x.data.data() + z * slice_vox * x.channels, x.channels,
                     dh1.data() + z * slice_vox * H, H, s, m.w1, dw1, db1,
                     nullptr);
  }

  out.grad.reserve(m.param_count());
  for (const auto* v : {&dw1, &db1, &dw2, &db2, &dw3, &db3})
    out.grad.insert(out.grad.end(), v->begin(), v->end());
  return out;
}

double mean_foreground_dice(const LabelVolume& pred, const LabelVolume& truth) {
  double sum = 0.0;
  int n = 0;
  for (int k = 1; k < truth.classes; ++k) {
    auto d = dice_coefficient(pred, truth, k);
    if (d) {
      sum += *d;
      ++n;
    }
  }
  return n > 0 ? sum / n : 0.0;
}

TrainResult train(ToyModel model, const Dataset& train_set,
                  const Dataset& val_set, const LossConfig& loss,
                  const TrainConfig& cfg) {
  if (train_set.empty() || val_set.empty())
    throw ValidationError("train: empty train or validation split");
  if (!(cfg.lr >= 0.0) || cfg.epochs < 1)
    throw ValidationError("train: bad lr/epochs");
  if (int(loss.class_weights.size()) != model.classes)
    throw ValidationError("train: class_weights length must equal K");

  const std::size_t np = model.param_count();
  std::vector<double> params = model.flatten();
  std::vector<double> adam_m(np, 0.0), adam_v(np, 0.0);
  long long step = 0;
  double lr = cfg.lr;

  TrainResult res;
  res.model = model;
  res.best_val_dice = -1.0;
  double plateau_best = -1.0;
  int since_best = 0, since_plateau = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto shuffle_rng = make_rng(cfg.seed, {0x5u, std::uint64_t(epoch)});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    auto drop_rng = make_rng(cfg.seed, {0xDu, std::uint64_t(epoch)});

    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += std::size_t(cfg.batch_size)) {
      std::size_t stop =
          std::min(order.size(), start + std::size_t(cfg.batch_size));
      std::vector<double> grad(np, 0.0);
      double batch_loss = 0.0;
      for (std::size_t j = start; j < stop; ++j) {
        const auto& [fx, fy] = train_set[order[j]];
        auto pg = loss_and_param_grad(model, fx, fy, loss, true, drop_rng);
        batch_loss += pg.loss;
        for (std::size_t i = 0; i < np; ++i) grad[i] += pg.grad[i];
      }
      const double inv = 1.0 / double(stop - start);
      batch_loss *= inv;
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("train: loss diverged at epoch " +
                                 std::to_string(epoch));
      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, double(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, double(step));
      for (std::size_t i = 0; i < np; ++i) {
        const double g = grad[i] * inv;
        adam_m[i] = cfg.beta1 * adam_m[i] + (1.0 - cfg.beta1) * g;
        adam_v[i] = cfg.beta2 * adam_v[i] + (1.0 - cfg.beta2) * g * g;
        params[i] -= lr * (adam_m[i] / bc1) /
                     (std::sqrt(adam_v[i] / bc2) + cfg.adam_eps);
      }
      model.unflatten(params);
      epoch_loss += batch_loss;
      ++batches;
    }

    double val_dice = 0.0;
    for (const auto& [fx, fy] : val_set)
      val_dice += mean_foreground_dice(argmax_labels(forward(model, fx)), fy);
    val_dice /= double(val_set.size());

    res.history.push_back(
        EpochStats{epoch, epoch_loss / double(batches), val_dice, lr});

    if (val_dice > res.best_val_dice) {
      res.best_val_dice = val_dice;
      res.model = model;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (val_dice > plateau_best + cfg.plateau_threshold) {
      plateau_best = val_dice;
      since_plateau = 0;
    } else if (++since_plateau >= cfg.plateau_patience) {
      lr *= cfg.lr_factor;
      since_plateau = 0;
    }
    if (since_best >= cfg.early_stop_patience) break;
  }
  return res;
}

std::vector<TrainResult> train_ensemble(int count, const Dataset& train_set,
                                        const Dataset& val_set,
                                        const LossConfig& loss,
                                        const TrainConfig& cfg,
                                        double dropout_p) {
  if (count < 1) throw ValidationError("train_ensemble: count must be >= 1");
  const Head head =
      loss.kind == LossKind::Dice ? Head::Sigmoid : Head::Softmax;
  std::vector<TrainResult> out;
  out.reserve(count);
  for (int m = 0; m < count; ++m) {
    TrainConfig member_cfg = cfg;
    member_cfg.seed = substream(cfg.seed, {0xEA5u, std::uint64_t(m)});
    out.push_back(train(init_model(train_set[0].first.channels,
                                   train_set[0].second.classes, head,
                                   dropout_p, member_cfg.seed),
                        train_set, val_set, loss, member_cfg));
  }
  return out;
}

namespace {
constexpr char kModelMagic[] = "TOYM1\n";
}

void save_model(const ToyModel& model, const std::filesystem::path& path) {
  nlohmann::json j;
  j["classes"] = model.classes;
  j["dropout_p"] = model.dropout_p;
  j["head"] = model.head == Head::Softmax ? "softmax" : "sigmoid";
  j["in_channels"] = model.in_channels;
  j["seed"] = model.seed;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << kModelMagic << j.dump() << '\n';
  auto flat = model.flatten();
  out.write(reinterpret_cast<const char*>(flat.data()),
            std::streamsize(flat.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

ToyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[6];
  in.read(magic, 6);
  if (in.gcount() != 6 || std::memcmp(magic, kModelMagic, 6) != 0)
    throw std::runtime_error("missing TOYM1 magic in " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("missing TOYM1 header in " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed TOYM1 header: " + std::string(e.what()));
  }
  ToyModel m;
  try {
    m.classes = j.at("classes").get<int>();
    m.dropout_p = j.at("dropout_p").get<double>();
    std::string head = j.at("head").get<std::string>();
    if (head == "softmax")
      m.head = Head::Softmax;
    else if (head == "sigmoid")
      m.head = Head::Sigmoid;
    else
      throw std::runtime_error("unknown head '" + head + "'");
    m.in_channels = j.at("in_channels").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("bad TOYM1 header fields: " + std::string(e.what()));
  }
  if (m.classes < 2 || m.in_channels < 1 || m.dropout_p < 0.0 ||
      m.dropout_p >= 1.0)
    throw std::runtime_error("invalid TOYM1 header values in " + path.string());
  m.w1.resize(std::size_t(H) * m.in_channels * 9);
  m.b1.resize(H);
  m.w2.resize(std::size_t(H) * H * 9);
  m.b2.resize(H);
  m.w3.resize(std::size_t(m.classes) * H);
  m.b3.resize(m.classes);
  std::vector<double> flat(m.param_count());
  in.read(reinterpret_cast<char*>(flat.data()),
          std::streamsize(flat.size() * sizeof(double)));
  if (std::size_t(in.gcount()) != flat.size() * sizeof(double))
    throw std::runtime_error("truncated TOYM1 payload in " + path.string() +
                             ": expected " +
                             std::to_string(flat.size() * sizeof(double)) +
                             " bytes, got " + std::to_string(in.gcount()));
  char extra;
  if (in.read(&extra, 1))
    throw std::runtime_error("trailing bytes after TOYM1 payload in " +
                             path.string());
  m.unflatten(flat);
  return m;
}

std::string history_csv(const std::vector<EpochStats>& history) {
  std::ostringstream out;
  out << "epoch,train_loss,val_dice,lr\n";
  for (const auto& h : history)
    out << h.epoch << ',' << format_real(h.train_loss) << ','
        << format_real(h.val_dice) << ',' << format_real(h.lr) << '\n';
  return out.str();
}

}  // namespace segcal
