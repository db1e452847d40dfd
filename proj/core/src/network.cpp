#include "vadtl/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "vadtl/rng.hpp"

namespace vadtl {

namespace {

constexpr double kProbEps = 1e-12;
constexpr std::uint64_t kInitTag = 0x696e6974ULL;      // layer init stream
constexpr std::uint64_t kShuffleTag = 0x73687566ULL;   // epoch shuffle stream
constexpr std::uint64_t kPretrainTag = 0x70726574ULL;
constexpr std::uint64_t kOutputTag = 0x6f757470ULL;
constexpr std::uint64_t kFinetuneTag = 0x66696e65ULL;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void encode_layer(const LayerWeights& l, std::span<const double> x,
                  std::span<double> h) {
  for (std::size_t j = 0; j < l.out_dim; ++j) {
    double z = l.b_enc[j];
    const double* w = l.W.data() + j * l.in_dim;
    for (std::size_t i = 0; i < l.in_dim; ++i) z += w[i] * x[i];
    h[j] = sigmoid(z);
  }
}

void decode_layer(const LayerWeights& l, std::span<const double> h,
                  std::span<double> r) {
  for (std::size_t i = 0; i < l.in_dim; ++i) r[i] = l.b_dec[i];
  for (std::size_t j = 0; j < l.out_dim; ++j) {
    const double* w = l.W.data() + j * l.in_dim;
    const double hj = h[j];
    for (std::size_t i = 0; i < l.in_dim; ++i) r[i] += w[i] * hj;
  }
  for (std::size_t i = 0; i < l.in_dim; ++i) r[i] = sigmoid(r[i]);
}

struct LayerGrads {
  std::vector<double> W, be, bd;

  explicit LayerGrads(const LayerWeights& l)
      : W(l.W.size(), 0.0), be(l.out_dim, 0.0), bd(l.in_dim, 0.0) {}

  void reset() {
    std::fill(W.begin(), W.end(), 0.0);
    std::fill(be.begin(), be.end(), 0.0);
    std::fill(bd.begin(), bd.end(), 0.0);
  }
};

// Accumulates the gradient of reconstruction_ce(t, decode(encode(x))) for
// one row into g. Returns the row loss.
double accumulate_autoencoder_row(const LayerWeights& l,
                                  std::span<const double> x,
                                  std::span<const double> t, LayerGrads& g,
                                  std::vector<double>& h,
                                  std::vector<double>& r,
                                  std::vector<double>& dh) {
  encode_layer(l, x, h);
  decode_layer(l, h, r);

  double loss = 0.0;
  // delta at the decoder pre-activation is r - t (cross-entropy + sigmoid)
  for (std::size_t i = 0; i < l.in_dim; ++i) {
    const double ri = std::clamp(r[i], kProbEps, 1.0 - kProbEps);
    loss -= t[i] * std::log(ri) + (1.0 - t[i]) * std::log(1.0 - ri);
  }
  std::fill(dh.begin(), dh.end(), 0.0);
  for (std::size_t j = 0; j < l.out_dim; ++j) {
    double* gw = g.W.data() + j * l.in_dim;
    const double* w = l.W.data() + j * l.in_dim;
    const double hj = h[j];
    double acc = 0.0;
    for (std::size_t i = 0; i < l.in_dim; ++i) {
      const double d2 = r[i] - t[i];
      gw[i] += d2 * hj;  // decoder side of the tied weight
      acc += w[i] * d2;
    }
    dh[j] = acc;
  }
  for (std::size_t i = 0; i < l.in_dim; ++i) g.bd[i] += r[i] - t[i];
  for (std::size_t j = 0; j < l.out_dim; ++j) {
    const double d1 = dh[j] * h[j] * (1.0 - h[j]);
    g.be[j] += d1;
    double* gw = g.W.data() + j * l.in_dim;
    for (std::size_t i = 0; i < l.in_dim; ++i) gw[i] += d1 * x[i];
  }
  return loss;
}

double autoencoder_set_loss(const LayerWeights& l, const FeatureMatrix& input,
                            const FeatureMatrix& target) {
  std::vector<double> h(l.out_dim), r(l.in_dim);
  double total = 0.0;
  for (std::size_t n = 0; n < input.rows(); ++n) {
    encode_layer(l, input.row(n), h);
    decode_layer(l, h, r);
    total += reconstruction_ce(target.row(n), r);
  }
  return total / static_cast<double>(input.rows());
}

OutputUnit init_output_unit(std::size_t in_dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double r = std::sqrt(6.0 / static_cast<double>(in_dim + 1));
  OutputUnit out;
  out.w.resize(in_dim);
  for (double& v : out.w) v = uniform_range(rng, -r, r);
  out.b = 0.0;
  return out;
}

struct ForwardPass {
  std::vector<std::vector<double>> activations;  // per hidden layer
  double probability = 0.0;
};

void forward_full(const NetworkStack& net, std::span<const double> x,
                  ForwardPass& fp) {
  std::span<const double> cur = x;
  for (std::size_t l = 0; l < net.hidden.size(); ++l) {
    encode_layer(net.hidden[l], cur, fp.activations[l]);
    cur = fp.activations[l];
  }
  double z = net.output.b;
  for (std::size_t i = 0; i < cur.size(); ++i) z += net.output.w[i] * cur[i];
  fp.probability = sigmoid(z);
}

double finetune_set_loss(const NetworkStack& net, const FeatureMatrix& rows) {
  ForwardPass fp;
  fp.activations.resize(net.hidden.size());
  for (std::size_t l = 0; l < net.hidden.size(); ++l)
    fp.activations[l].resize(net.hidden[l].out_dim);
  double total = 0.0;
  for (std::size_t n = 0; n < rows.rows(); ++n) {
    forward_full(net, rows.row(n), fp);
    const double y = rows.labels()[n] == FrameLabel::speech ? 1.0 : 0.0;
    const double p = std::clamp(fp.probability, kProbEps, 1.0 - kProbEps);
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return total / static_cast<double>(rows.rows());
}

double dev_accuracy_of(const NetworkStack& net, const FeatureMatrix& dev) {
  const Predictions p = predict(net, dev);
  std::size_t hits = 0;
  for (std::size_t n = 0; n < dev.rows(); ++n)
    if (p.labels[n] == dev.labels()[n]) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(dev.rows());
}

// Relative error with an absolute fallback for near-zero gradients, where
// the central-difference quotient is dominated by rounding noise
// (eps * |loss| / 2h ~ 4e-12).
double grad_error(double analytic, double numeric) {
  const double mag = std::max(std::abs(analytic), std::abs(numeric));
  if (mag < 1e-5) return std::abs(analytic - numeric) < 1e-9 ? 0.0 : 1.0;
  return std::abs(analytic - numeric) / mag;
}

}  // namespace

FeatureMatrix NetworkStack::encode(const FeatureMatrix& x) const {
  if (x.dim() != input_dim)
    throw std::invalid_argument("encode: input dimension mismatch");
  FeatureMatrix cur = x;
  for (const auto& layer : hidden) {
    FeatureMatrix next(cur.rows(), layer.out_dim);
    for (std::size_t n = 0; n < cur.rows(); ++n)
      encode_layer(layer, cur.row(n), next.row(n));
    if (cur.has_labels()) next.set_labels(cur.labels());
    cur = std::move(next);
  }
  return cur;
}

double NetworkStack::output_probability(std::span<const double> top) const {
  double z = output.b;
  for (std::size_t i = 0; i < top.size(); ++i) z += output.w[i] * top[i];
  return sigmoid(z);
}

void PretrainPair::validate() const {
  if (noisy.rows() != clean.rows() || noisy.dim() != clean.dim())
    throw std::invalid_argument("PretrainPair: misaligned noisy/clean pair");
}

std::uint64_t pretrain_layer_seed(std::uint64_t run_seed,
                                  std::size_t layer_index) {
  return derive_seed(run_seed,
                     {kPretrainTag, static_cast<std::uint64_t>(layer_index)});
}

LayerWeights init_layer(std::size_t in_dim, std::size_t out_dim,
                        std::uint64_t seed) {
  if (in_dim == 0 || out_dim == 0)
    throw std::invalid_argument("init_layer: zero dimension");
  LayerWeights l;
  l.in_dim = in_dim;
  l.out_dim = out_dim;
  l.W.resize(in_dim * out_dim);
  l.b_enc.assign(out_dim, 0.0);
  l.b_dec.assign(in_dim, 0.0);
  std::mt19937_64 rng(seed);
  const double r = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  for (double& w : l.W) w = uniform_range(rng, -r, r);
  return l;
}

double reconstruction_ce(std::span<const double> target,
                         std::span<const double> reconstruction) {
  if (target.size() != reconstruction.size())
    throw std::invalid_argument("reconstruction_ce: dimension mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double r = std::clamp(reconstruction[i], kProbEps, 1.0 - kProbEps);
    loss -= target[i] * std::log(r) + (1.0 - target[i]) * std::log(1.0 - r);
  }
  return loss;
}

LayerTrainResult train_denoising_layer(const FeatureMatrix& input,
                                       const FeatureMatrix& target,
                                       std::size_t out_dim,
                                       const TrainConfig& cfg,
                                       std::uint64_t layer_seed,
                                       std::size_t checkpoint_every) {
  if (input.rows() == 0)
    throw std::invalid_argument("train_denoising_layer: empty input");
  if (input.rows() != target.rows() || input.dim() != target.dim())
    throw std::invalid_argument("train_denoising_layer: misaligned pair");
  if (cfg.batch_size == 0 || cfg.lr_pretrain <= 0.0 ||
      cfg.epochs_pretrain == 0)
    throw std::invalid_argument("train_denoising_layer: bad train config");

  LayerTrainResult res;
  res.layer = init_layer(input.dim(), out_dim,
                         derive_seed(layer_seed, {kInitTag}));
  std::mt19937_64 shuffle_rng(derive_seed(layer_seed, {kShuffleTag}));

  LayerWeights& l = res.layer;
  LayerGrads grads(l);
  std::vector<double> h(out_dim), r(l.in_dim), dh(out_dim);
  const std::size_t n_rows = input.rows();

  res.checkpoints.emplace_back(0, autoencoder_set_loss(l, input, target));

  for (std::size_t epoch = 1; epoch <= cfg.epochs_pretrain; ++epoch) {
    const auto order = shuffled_indices(n_rows, shuffle_rng);
    for (std::size_t start = 0; start < n_rows; start += cfg.batch_size) {
      const std::size_t end = std::min(n_rows, start + cfg.batch_size);
      grads.reset();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t row = order[k];
        accumulate_autoencoder_row(l, input.row(row), target.row(row), grads,
                                   h, r, dh);
      }
      const double scale = cfg.lr_pretrain / static_cast<double>(end - start);
      for (std::size_t i = 0; i < l.W.size(); ++i) l.W[i] -= scale * grads.W[i];
      for (std::size_t j = 0; j < out_dim; ++j) l.b_enc[j] -= scale * grads.be[j];
      for (std::size_t i = 0; i < l.in_dim; ++i) l.b_dec[i] -= scale * grads.bd[i];
    }
    if (checkpoint_every != 0 &&
        (epoch % checkpoint_every == 0 || epoch == cfg.epochs_pretrain)) {
      res.checkpoints.emplace_back(epoch,
                                   autoencoder_set_loss(l, input, target));
    }
  }
  return res;
}

PretrainResult pretrain_clean_stack(const FeatureMatrix& clean,
                                    std::size_t depth, const TrainConfig& cfg,
                                    std::span<const std::size_t> widths) {
  if (clean.rows() == 0)
    throw std::invalid_argument("pretrain_clean_stack: empty input");
  if (depth == 0 || depth > widths.size())
    throw std::invalid_argument("pretrain_clean_stack: bad depth");

  PretrainResult res;
  res.stack.input_dim = clean.dim();
  res.reps.push_back(clean);
  for (std::size_t l = 0; l < depth; ++l) {
    const std::uint64_t layer_seed = pretrain_layer_seed(cfg.seed, l);
    auto trained = train_denoising_layer(res.reps[l], res.reps[l], widths[l],
                                         cfg, layer_seed);
    res.layer_checkpoints.push_back(std::move(trained.checkpoints));
    res.stack.hidden.push_back(std::move(trained.layer));

    FeatureMatrix next(res.reps[l].rows(), widths[l]);
    for (std::size_t n = 0; n < next.rows(); ++n)
      encode_layer(res.stack.hidden[l], res.reps[l].row(n), next.row(n));
    res.reps.push_back(std::move(next));
  }
  res.stack.output.w.assign(res.stack.top_width(), 0.0);
  return res;
}

PretrainResult pretrain_noisy_stack(const PretrainPair& pair,
                                    const NetworkStack& clean_stack,
                                    std::size_t depth, const TrainConfig& cfg,
                                    std::span<const std::size_t> widths) {
  pair.validate();
  if (pair.noisy.rows() == 0)
    throw std::invalid_argument("pretrain_noisy_stack: empty pair");
  if (depth == 0 || depth > widths.size() || depth > clean_stack.depth())
    throw std::invalid_argument("pretrain_noisy_stack: bad depth");

  // clean representations through the accompanying clean network
  std::vector<FeatureMatrix> clean_reps;
  clean_reps.push_back(pair.clean);
  for (std::size_t l = 0; l < depth; ++l) {
    const auto& layer = clean_stack.hidden[l];
    FeatureMatrix next(clean_reps[l].rows(), layer.out_dim);
    for (std::size_t n = 0; n < next.rows(); ++n)
      encode_layer(layer, clean_reps[l].row(n), next.row(n));
    clean_reps.push_back(std::move(next));
  }

  PretrainResult res;
  res.stack.input_dim = pair.noisy.dim();
  res.reps.push_back(pair.noisy);
  for (std::size_t l = 0; l < depth; ++l) {
    const std::uint64_t layer_seed = pretrain_layer_seed(cfg.seed, l);
    // the noisy layer reconstructs the clean level-l representation
    auto trained = train_denoising_layer(res.reps[l], clean_reps[l], widths[l],
                                         cfg, layer_seed);
    res.layer_checkpoints.push_back(std::move(trained.checkpoints));
    res.stack.hidden.push_back(std::move(trained.layer));

    FeatureMatrix next(res.reps[l].rows(), widths[l]);
    for (std::size_t n = 0; n < next.rows(); ++n)
      encode_layer(res.stack.hidden[l], res.reps[l].row(n), next.row(n));
    res.reps.push_back(std::move(next));
  }
  res.stack.output.w.assign(res.stack.top_width(), 0.0);
  return res;
}

FinetuneResult finetune(const NetworkStack& stack, const FeatureMatrix& train,
                        const TrainConfig& cfg, const FeatureMatrix& dev) {
  if (!train.has_labels() || !dev.has_labels())
    throw std::invalid_argument("finetune: unlabeled data");
  if (train.dim() != stack.input_dim)
    throw std::invalid_argument("finetune: dimension mismatch");
  if (stack.hidden.empty())
    throw std::invalid_argument("finetune: stack has no hidden layers");
  if (cfg.batch_size == 0 || cfg.lr_finetune <= 0.0 ||
      cfg.epochs_finetune == 0)
    throw std::invalid_argument("finetune: bad train config");

  NetworkStack net = stack;
  net.output = init_output_unit(net.top_width(),
                                derive_seed(cfg.seed, {kOutputTag}));
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, {kFinetuneTag}));

  FinetuneResult res;
  res.stack = net;
  res.best_epoch = 0;
  res.best_dev_accuracy = dev_accuracy_of(net, dev);
  res.dev_accuracy.push_back(res.best_dev_accuracy);

  const std::size_t L = net.hidden.size();
  std::vector<LayerGrads> grads;
  grads.reserve(L);
  for (const auto& l : net.hidden) grads.emplace_back(l);
  std::vector<double> gw(net.output.w.size(), 0.0);
  double gb = 0.0;

  ForwardPass fp;
  fp.activations.resize(L);
  for (std::size_t l = 0; l < L; ++l)
    fp.activations[l].resize(net.hidden[l].out_dim);
  std::vector<std::vector<double>> delta(L);
  for (std::size_t l = 0; l < L; ++l)
    delta[l].resize(net.hidden[l].out_dim);

  const std::size_t n_rows = train.rows();
  for (std::size_t epoch = 1; epoch <= cfg.epochs_finetune; ++epoch) {
    const auto order = shuffled_indices(n_rows, shuffle_rng);
    for (std::size_t start = 0; start < n_rows; start += cfg.batch_size) {
      const std::size_t end = std::min(n_rows, start + cfg.batch_size);
      for (auto& g : grads) g.reset();
      std::fill(gw.begin(), gw.end(), 0.0);
      gb = 0.0;

      for (std::size_t k = start; k < end; ++k) {
        const std::size_t row = order[k];
        const auto x = train.row(row);
        forward_full(net, x, fp);
        const double y =
            train.labels()[row] == FrameLabel::speech ? 1.0 : 0.0;
        const double d_out = fp.probability - y;

        const std::span<const double> top = fp.activations[L - 1];
        for (std::size_t i = 0; i < top.size(); ++i)
          gw[i] += d_out * top[i];
        gb += d_out;

        auto& d_top = delta[L - 1];
        for (std::size_t j = 0; j < d_top.size(); ++j) {
          const double a = top[j];
          d_top[j] = net.output.w[j] * d_out * a * (1.0 - a);
        }
        for (std::size_t l = L; l-- > 0;) {
          const auto& layer = net.hidden[l];
          std::span<const double> below =
              l == 0 ? x : std::span<const double>(fp.activations[l - 1]);
          auto& d = delta[l];
          for (std::size_t j = 0; j < layer.out_dim; ++j) {
            grads[l].be[j] += d[j];
            double* gwrow = grads[l].W.data() + j * layer.in_dim;
            for (std::size_t i = 0; i < layer.in_dim; ++i)
              gwrow[i] += d[j] * below[i];
          }
          if (l > 0) {
            auto& d_below = delta[l - 1];
            for (std::size_t i = 0; i < layer.in_dim; ++i) {
              double acc = 0.0;
              for (std::size_t j = 0; j < layer.out_dim; ++j)
                acc += layer.W[j * layer.in_dim + i] * d[j];
              const double a = fp.activations[l - 1][i];
              d_below[i] = acc * a * (1.0 - a);
            }
          }
        }
      }

      const double scale = cfg.lr_finetune / static_cast<double>(end - start);
      for (std::size_t l = 0; l < L; ++l) {
        auto& layer = net.hidden[l];
        for (std::size_t i = 0; i < layer.W.size(); ++i)
          layer.W[i] -= scale * grads[l].W[i];
        for (std::size_t j = 0; j < layer.out_dim; ++j)
          layer.b_enc[j] -= scale * grads[l].be[j];
      }
      for (std::size_t i = 0; i < gw.size(); ++i)
        net.output.w[i] -= scale * gw[i];
      net.output.b -= scale * gb;
    }

    const double acc = dev_accuracy_of(net, dev);
    res.dev_accuracy.push_back(acc);
    if (acc > res.best_dev_accuracy) {
      res.best_dev_accuracy = acc;
      res.best_epoch = epoch;
      res.stack = net;
    }
  }
  return res;
}

Predictions predict(const NetworkStack& stack, const FeatureMatrix& features) {
  if (features.dim() != stack.input_dim)
    throw std::invalid_argument("predict: dimension mismatch");
  Predictions out;
  out.labels.resize(features.rows());
  out.probabilities.resize(features.rows());

  ForwardPass fp;
  fp.activations.resize(stack.hidden.size());
  for (std::size_t l = 0; l < stack.hidden.size(); ++l)
    fp.activations[l].resize(stack.hidden[l].out_dim);

  for (std::size_t n = 0; n < features.rows(); ++n) {
    forward_full(stack, features.row(n), fp);
    const double p = std::clamp(fp.probability, kProbEps, 1.0 - kProbEps);
    out.probabilities[n] = p;
    out.labels[n] = p > 0.5 ? FrameLabel::speech : FrameLabel::nonspeech;
  }
  return out;
}

double gradient_check_finetune(const NetworkStack& stack,
                               const FeatureMatrix& labeled) {
  if (stack.hidden.empty() || !labeled.has_labels() || labeled.rows() == 0)
    throw std::invalid_argument("gradient_check_finetune: bad inputs");
  NetworkStack net = stack;
  const std::size_t L = net.hidden.size();

  // analytic batch-mean gradient, same path as the training loop
  std::vector<LayerGrads> grads;
  for (const auto& l : net.hidden) grads.emplace_back(l);
  std::vector<double> gw(net.output.w.size(), 0.0);
  double gb = 0.0;

  ForwardPass fp;
  fp.activations.resize(L);
  for (std::size_t l = 0; l < L; ++l)
    fp.activations[l].resize(net.hidden[l].out_dim);
  std::vector<std::vector<double>> delta(L);
  for (std::size_t l = 0; l < L; ++l)
    delta[l].resize(net.hidden[l].out_dim);

  for (std::size_t n = 0; n < labeled.rows(); ++n) {
    const auto x = labeled.row(n);
    forward_full(net, x, fp);
    const double y = labeled.labels()[n] == FrameLabel::speech ? 1.0 : 0.0;
    const double d_out = fp.probability - y;
    const auto& top = fp.activations[L - 1];
    for (std::size_t i = 0; i < top.size(); ++i) gw[i] += d_out * top[i];
    gb += d_out;
    auto& d_top = delta[L - 1];
    for (std::size_t j = 0; j < d_top.size(); ++j) {
      const double a = top[j];
      d_top[j] = net.output.w[j] * d_out * a * (1.0 - a);
    }
    for (std::size_t l = L; l-- > 0;) {
      const auto& layer = net.hidden[l];
      std::span<const double> below =
          l == 0 ? x : std::span<const double>(fp.activations[l - 1]);
      auto& d = delta[l];
      for (std::size_t j = 0; j < layer.out_dim; ++j) {
        grads[l].be[j] += d[j];
        double* gwrow = grads[l].W.data() + j * layer.in_dim;
        for (std::size_t i = 0; i < layer.in_dim; ++i)
          gwrow[i] += d[j] * below[i];
      }
      if (l > 0) {
        auto& d_below = delta[l - 1];
        for (std::size_t i = 0; i < layer.in_dim; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < layer.out_dim; ++j)
            acc += layer.W[j * layer.in_dim + i] * d[j];
          const double a = fp.activations[l - 1][i];
          d_below[i] = acc * a * (1.0 - a);
        }
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(labeled.rows());

  const double h = 1e-5;
  double max_err = 0.0;
  auto check_param = [&](double* p, double analytic) {
    const double saved = *p;
    *p = saved + h;
    const double up = finetune_set_loss(net, labeled);
    *p = saved - h;
    const double dn = finetune_set_loss(net, labeled);
    *p = saved;
    max_err = std::max(max_err, grad_error(analytic, (up - dn) / (2.0 * h)));
  };

  for (std::size_t l = 0; l < L; ++l) {
    auto& layer = net.hidden[l];
    for (std::size_t i = 0; i < layer.W.size(); ++i)
      check_param(&layer.W[i], grads[l].W[i] * inv_n);
    for (std::size_t j = 0; j < layer.out_dim; ++j)
      check_param(&layer.b_enc[j], grads[l].be[j] * inv_n);
  }
  for (std::size_t i = 0; i < net.output.w.size(); ++i)
    check_param(&net.output.w[i], gw[i] * inv_n);
  check_param(&net.output.b, gb * inv_n);
  return max_err;
}

double gradient_check_pretrain_layer(const LayerWeights& layer,
                                     const FeatureMatrix& input,
                                     const FeatureMatrix& target) {
  LayerWeights l = layer;
  LayerGrads grads(l);
  std::vector<double> hbuf(l.out_dim), rbuf(l.in_dim), dh(l.out_dim);
  for (std::size_t n = 0; n < input.rows(); ++n)
    accumulate_autoencoder_row(l, input.row(n), target.row(n), grads, hbuf,
                               rbuf, dh);
  const double inv_n = 1.0 / static_cast<double>(input.rows());

  const double h = 1e-5;
  double max_err = 0.0;
  auto check_param = [&](double* p, double analytic) {
    const double saved = *p;
    *p = saved + h;
    const double up = autoencoder_set_loss(l, input, target);
    *p = saved - h;
    const double dn = autoencoder_set_loss(l, input, target);
    *p = saved;
    max_err = std::max(max_err, grad_error(analytic, (up - dn) / (2.0 * h)));
  };

  for (std::size_t i = 0; i < l.W.size(); ++i)
    check_param(&l.W[i], grads.W[i] * inv_n);
  for (std::size_t j = 0; j < l.out_dim; ++j)
    check_param(&l.b_enc[j], grads.be[j] * inv_n);
  for (std::size_t i = 0; i < l.in_dim; ++i)
    check_param(&l.b_dec[i], grads.bd[i] * inv_n);
  return max_err;
}

namespace {

constexpr char kModelMagic[4] = {'V', 'D', 'N', '1'};

void write_doubles(std::ofstream& f, const std::vector<double>& v) {
  f.write(reinterpret_cast<const char*>(v.data()),
          static_cast<std::streamsize>(sizeof(double) * v.size()));
}

void read_doubles(std::ifstream& f, std::vector<double>& v) {
  f.read(reinterpret_cast<char*>(v.data()),
         static_cast<std::streamsize>(sizeof(double) * v.size()));
}

}  // namespace

void save_model(const std::filesystem::path& path, const NetworkStack& stack,
                const TrainConfig& cfg, const std::string& normalizer_ref) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write model: " + path.string());
  f.write(kModelMagic, 4);
  std::uint32_t head[3] = {1u, static_cast<std::uint32_t>(stack.input_dim),
                           static_cast<std::uint32_t>(stack.hidden.size())};
  f.write(reinterpret_cast<const char*>(head), 12);
  for (const auto& l : stack.hidden) {
    std::uint32_t dims[2] = {static_cast<std::uint32_t>(l.in_dim),
                             static_cast<std::uint32_t>(l.out_dim)};
    f.write(reinterpret_cast<const char*>(dims), 8);
    write_doubles(f, l.W);
    write_doubles(f, l.b_enc);
    write_doubles(f, l.b_dec);
  }
  const auto out_dim = static_cast<std::uint32_t>(stack.output.w.size());
  f.write(reinterpret_cast<const char*>(&out_dim), 4);
  write_doubles(f, stack.output.w);
  f.write(reinterpret_cast<const char*>(&stack.output.b), 8);

  nlohmann::json side;
  side["train_config"] = {{"lr_pretrain", cfg.lr_pretrain},
                          {"epochs_pretrain", cfg.epochs_pretrain},
                          {"lr_finetune", cfg.lr_finetune},
                          {"epochs_finetune", cfg.epochs_finetune},
                          {"batch_size", cfg.batch_size}};
  side["seed"] = cfg.seed;
  side["normalizer"] = normalizer_ref;
  std::ofstream sf(path.string() + ".json", std::ios::trunc);
  sf << side.dump(2) << "\n";
}

NetworkStack load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read model: " + path.string());
  char magic[4];
  std::uint32_t head[3];
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(head), 12);
  if (!f || std::memcmp(magic, kModelMagic, 4) != 0 || head[0] != 1)
    throw std::runtime_error("bad model header: " + path.string());

  NetworkStack stack;
  stack.input_dim = head[1];
  stack.hidden.resize(head[2]);
  for (auto& l : stack.hidden) {
    std::uint32_t dims[2];
    f.read(reinterpret_cast<char*>(dims), 8);
    l.in_dim = dims[0];
    l.out_dim = dims[1];
    l.W.resize(l.in_dim * l.out_dim);
    l.b_enc.resize(l.out_dim);
    l.b_dec.resize(l.in_dim);
    read_doubles(f, l.W);
    read_doubles(f, l.b_enc);
    read_doubles(f, l.b_dec);
  }
  std::uint32_t out_dim = 0;
  f.read(reinterpret_cast<char*>(&out_dim), 4);
  stack.output.w.resize(out_dim);
  read_doubles(f, stack.output.w);
  f.read(reinterpret_cast<char*>(&stack.output.b), 8);
  if (!f) throw std::runtime_error("truncated model: " + path.string());
  return stack;
}

}  // namespace vadtl
