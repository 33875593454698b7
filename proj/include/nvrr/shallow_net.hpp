#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "nvrr/features.hpp"
#include "nvrr/rng.hpp"
#include "nvrr/simulate.hpp"
#include "nvrr/threshold.hpp"

namespace nvrr {

// Two-layer feed-forward classifier on cumulative-sum traces: sigmoid hidden
// layer, two-way softmax output (class 0 = dark, class 1 = bright).
struct ShallowNet {
  Eigen::MatrixXd w1;  // hidden x input
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd w2;  // 2 x hidden
  Eigen::VectorXd b2;  // 2
  double norm_scale = 1.0;  // cumsum divisor, fixed from the training set

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }
};

// 12.5 hidden neurons per 1000 repetitions, at least one.
inline int hidden_width_for(int repetitions) {
  return std::max(1, static_cast<int>(std::lround(12.5 * repetitions / 1000.0)));
}

namespace nets {

// P = softmax(W2 sigmoid(W1 X + b1) + b2), columns are samples.
inline Eigen::MatrixXd forward(const ShallowNet& net, const Eigen::MatrixXd& x,
                               Eigen::MatrixXd* hidden_out = nullptr) {
  Eigen::MatrixXd z1 = (net.w1 * x).colwise() + net.b1;
  Eigen::MatrixXd a1 = (1.0 / (1.0 + (-z1.array()).exp())).matrix();  // sigmoid
  Eigen::MatrixXd z2 = (net.w2 * a1).colwise() + net.b2;
  // stable two-row softmax
  Eigen::MatrixXd p(2, x.cols());
  for (Eigen::Index c = 0; c < z2.cols(); ++c) {
    const double m = std::max(z2(0, c), z2(1, c));
    const double e0 = std::exp(z2(0, c) - m), e1 = std::exp(z2(1, c) - m);
    const double s = e0 + e1;
    p(0, c) = e0 / s;
    p(1, c) = e1 / s;
  }
  if (hidden_out) *hidden_out = std::move(a1);
  return p;
}

struct Gradients {
  Eigen::MatrixXd w1, w2;
  Eigen::VectorXd b1, b2;
};

// Mean cross-entropy over the batch and its exact gradient.
inline double loss_and_gradient(const ShallowNet& net, const Eigen::MatrixXd& x,
                                std::span<const uint8_t> y, Gradients* grads) {
  const Eigen::Index n = x.cols();
  Eigen::MatrixXd a1;
  const Eigen::MatrixXd p = forward(net, x, &a1);
  double loss = 0.0;
  Eigen::MatrixXd dz2 = p;
  for (Eigen::Index c = 0; c < n; ++c) {
    loss -= std::log(std::max(p(y[c], c), 1e-300));
    dz2(y[c], c) -= 1.0;
  }
  loss /= static_cast<double>(n);
  if (grads) {
    dz2 /= static_cast<double>(n);
    grads->w2 = dz2 * a1.transpose();
    grads->b2 = dz2.rowwise().sum();
    Eigen::MatrixXd dz1 =
        (net.w2.transpose() * dz2).cwiseProduct(a1.cwiseProduct((1.0 - a1.array()).matrix()));
    grads->w1 = dz1 * x.transpose();
    grads->b1 = dz1.rowwise().sum();
  }
  return loss;
}

inline double loss_only(const ShallowNet& net, const Eigen::MatrixXd& x,
                        std::span<const uint8_t> y) {
  return loss_and_gradient(net, x, y, nullptr);
}

}  // namespace nets

struct TrainOptions {
  double val_fraction = 0.15;
  int patience = 6;        // epochs of no validation improvement before stopping
  int max_epochs = 200;
  int batch_size = 128;
  double learning_rate = 3e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool stratified_split = true;
};

struct EpochStats {
  double train_loss;
  double val_loss;
};

struct TrainResult {
  ShallowNet net;
  std::vector<EpochStats> log;
  int best_epoch = -1;  // epoch whose weights were restored
};

namespace nets {

// Builds the normalized cumsum design matrix (input x samples) and 0/1 labels.
inline void build_design(const std::vector<Trajectory>& traces, int repetitions,
                         double norm_scale, Eigen::MatrixXd* x,
                         std::vector<uint8_t>* y) {
  x->resize(repetitions, static_cast<Eigen::Index>(traces.size()));
  y->resize(traces.size());
  for (size_t i = 0; i < traces.size(); ++i) {
    if (static_cast<int>(traces[i].counts.size()) < repetitions)
      throw invalid_parameter("trace shorter than requested repetition count");
    x->col(static_cast<Eigen::Index>(i)) = cumsum_preprocess(
        std::span(traces[i].counts.data(), static_cast<size_t>(repetitions)),
        norm_scale);
    (*y)[i] = is_bright(traces[i].label) ? 1 : 0;
  }
}

// Training-set mean of bright totals; 1.0 if that would be degenerate.
inline double normalization_scale(const std::vector<Trajectory>& traces,
                                  int repetitions) {
  double sum = 0.0;
  int n = 0;
  for (const Trajectory& t : traces) {
    if (!is_bright(t.label)) continue;
    sum += total_count(std::span(t.counts.data(), static_cast<size_t>(repetitions)));
    ++n;
  }
  const double mean = n > 0 ? sum / n : 0.0;
  return mean > 0.0 ? mean : 1.0;
}

}  // namespace nets

// Trains on the first `repetitions` readouts of each trace (the full trace if
// repetitions <= 0). A seeded random 15% of the data (stratified by class) is
// held out; training stops once validation loss has not improved for
// `patience` consecutive epochs and the best-validation weights are restored.
inline TrainResult train_shallow_net(const std::vector<Trajectory>& traces,
                                     uint64_t seed, const TrainOptions& opt = {},
                                     int repetitions = 0) {
  if (traces.size() < 4) throw invalid_parameter("train: need at least 4 traces");
  const int reps = repetitions > 0 ? repetitions
                                   : static_cast<int>(traces[0].counts.size());
  bool any_bright = false, any_dark = false;
  for (const Trajectory& t : traces) (is_bright(t.label) ? any_bright : any_dark) = true;
  if (!any_bright || !any_dark)
    throw invalid_parameter("train: both classes must be present");

  const double scale = nets::normalization_scale(traces, reps);
  Eigen::MatrixXd x_all;
  std::vector<uint8_t> y_all;
  nets::build_design(traces, reps, scale, &x_all, &y_all);

  RngStream rng = RngStream::derive(seed, 0xD5);

  // Stratified validation split.
  std::vector<int> idx_bright, idx_dark;
  for (size_t i = 0; i < y_all.size(); ++i)
    (y_all[i] ? idx_bright : idx_dark).push_back(static_cast<int>(i));
  auto shuffle = [&rng](std::vector<int>& v) {
    for (size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[rng.uniform_below(i)]);
  };
  std::vector<int> train_idx, val_idx;
  if (opt.stratified_split) {
    for (auto* cls : {&idx_dark, &idx_bright}) {
      shuffle(*cls);
      const size_t n_val = std::max<size_t>(
          1, static_cast<size_t>(std::lround(opt.val_fraction * cls->size())));
      for (size_t i = 0; i < cls->size(); ++i)
        (i < n_val ? val_idx : train_idx).push_back((*cls)[i]);
    }
  } else {
    std::vector<int> all(y_all.size());
    std::iota(all.begin(), all.end(), 0);
    shuffle(all);
    const size_t n_val = std::max<size_t>(
        1, static_cast<size_t>(std::lround(opt.val_fraction * all.size())));
    for (size_t i = 0; i < all.size(); ++i)
      (i < n_val ? val_idx : train_idx).push_back(all[i]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());

  auto gather = [&](const std::vector<int>& ids, Eigen::MatrixXd* x,
                    std::vector<uint8_t>* y) {
    x->resize(reps, static_cast<Eigen::Index>(ids.size()));
    y->resize(ids.size());
    for (size_t i = 0; i < ids.size(); ++i) {
      x->col(static_cast<Eigen::Index>(i)) = x_all.col(ids[i]);
      (*y)[i] = y_all[ids[i]];
    }
  };
  Eigen::MatrixXd x_train, x_val;
  std::vector<uint8_t> y_train, y_val;
  gather(train_idx, &x_train, &y_train);
  gather(val_idx, &x_val, &y_val);

  // Symmetric uniform init scaled by fan-in.
  const int hidden = hidden_width_for(reps);
  ShallowNet net;
  net.norm_scale = scale;
  net.w1.resize(hidden, reps);
  net.b1 = Eigen::VectorXd::Zero(hidden);
  net.w2.resize(2, hidden);
  net.b2 = Eigen::VectorXd::Zero(2);
  const double lim1 = 1.0 / std::sqrt(static_cast<double>(reps));
  const double lim2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Eigen::Index i = 0; i < net.w1.size(); ++i)
    net.w1.data()[i] = (2.0 * rng.next_double() - 1.0) * lim1;
  for (Eigen::Index i = 0; i < net.w2.size(); ++i)
    net.w2.data()[i] = (2.0 * rng.next_double() - 1.0) * lim2;

  // Adam state.
  nets::Gradients m{Eigen::MatrixXd::Zero(hidden, reps), Eigen::MatrixXd::Zero(2, hidden),
                    Eigen::VectorXd::Zero(hidden), Eigen::VectorXd::Zero(2)};
  nets::Gradients v = m;
  int64_t step = 0;

  const int n_train = static_cast<int>(train_idx.size());
  const int batch = std::max(1, std::min(opt.batch_size, n_train));
  std::vector<int> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  ShallowNet best = net;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1, since_best = 0;

  Eigen::MatrixXd xb;
  std::vector<uint8_t> yb;
  for (int epoch = 0; epoch < opt.max_epochs; ++epoch) {
    shuffle(order);
    for (int start = 0; start < n_train; start += batch) {
      const int count = std::min(batch, n_train - start);
      xb.resize(reps, count);
      yb.resize(count);
      for (int i = 0; i < count; ++i) {
        xb.col(i) = x_train.col(order[start + i]);
        yb[i] = y_train[order[start + i]];
      }
      nets::Gradients g;
      nets::loss_and_gradient(net, xb, yb, &g);
      ++step;
      const double corr1 = 1.0 - std::pow(opt.adam_beta1, static_cast<double>(step));
      const double corr2 = 1.0 - std::pow(opt.adam_beta2, static_cast<double>(step));
      const double lr = opt.learning_rate * std::sqrt(corr2) / corr1;
      auto adam = [&](Eigen::MatrixXd& w, Eigen::MatrixXd& mw, Eigen::MatrixXd& vw,
                      const Eigen::MatrixXd& gw) {
        mw = opt.adam_beta1 * mw + (1.0 - opt.adam_beta1) * gw;
        vw = opt.adam_beta2 * vw + (1.0 - opt.adam_beta2) * gw.cwiseProduct(gw);
        w.array() -= lr * mw.array() / (vw.array().sqrt() + opt.adam_eps);
      };
      auto adam_v = [&](Eigen::VectorXd& w, Eigen::VectorXd& mw, Eigen::VectorXd& vw,
                        const Eigen::VectorXd& gw) {
        mw = opt.adam_beta1 * mw + (1.0 - opt.adam_beta1) * gw;
        vw = opt.adam_beta2 * vw + (1.0 - opt.adam_beta2) * gw.cwiseProduct(gw);
        w.array() -= lr * mw.array() / (vw.array().sqrt() + opt.adam_eps);
      };
      adam(net.w1, m.w1, v.w1, g.w1);
      adam(net.w2, m.w2, v.w2, g.w2);
      adam_v(net.b1, m.b1, v.b1, g.b1);
      adam_v(net.b2, m.b2, v.b2, g.b2);
    }
    const double train_loss = nets::loss_only(net, x_train, y_train);
    const double val_loss = nets::loss_only(net, x_val, y_val);
    result.log.push_back({train_loss, val_loss});
    if (val_loss < best_val) {
      best_val = val_loss;
      best = net;
      best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= opt.patience) {
      break;
    }
  }

  result.net = std::move(best);
  result.best_epoch = best_epoch;
  return result;
}

// Softmax probabilities for one trace; an exact 0.5 tie resolves to dark.
inline Prediction predict_shallow_net(const ShallowNet& net,
                                      std::span<const uint16_t> trace) {
  if (static_cast<int>(trace.size()) != net.input_dim())
    throw invalid_parameter("predict: trace length does not match network input");
  const Eigen::MatrixXd p =
      nets::forward(net, cumsum_preprocess(trace, net.norm_scale));
  Prediction pred;
  pred.p_dark = p(0, 0);
  pred.p_bright = p(1, 0);
  pred.bright = pred.p_bright > 0.5;
  return pred;
}

// Drops predictions whose winning probability falls below 0.5 + t; returns the
// kept subset (original order) and the realized discard ratio.
inline std::pair<std::vector<size_t>, double> discard_filter_ml(
    std::span<const Prediction> predictions, double t) {
  if (!(t >= 0.0 && t < 0.5))
    throw invalid_parameter("discard threshold t must lie in [0, 0.5)");
  std::vector<size_t> kept;
  kept.reserve(predictions.size());
  for (size_t i = 0; i < predictions.size(); ++i) {
    const double p_win = std::max(predictions[i].p_bright, predictions[i].p_dark);
    if (p_win >= 0.5 + t) kept.push_back(i);
  }
  const double ratio = predictions.empty()
                           ? 0.0
                           : 1.0 - static_cast<double>(kept.size()) / predictions.size();
  return {std::move(kept), ratio};
}

}  // namespace nvrr
