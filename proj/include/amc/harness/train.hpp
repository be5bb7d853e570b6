#ifndef AMC_HARNESS_TRAIN_HPP
#define AMC_HARNESS_TRAIN_HPP

// Mini-batch training with validation-driven learning-rate decay, early
// stopping and best-checkpoint selection.

#include <cmath>
#include <filesystem>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "amc/harness/config.hpp"
#include "amc/harness/evaluate.hpp"
#include "amc/model/fifnet.hpp"
#include "amc/nn/checkpoint.hpp"
#include "amc/nn/optimizer.hpp"

namespace amc::harness {

struct EpochStats {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  bool best = false;
};

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_val_accuracy = -1.0;
  std::string stop_reason;
};

class NonFiniteLoss : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using EpochCallback = std::function<void(const EpochStats&)>;

inline std::string log_header() { return "epoch,learning_rate,train_loss,train_accuracy,val_loss,val_accuracy,best\n"; }

inline std::string log_row(const EpochStats& e)
{
  return std::to_string(e.epoch) + "," + fmt_double(e.learning_rate, 8) + "," + fmt_double(e.train_loss, 6) + "," +
         fmt_double(e.train_accuracy, 6) + "," + fmt_double(e.val_loss, 6) + "," + fmt_double(e.val_accuracy, 6) + "," +
         (e.best ? "1" : "0") + "\n";
}

/// Mean loss and accuracy over a source, without touching gradients.
template <typename T>
std::pair<double, double> loss_and_accuracy(const model::FifNet<T>& net, const ImageSource& src, int micro_batch)
{
  if (src.size() == 0) return {0.0, 0.0};
  const auto logits = infer_logits(net, src, micro_batch);
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto p = nn::softmax<double>(logits[i]);
    loss -= std::log(std::max(p[src.record(i).label], 1e-300));
    correct += argmax(logits[i]) == src.record(i).label;
  }
  return {loss / static_cast<double>(src.size()), static_cast<double>(correct) / static_cast<double>(src.size())};
}

/// Trains `net` in place and leaves it holding the best-validation weights,
/// which are also written to cfg.checkpoint.
template <typename T>
TrainResult train(model::FifNet<T>& net, const ImageSource& train_set, const ImageSource& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {})
{
  cfg.validate();
  if (train_set.size() == 0) reject("training split is empty");
  if (train_set.image_size() != net.spec.input_size)
    reject("training images are ", train_set.image_size(), " px, model expects ", net.spec.input_size);

  net.graph.init_weights(mix_seed(cfg.seed, 0x1417));
  nn::Optimizer<T> opt(net.graph, cfg.optimizer);
  nn::Gradients<T> grads(net.graph);
  nn::Workspace<T> ws;

  const std::filesystem::path ckpt_path = cfg.checkpoint;
  std::string log = log_header();
  if (!cfg.log.empty()) write_text_atomic(cfg.log, log);

  TrainResult res;
  nn::Checkpoint best = model::to_checkpoint(net);
  double best_val_loss = 1e300;
  int since_best = 0;
  int since_decay = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;

    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(b1 - b0);
      grads.zero();
      for (std::size_t m0 = b0; m0 < b1; m0 += static_cast<std::size_t>(cfg.micro_batch)) {
        const std::size_t m1 = std::min(b1, m0 + static_cast<std::size_t>(cfg.micro_batch));
        const std::span<const std::size_t> idx(order.data() + m0, m1 - m0);
        std::vector<int> labels;
        for (auto i : idx) labels.push_back(train_set.record(i).label);
        const auto& logits = ws.forward(net.graph, train_set.batch<T>(idx));
        auto lg = nn::softmax_cross_entropy(logits, std::span<const int>(labels));
        const double mb = static_cast<double>(idx.size());
        if (!std::isfinite(static_cast<double>(lg.loss))) {
          const auto dump = std::filesystem::path(ckpt_path.string() + ".last_good");
          nn::save_checkpoint(dump, model::to_checkpoint(net));
          throw NonFiniteLoss("non-finite training loss at epoch " + std::to_string(epoch) +
                              "; last finite weights saved to " + dump.string());
        }
        for (int n = 0; n < logits.shape.n; ++n) {
          const T* row = logits.sample(n);
          const int k = static_cast<int>(logits.shape.sample_size());
          correct += (std::max_element(row, row + k) - row) == labels[n];
        }
        loss_sum += static_cast<double>(lg.loss) * mb;
        // softmax_cross_entropy averages over the micro-batch; rescale to the batch mean.
        for (auto& g : lg.grad.data) g *= static_cast<T>(mb * inv_batch);
        ws.backward(net.graph, lg.grad, grads);
      }
      opt.step(net.graph, grads);
    }

    EpochStats st;
    st.epoch = epoch;
    st.learning_rate = opt.learning_rate();
    st.train_loss = loss_sum / static_cast<double>(order.size());
    st.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    const ImageSource& sel = val_set.size() ? val_set : train_set;
    std::tie(st.val_loss, st.val_accuracy) = loss_and_accuracy(net, sel, cfg.micro_batch);

    const bool improved = st.val_accuracy > res.best_val_accuracy ||
                          (st.val_accuracy == res.best_val_accuracy && st.val_loss < best_val_loss);
    if (improved) {
      st.best = true;
      res.best_epoch = epoch;
      res.best_val_accuracy = st.val_accuracy;
      best_val_loss = st.val_loss;
      best = model::to_checkpoint(net);
      if (!cfg.checkpoint.empty()) nn::save_checkpoint(ckpt_path, best);
      since_best = 0;
      since_decay = 0;
    } else {
      ++since_best;
      ++since_decay;
    }
    res.history.push_back(st);
    log += log_row(st);
    if (!cfg.log.empty()) write_text_atomic(cfg.log, log);
    if (on_epoch) on_epoch(st);

    if (cfg.stop_at_val_accuracy && st.val_accuracy >= *cfg.stop_at_val_accuracy) {
      res.stop_reason = "target validation accuracy reached";
      break;
    }
    if (since_best >= cfg.early_stop_patience) {
      res.stop_reason = "early stop: no validation improvement";
      break;
    }
    if (since_decay >= cfg.plateau_patience) {
      opt.set_learning_rate(opt.learning_rate() * cfg.lr_decay);
      since_decay = 0;
    }
  }
  if (res.stop_reason.empty()) res.stop_reason = "epoch limit";
  best.apply_to(net.graph);
  return res;
}

} // namespace amc::harness

#endif // AMC_HARNESS_TRAIN_HPP
