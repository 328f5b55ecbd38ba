#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "penlearn/learners.hpp"
#include "training.hpp"

namespace penlearn {

std::string to_string(CellKind kind) {
  switch (kind) {
    case CellKind::Rnn:
      return "rnn";
    case CellKind::Lstm:
      return "lstm";
    case CellKind::Gru:
      return "gru";
  }
  return "?";
}

CellKind parse_cell_kind(const std::string& name) {
  if (name == "rnn") return CellKind::Rnn;
  if (name == "lstm") return CellKind::Lstm;
  if (name == "gru") return CellKind::Gru;
  throw std::invalid_argument("unknown cell kind '" + name + "' (rnn|lstm|gru)");
}

std::size_t RecurrentArch::gate_count() const {
  switch (cell) {
    case CellKind::Rnn:
      return 1;
    case CellKind::Lstm:
      return 4;
    case CellKind::Gru:
      return 3;
  }
  return 1;
}

namespace {

void check_arch(const RecurrentArch& a) {
  if (a.layers < 1 || a.layers > 2) throw std::invalid_argument("recurrent layers must be 1 or 2");
  if (a.hidden < 1) throw std::invalid_argument("recurrent hidden size must be >= 1");
}

struct LayerOffsets {
  std::size_t wx, wh, b, bh;  // bh only for GRU
  std::size_t inputs;
};

struct Layout {
  std::vector<LayerOffsets> layers;
  std::size_t readout = 0;
  std::size_t total = 0;

  explicit Layout(const RecurrentArch& a) {
    check_arch(a);
    const std::size_t m = static_cast<std::size_t>(a.hidden);
    const std::size_t g = a.gate_count() * m;
    std::size_t off = 0;
    for (int l = 0; l < a.layers; ++l) {
      LayerOffsets lo{};
      lo.inputs = l == 0 ? 1 : m;
      lo.wx = off;
      off += g * lo.inputs;
      lo.wh = off;
      off += g * m;
      lo.b = off;
      off += g;
      lo.bh = off;
      if (a.cell == CellKind::Gru) off += g;
      layers.push_back(lo);
    }
    readout = off;
    total = off + m + 1;
  }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Activations of one layer over the whole sequence, kept for the backward
// pass. Time index t runs 1..N; h and c hold t = 0..N.
struct LayerTrace {
  std::vector<double> h, c, act, ghn;
};

class Unrolled {
 public:
  Unrolled(const RecurrentModel& model, std::span<const double> values)
      : model_(model), layout_(model.arch), values_(values),
        m_(static_cast<std::size_t>(model.arch.hidden)), g_(model.arch.gate_count() * m_),
        n_(values.size()) {
    if (model.params.size() != layout_.total)
      throw std::invalid_argument("recurrent parameter vector has the wrong size");
    traces_.resize(layout_.layers.size());
    for (std::size_t l = 0; l < traces_.size(); ++l) forward_layer(l);
  }

  std::span<const double> last_hidden() const {
    return std::span<const double>(traces_.back().h).subspan(n_ * m_, m_);
  }

  double prediction() const {
    const double* beta = model_.params.data() + layout_.readout;
    auto h = last_hidden();
    double y = beta[m_];
    for (std::size_t j = 0; j < m_; ++j) y += beta[j] * h[j];
    return y;
  }

  void backward(double dpred, std::span<double> grad) const {
    const double* beta = model_.params.data() + layout_.readout;
    auto h = last_hidden();
    for (std::size_t j = 0; j < m_; ++j) grad[layout_.readout + j] += dpred * h[j];
    grad[layout_.readout + m_] += dpred;

    std::vector<double> dh_ext((n_ + 1) * m_, 0.0);
    for (std::size_t j = 0; j < m_; ++j) dh_ext[n_ * m_ + j] = dpred * beta[j];
    for (std::size_t l = traces_.size(); l-- > 0;) {
      std::vector<double> dx;
      backward_layer(l, dh_ext, grad, l > 0 ? &dx : nullptr);
      if (l > 0) dh_ext = std::move(dx);
    }
  }

 private:
  const double* input(std::size_t l, std::size_t t) const {
    return l == 0 ? &values_[t - 1] : &traces_[l - 1].h[t * m_];
  }

  void forward_layer(std::size_t l) {
    const auto& off = layout_.layers[l];
    const double* p = model_.params.data();
    const double* wx = p + off.wx;
    const double* wh = p + off.wh;
    const double* b = p + off.b;
    const std::size_t k = off.inputs;
    auto& tr = traces_[l];
    tr.h.assign((n_ + 1) * m_, 0.0);
    tr.act.assign(n_ * g_, 0.0);
    if (model_.arch.cell == CellKind::Lstm) tr.c.assign((n_ + 1) * m_, 0.0);
    if (model_.arch.cell == CellKind::Gru) tr.ghn.assign(n_ * m_, 0.0);
    std::vector<double> ax(g_), ah(g_);
    for (std::size_t t = 1; t <= n_; ++t) {
      const double* x = input(l, t);
      const double* hp = &tr.h[(t - 1) * m_];
      double* hc = &tr.h[t * m_];
      double* act = &tr.act[(t - 1) * g_];
      for (std::size_t r = 0; r < g_; ++r) {
        double sx = b[r];
        for (std::size_t j = 0; j < k; ++j) sx += wx[r * k + j] * x[j];
        double sh = 0.0;
        for (std::size_t j = 0; j < m_; ++j) sh += wh[r * m_ + j] * hp[j];
        ax[r] = sx;
        ah[r] = sh;
      }
      switch (model_.arch.cell) {
        case CellKind::Rnn:
          for (std::size_t j = 0; j < m_; ++j) hc[j] = act[j] = std::tanh(ax[j] + ah[j]);
          break;
        case CellKind::Lstm: {
          const double* cp = &tr.c[(t - 1) * m_];
          double* cc = &tr.c[t * m_];
          for (std::size_t j = 0; j < m_; ++j) {
            const double i = sigmoid(ax[j] + ah[j]);
            const double f = sigmoid(ax[m_ + j] + ah[m_ + j]);
            const double gg = std::tanh(ax[2 * m_ + j] + ah[2 * m_ + j]);
            const double o = sigmoid(ax[3 * m_ + j] + ah[3 * m_ + j]);
            act[j] = i;
            act[m_ + j] = f;
            act[2 * m_ + j] = gg;
            act[3 * m_ + j] = o;
            cc[j] = f * cp[j] + i * gg;
            hc[j] = o * std::tanh(cc[j]);
          }
          break;
        }
        case CellKind::Gru: {
          const double* bh = p + off.bh;
          double* ghn = &tr.ghn[(t - 1) * m_];
          for (std::size_t j = 0; j < m_; ++j) {
            const double r = sigmoid(ax[j] + ah[j] + bh[j]);
            const double z = sigmoid(ax[m_ + j] + ah[m_ + j] + bh[m_ + j]);
            ghn[j] = ah[2 * m_ + j] + bh[2 * m_ + j];
            const double nn = std::tanh(ax[2 * m_ + j] + r * ghn[j]);
            act[j] = r;
            act[m_ + j] = z;
            act[2 * m_ + j] = nn;
            hc[j] = (1.0 - z) * nn + z * hp[j];
          }
          break;
        }
      }
    }
  }

  // dh_ext holds d loss / d h_t for t = 0..N coming from above; dx receives
  // d loss / d input_t for the layer below.
  void backward_layer(std::size_t l, const std::vector<double>& dh_ext, std::span<double> grad,
                      std::vector<double>* dx) const {
    const auto& off = layout_.layers[l];
    const double* p = model_.params.data();
    const double* wx = p + off.wx;
    const double* wh = p + off.wh;
    const std::size_t k = off.inputs;
    const auto& tr = traces_[l];
    if (dx) dx->assign((n_ + 1) * k, 0.0);
    std::vector<double> dh_next(m_, 0.0), dc_next(m_, 0.0), dh(m_);
    std::vector<double> dax(g_), dah(g_);
    const bool gru = model_.arch.cell == CellKind::Gru;
    for (std::size_t t = n_; t >= 1; --t) {
      const double* x = input(l, t);
      const double* hp = &tr.h[(t - 1) * m_];
      const double* act = &tr.act[(t - 1) * g_];
      for (std::size_t j = 0; j < m_; ++j) dh[j] = dh_ext[t * m_ + j] + dh_next[j];
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      switch (model_.arch.cell) {
        case CellKind::Rnn:
          for (std::size_t j = 0; j < m_; ++j) dax[j] = dah[j] = dh[j] * (1.0 - act[j] * act[j]);
          break;
        case CellKind::Lstm: {
          const double* cp = &tr.c[(t - 1) * m_];
          const double* cc = &tr.c[t * m_];
          for (std::size_t j = 0; j < m_; ++j) {
            const double i = act[j], f = act[m_ + j], gg = act[2 * m_ + j], o = act[3 * m_ + j];
            const double tc = std::tanh(cc[j]);
            const double dc = dc_next[j] + dh[j] * o * (1.0 - tc * tc);
            dax[j] = dc * gg * i * (1.0 - i);
            dax[m_ + j] = dc * cp[j] * f * (1.0 - f);
            dax[2 * m_ + j] = dc * i * (1.0 - gg * gg);
            dax[3 * m_ + j] = dh[j] * tc * o * (1.0 - o);
            dc_next[j] = dc * f;
          }
          std::copy(dax.begin(), dax.end(), dah.begin());
          break;
        }
        case CellKind::Gru: {
          const double* ghn = &tr.ghn[(t - 1) * m_];
          for (std::size_t j = 0; j < m_; ++j) {
            const double r = act[j], z = act[m_ + j], nn = act[2 * m_ + j];
            const double dn = dh[j] * (1.0 - z) * (1.0 - nn * nn);
            const double dz = dh[j] * (hp[j] - nn) * z * (1.0 - z);
            const double dr = dn * ghn[j] * r * (1.0 - r);
            dax[j] = dah[j] = dr;
            dax[m_ + j] = dah[m_ + j] = dz;
            dax[2 * m_ + j] = dn;
            dah[2 * m_ + j] = dn * r;
            dh_next[j] += dh[j] * z;
          }
          break;
        }
      }
      double* gwx = grad.data() + off.wx;
      double* gwh = grad.data() + off.wh;
      double* gb = grad.data() + off.b;
      for (std::size_t r = 0; r < g_; ++r) {
        gb[r] += dax[r];
        for (std::size_t j = 0; j < k; ++j) gwx[r * k + j] += dax[r] * x[j];
        for (std::size_t j = 0; j < m_; ++j) gwh[r * m_ + j] += dah[r] * hp[j];
        for (std::size_t j = 0; j < m_; ++j) dh_next[j] += wh[r * m_ + j] * dah[r];
        if (dx)
          for (std::size_t j = 0; j < k; ++j) (*dx)[t * k + j] += wx[r * k + j] * dax[r];
      }
      if (gru) {
        double* gbh = grad.data() + off.bh;
        for (std::size_t r = 0; r < g_; ++r) gbh[r] += dah[r];
      }
    }
  }

  const RecurrentModel& model_;
  Layout layout_;
  std::span<const double> values_;
  std::size_t m_, g_, n_;
  std::vector<LayerTrace> traces_;
};

void check_values(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("recurrent forward needs at least one value");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("recurrent input contains a non-finite value");
}

}  // namespace

std::size_t RecurrentArch::param_count() const { return Layout(*this).total; }

RecurrentModel init_recurrent(const RecurrentArch& arch, std::uint64_t seed, double bias) {
  RecurrentModel model;
  model.arch = arch;
  model.params.resize(Layout(arch).total);
  const double r = 1.0 / std::sqrt(static_cast<double>(arch.hidden));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-r, r);
  for (auto& w : model.params) w = u(rng);
  model.params.back() = bias;
  model.meta.seed = seed;
  return model;
}

RecurrentOutput recurrent_forward(const RecurrentModel& model, std::span<const double> values) {
  check_values(values);
  Unrolled net(model, values);
  auto h = net.last_hidden();
  return {net.prediction(), std::vector<double>(h.begin(), h.end())};
}

double recurrent_loss_grad(const RecurrentModel& model, std::span<const double> values,
                           const TargetInterval& target, const HingeConfig& cfg,
                           std::span<double> grad) {
  check_values(values);
  if (grad.size() != model.params.size()) throw std::invalid_argument("gradient buffer size mismatch");
  Unrolled net(model, values);
  const double pred = net.prediction();
  const double dpred = hinge_grad(pred, target, cfg);
  if (dpred != 0.0) net.backward(dpred, grad);
  return hinge_loss(pred, target, cfg);
}

std::vector<double> SequencePreprocessing::apply(std::span<const double> raw) const {
  auto pooled = pool(raw, pool_window, pool_stat);
  if (normalization) pooled = apply_normalization(pooled, *normalization);
  return pooled;
}

RecurrentModel fit_recurrent(const std::vector<std::vector<double>>& sequences,
                             std::span<const TargetInterval> targets, const RecurrentArch& arch,
                             const TrainConfig& cfg, SequencePreprocessing preprocessing) {
  if (sequences.empty()) throw std::invalid_argument("empty training set");
  if (sequences.size() != targets.size()) throw std::invalid_argument("sequence and target counts differ");
  cfg.loss.validate();
  for (const auto& s : sequences) check_values(s);
  const double bias = fit_constant(targets, cfg.loss).log_lambda;
  RecurrentModel model = init_recurrent(arch, cfg.seed, bias);
  model.preprocessing = std::move(preprocessing);

  detail::Objective obj;
  obj.loss_grad = [&](std::size_t i, std::span<double> grad) {
    return recurrent_loss_grad(model, sequences[i], targets[i], cfg.loss, grad);
  };
  obj.loss = [&](std::size_t i) {
    return hinge_loss(recurrent_forward(model, sequences[i]).log_lambda, targets[i], cfg.loss);
  };
  obj.points = [&](std::size_t i) { return sequences[i].size(); };
  model.meta = detail::adam_train(model.params, obj, sequences.size(), cfg);
  return model;
}

}  // namespace penlearn
