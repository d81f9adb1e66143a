#include <cmath>

#include "ewer/error.hpp"
#include "ewer/nn.hpp"

namespace ewer::nn {

LstmParams LstmParams::zeros(Eigen::Index input_dim, Eigen::Index hidden) {
  return {Eigen::MatrixXd::Zero(4 * hidden, input_dim), Eigen::MatrixXd::Zero(4 * hidden, hidden),
          Eigen::VectorXd::Zero(4 * hidden)};
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

void check_shapes(const LstmParams& p, const Eigen::MatrixXd& frames) {
  const auto h = p.hidden();
  if (p.W.rows() != 4 * h || p.U.rows() != 4 * h || p.b.size() != 4 * h)
    throw DataError("inconsistent LSTM parameter shapes");
  if (frames.rows() < 1) throw DataError("LSTM input has no frames");
  if (frames.cols() != p.input_dim())
    throw DataError("feature dim " + std::to_string(frames.cols()) + " does not match LSTM input dim " +
                    std::to_string(p.input_dim()));
}

}  // namespace

LstmTrace lstm_forward(const LstmParams& p, const Eigen::MatrixXd& frames, bool reverse) {
  check_shapes(p, frames);
  const Eigen::Index h = p.hidden();
  const Eigen::Index steps = frames.rows();

  // Input projections for every frame at once, in frame order.
  Eigen::MatrixXd proj = p.W * frames.transpose();
  proj.colwise() += p.b;

  LstmTrace tr;
  tr.reverse = reverse;
  tr.gates.resize(4 * h, steps);
  tr.cells.resize(h, steps);
  tr.tanh_c.resize(h, steps);
  tr.hidden.resize(h, steps + 1);
  tr.hidden.col(0).setZero();

  Eigen::VectorXd a(4 * h);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(h);
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Eigen::Index frame = reverse ? steps - 1 - s : s;
    a.noalias() = proj.col(frame);
    a.noalias() += p.U * tr.hidden.col(s);

    auto gate = tr.gates.col(s);
    gate.segment(0, 2 * h).array() = (1.0 + (-a.segment(0, 2 * h).array()).exp()).inverse();
    gate.segment(2 * h, h).array() = a.segment(2 * h, h).array().tanh();
    gate.segment(3 * h, h).array() = (1.0 + (-a.segment(3 * h, h).array()).exp()).inverse();

    const auto i = gate.segment(0, h).array();
    const auto f = gate.segment(h, h).array();
    const auto g = gate.segment(2 * h, h).array();
    const auto o = gate.segment(3 * h, h).array();
    c.array() = f * c.array() + i * g;
    tr.cells.col(s) = c;
    tr.tanh_c.col(s) = c.array().tanh();
    tr.hidden.col(s + 1) = o * tr.tanh_c.col(s).array();
  }
  return tr;
}

void lstm_backward(const LstmParams& p, const Eigen::MatrixXd& frames, const LstmTrace& tr,
                   const Eigen::VectorXd& d_last, LstmParams& grad) {
  const Eigen::Index h = p.hidden();
  const Eigen::Index steps = frames.rows();

  // d pre-activation for every step, columns in processing order.
  Eigen::MatrixXd d_pre(4 * h, steps);
  Eigen::VectorXd dh = d_last;
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(h);
  for (Eigen::Index s = steps - 1; s >= 0; --s) {
    const auto gate = tr.gates.col(s);
    const auto i = gate.segment(0, h).array();
    const auto f = gate.segment(h, h).array();
    const auto g = gate.segment(2 * h, h).array();
    const auto o = gate.segment(3 * h, h).array();
    const auto tc = tr.tanh_c.col(s).array();

    dc.array() += dh.array() * o * (1.0 - tc * tc);
    auto d = d_pre.col(s);
    d.segment(0, h).array() = dc.array() * g * i * (1.0 - i);
    if (s > 0) {
      d.segment(h, h).array() = dc.array() * tr.cells.col(s - 1).array() * f * (1.0 - f);
    } else {
      d.segment(h, h).setZero();
    }
    d.segment(2 * h, h).array() = dc.array() * i * (1.0 - g * g);
    d.segment(3 * h, h).array() = dh.array() * tc * o * (1.0 - o);

    dc.array() *= f;
    dh.noalias() = p.U.transpose() * d;
  }

  if (tr.reverse) {
    grad.W.noalias() += d_pre * frames.colwise().reverse();
  } else {
    grad.W.noalias() += d_pre * frames;
  }
  grad.U.noalias() += d_pre * tr.hidden.leftCols(steps).transpose();
  grad.b += d_pre.rowwise().sum();
}

BiLstmLast bilstm_last(const Eigen::MatrixXd& frames, const LstmParams& fwd, const LstmParams& bwd) {
  return {lstm_forward(fwd, frames, false).last(), lstm_forward(bwd, frames, true).last()};
}

}  // namespace ewer::nn
