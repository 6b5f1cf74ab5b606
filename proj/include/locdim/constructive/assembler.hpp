#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "../activation.hpp"
#include "../network.hpp"

namespace locdim::constructive {

// Affine form over the units of one layer. Layer 0 units are the network inputs,
// layer l >= 1 units are the hidden neurons of layer l (by slot).
struct Signal {
  int layer = 0;
  std::map<int, double> terms;
  double constant = 0;

  static Signal input(int i) {
    Signal s;
    s.terms[i] = 1.0;
    return s;
  }
  static Signal constant_at(int layer, double c) {
    Signal s;
    s.layer = layer;
    s.constant = c;
    return s;
  }

  Signal scaled(double c) const {
    Signal s = *this;
    for (auto& [k, v] : s.terms) v *= c;
    s.constant *= c;
    return s;
  }
  Signal shifted(double c) const {
    Signal s = *this;
    s.constant += c;
    return s;
  }
  Signal operator+(const Signal& o) const {
    if (o.layer != layer) throw std::logic_error("adding signals from different layers");
    Signal s = *this;
    for (const auto& [k, v] : o.terms) s.terms[k] += v;
    s.constant += o.constant;
    return s;
  }
  Signal operator-(const Signal& o) const { return *this + o.scaled(-1.0); }
};

// Collects neurons layer by layer and emits a DenseNetwork of uniform width.
class NetAssembler {
 public:
  explicit NetAssembler(int input_dim) : d_(input_dim) {
    if (input_dim < 1) throw std::invalid_argument("assembler needs at least one input");
  }

  int input_dim() const { return d_; }
  int depth() const { return static_cast<int>(layers_.size()); }

  // Adds the neuron sigma(scale * pre + shift) in layer pre.layer + 1 and returns
  // its output as a signal. slot < 0 appends after the highest used slot.
  Signal neuron(const Signal& pre, double scale, double shift, int slot = -1) {
    int l = pre.layer + 1;
    while (depth() < l) layers_.emplace_back();
    auto& units = layers_[l - 1];
    if (slot < 0) slot = units.empty() ? 0 : units.rbegin()->first + 1;
    if (units.count(slot)) throw std::logic_error("slot " + std::to_string(slot) + " already used in layer " + std::to_string(l));
    Unit u;
    for (const auto& [k, v] : pre.terms) {
      if (pre.layer == 0 && (k < 0 || k >= d_)) throw std::logic_error("input index out of range");
      if (v != 0.0) u.w[k] = scale * v;
    }
    u.b = scale * pre.constant + shift;
    units[slot] = u;
    Signal out;
    out.layer = l;
    out.terms[slot] = 1.0;
    return out;
  }

  int used_width() const {
    int w = 0;
    for (const auto& units : layers_)
      if (!units.empty()) w = std::max(w, units.rbegin()->first + 1);
    return w;
  }

  // Emits the network whose affine output is `out`; hidden layers beyond
  // out.layer are not allowed. Width is padded with zero neurons to `width`.
  DenseNetwork build(const Signal& out, int width = 0) const {
    const int L = out.layer;
    if (L < 1) throw std::logic_error("output must read a hidden layer");
    if (L != depth()) throw std::logic_error("output does not read the last hidden layer");
    int r = std::max(width, used_width());
    std::vector<Layer> layers;
    for (int l = 1; l <= L; ++l) {
      int cols = l == 1 ? d_ : r;
      Layer ly{Eigen::MatrixXd::Zero(r, cols), Eigen::VectorXd::Zero(r)};
      for (const auto& [slot, u] : layers_[l - 1]) {
        for (const auto& [k, v] : u.w) ly.W(slot, k) = v;
        ly.b(slot) = u.b;
      }
      layers.push_back(std::move(ly));
    }
    Layer outl{Eigen::MatrixXd::Zero(1, r), Eigen::VectorXd::Constant(1, out.constant)};
    for (const auto& [k, v] : out.terms) outl.W(0, k) = v;
    layers.push_back(std::move(outl));
    double m = 0;
    for (const auto& ly : layers) {
      m = std::max(m, ly.W.cwiseAbs().maxCoeff());
      m = std::max(m, ly.b.cwiseAbs().maxCoeff());
    }
    return DenseNetwork(std::move(layers), std::max(m, 1.0));
  }

 private:
  struct Unit {
    std::map<int, double> w;
    double b = 0;
  };
  int d_;
  std::vector<std::map<int, Unit>> layers_;
};

// Building blocks. Each returns the decoded output as a signal one or two layers
// after its input. R is the scale that trades accuracy against weight size.

// (R / s'(t)) (s(v/R + t) - s(t))
inline Signal id_step(NetAssembler& as, const Signal& v, double R, const Activation& act, int slot = -1) {
  double t = act.t_id;
  double c = R / Activation::d1(t);
  Signal n = as.neuron(v, 1.0 / R, t, slot);
  return n.scaled(c).shifted(-c * Activation::value(t));
}

inline Signal id_chain(NetAssembler& as, Signal v, int steps, double R, const Activation& act, int slot = -1) {
  for (int i = 0; i < steps; ++i) v = id_step(as, v, R, act, slot);
  return v;
}

// R^2 / s''(t) (s(2v/R + t) - 2 s(v/R + t) + s(t))
inline Signal square(NetAssembler& as, const Signal& v, double R, const Activation& act) {
  double t = act.t_sq;
  double c = R * R / Activation::d2(t);
  Signal n1 = as.neuron(v, 2.0 / R, t);
  Signal n2 = as.neuron(v, 1.0 / R, t);
  return (n1 - n2.scaled(2.0)).scaled(c).shifted(c * Activation::value(t));
}

// R^2 / (4 s''(t)) (s(2(u+v)/R + t) - 2 s((u+v)/R + t) - s(2(u-v)/R + t) + 2 s((u-v)/R + t))
inline Signal multiply(NetAssembler& as, const Signal& u, const Signal& v, double R, const Activation& act,
                       int first_slot = -1) {
  if (u.layer != v.layer) throw std::logic_error("multiply needs both factors in the same layer");
  double t = act.t_sigma;
  double c = R * R / (4.0 * Activation::d2(t));
  Signal p = u + v, m = u - v;
  auto slot = [&](int k) { return first_slot < 0 ? -1 : first_slot + k; };
  Signal n1 = as.neuron(p, 2.0 / R, t, slot(0));
  Signal n2 = as.neuron(p, 1.0 / R, t, slot(1));
  Signal n3 = as.neuron(m, 2.0 / R, t, slot(2));
  Signal n4 = as.neuron(m, 1.0 / R, t, slot(3));
  return (n1 - n2.scaled(2.0) - n3 + n4.scaled(2.0)).scaled(c);
}

// multiply(id(v), s(R v)): two layers
inline Signal relu(NetAssembler& as, const Signal& v, double R, const Activation& act) {
  Signal x = id_step(as, v, R, act);
  Signal gate = as.neuron(v, R, 0.0);
  return multiply(as, x, gate, R, act);
}

// Copies a dense network into the assembler. `inputs` are signals in a common
// layer, one per input of `net`; its neurons go to slots slot_offset + i.
inline Signal embed(NetAssembler& as, const DenseNetwork& net, const std::vector<Signal>& inputs, int slot_offset) {
  if (static_cast<int>(inputs.size()) != net.input_dim()) throw std::logic_error("embed: wrong number of inputs");
  const auto& layers = net.layers();
  std::vector<Signal> prev = inputs;
  for (int l = 0; l < net.hidden_layers(); ++l) {
    std::vector<Signal> cur;
    for (long i = 0; i < layers[l].W.rows(); ++i) {
      Signal pre = Signal::constant_at(prev[0].layer, layers[l].b(i));
      for (long j = 0; j < layers[l].W.cols(); ++j)
        if (layers[l].W(i, j) != 0.0) pre = pre + prev[j].scaled(layers[l].W(i, j));
      cur.push_back(as.neuron(pre, 1.0, 0.0, slot_offset + static_cast<int>(i)));
    }
    prev = std::move(cur);
  }
  const auto& out = layers.back();
  Signal res = Signal::constant_at(prev[0].layer, out.b(0));
  for (long j = 0; j < out.W.cols(); ++j)
    if (out.W(0, j) != 0.0) res = res + prev[j].scaled(out.W(0, j));
  return res;
}

}  // namespace locdim::constructive
