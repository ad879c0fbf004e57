#include "idon/networks.hpp"

#include <cassert>
#include <cmath>

#include "idon/rng.hpp"

namespace idon::nets {

MlpSpec DeepONetSpec::subnet_spec() const {
  MlpSpec s;
  s.layer_widths.push_back(split());
  for (int l = 0; l < subnet_layers - 1; ++l) s.layer_widths.push_back(dim);
  s.layer_widths.push_back(dim - split());
  return s;
}

MlpSpec DeepONetSpec::trunk_spec() const {
  const int width = trunk_width > 0 ? trunk_width : dim;
  MlpSpec s;
  s.layer_widths.push_back(coord_dim);
  for (int l = 0; l < trunk_layers - 1; ++l) s.layer_widths.push_back(width);
  s.layer_widths.push_back(dim);
  return s;
}

namespace {

MlpParams init_mlp(const MlpSpec& spec, Rng& rng, bool zero_final_layer) {
  assert(spec.layer_widths.size() >= 2);
  MlpParams p;
  const int n_layers = static_cast<int>(spec.layer_widths.size()) - 1;
  for (int l = 0; l < n_layers; ++l) {
    const int in = spec.layer_widths[l];
    const int out = spec.layer_widths[l + 1];
    MlpLayer layer;
    layer.w = Mat(out, in);
    layer.b = Vec(out, 0.0);
    const bool zero = zero_final_layer && l == n_layers - 1;
    if (!zero) {
      const double lim = std::sqrt(6.0 / (in + out));
      for (double& v : layer.w.a) v = rng.uniform(-lim, lim);
    }
    p.layers.push_back(std::move(layer));
  }
  return p;
}

int coupling_split(const CouplingBlockParams& block) {
  return block.k_net.layers.front().w.cols;
}

double bounded_scale(double k) {
  // Multiply by the reciprocal (not divide) so this matches the tape's
  // affine(k, 1/bound, 0) bit for bit.
  return kLogScaleBound * std::tanh(k * (1.0 / kLogScaleBound));
}

}  // namespace

DeepONetParams init_params(const DeepONetSpec& spec, std::uint64_t seed) {
  assert(spec.dim >= 2 && spec.branch_blocks >= 2);
  Rng rng(seed);
  DeepONetParams p;
  p.trunk = init_mlp(spec.trunk_spec(), rng, false);
  const MlpSpec sub = spec.subnet_spec();
  for (int i = 0; i < spec.branch_blocks; ++i) {
    CouplingBlockParams block;
    block.k_net = init_mlp(sub, rng, /*zero_final_layer=*/true);
    block.r_net = init_mlp(sub, rng, false);
    p.branch.blocks.push_back(std::move(block));
  }
  return p;
}

std::size_t param_count(const DeepONetParams& p) {
  std::size_t n = 0;
  auto count_mlp = [&n](const MlpParams& m) {
    for (const auto& l : m.layers) n += l.w.size() + l.b.size();
  };
  count_mlp(p.trunk);
  for (const auto& b : p.branch.blocks) {
    count_mlp(b.k_net);
    count_mlp(b.r_net);
  }
  return n;
}

Vec flatten(const DeepONetParams& p) {
  Vec out;
  out.reserve(param_count(p));
  auto emit_mlp = [&out](const MlpParams& m) {
    for (const auto& l : m.layers) {
      out.insert(out.end(), l.w.a.begin(), l.w.a.end());
      out.insert(out.end(), l.b.begin(), l.b.end());
    }
  };
  emit_mlp(p.trunk);
  for (const auto& b : p.branch.blocks) {
    emit_mlp(b.k_net);
    emit_mlp(b.r_net);
  }
  return out;
}

void unflatten(const Vec& flat, DeepONetParams& p) {
  std::size_t pos = 0;
  auto take_mlp = [&](MlpParams& m) {
    for (auto& l : m.layers) {
      for (double& v : l.w.a) v = flat[pos++];
      for (double& v : l.b) v = flat[pos++];
    }
  };
  take_mlp(p.trunk);
  for (auto& b : p.branch.blocks) {
    take_mlp(b.k_net);
    take_mlp(b.r_net);
  }
  assert(pos == flat.size());
}

Vec mlp_eval(const MlpParams& mlp, const Vec& x) {
  Vec h = x;
  const int n_layers = static_cast<int>(mlp.layers.size());
  for (int l = 0; l < n_layers; ++l) {
    const MlpLayer& layer = mlp.layers[l];
    Vec z = linalg::matvec(layer.w, h);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] += layer.b[j];
    if (l + 1 < n_layers)
      for (double& v : z) v = std::tanh(v);
    h = std::move(z);
  }
  return h;
}

std::vector<ad::Jet2> mlp_eval(const MlpParams& mlp, const std::vector<ad::Jet2>& x) {
  std::vector<ad::Jet2> h = x;
  const int n_layers = static_cast<int>(mlp.layers.size());
  for (int l = 0; l < n_layers; ++l) {
    const MlpLayer& layer = mlp.layers[l];
    std::vector<ad::Jet2> z(layer.w.rows);
    for (int j = 0; j < layer.w.rows; ++j) {
      ad::Jet2 acc(layer.b[j]);
      const double* wj = layer.w.row(j);
      for (int k = 0; k < layer.w.cols; ++k) acc = acc + wj[k] * h[k];
      z[j] = (l + 1 < n_layers) ? ad::tanh(acc) : acc;
    }
    h = std::move(z);
  }
  return h;
}

CouplingResult coupling_forward(const CouplingBlockParams& block, const Vec& x) {
  const int split = coupling_split(block);
  const int dim = static_cast<int>(x.size());
  const Vec x1(x.begin(), x.begin() + split);
  Vec k = mlp_eval(block.k_net, x1);
  const Vec r = mlp_eval(block.r_net, x1);
  CouplingResult res;
  res.y = x;
  res.logdet = 0.0;
  for (int j = split; j < dim; ++j) {
    const double kc = bounded_scale(k[j - split]);
    res.y[j] = x[j] * std::exp(kc) + r[j - split];
    res.logdet += kc;
  }
  return res;
}

Vec coupling_inverse(const CouplingBlockParams& block, const Vec& y) {
  const int split = coupling_split(block);
  const int dim = static_cast<int>(y.size());
  const Vec y1(y.begin(), y.begin() + split);
  Vec k = mlp_eval(block.k_net, y1);
  const Vec r = mlp_eval(block.r_net, y1);
  Vec x = y;
  for (int j = split; j < dim; ++j) {
    const double kc = bounded_scale(k[j - split]);
    x[j] = (y[j] - r[j - split]) * std::exp(-kc);
  }
  return x;
}

namespace {
void reverse_inplace(Vec& v) {
  for (std::size_t i = 0, j = v.size() - 1; i < j; ++i, --j) std::swap(v[i], v[j]);
}
}  // namespace

BranchResult branch_forward(const BranchParams& branch, const Vec& u) {
  BranchResult res;
  res.b = u;
  res.logdet = 0.0;
  for (const auto& block : branch.blocks) {
    CouplingResult c = coupling_forward(block, res.b);
    res.logdet += c.logdet;
    res.b = std::move(c.y);
    reverse_inplace(res.b);
  }
  return res;
}

Vec branch_inverse(const BranchParams& branch, const Vec& b) {
  Vec x = b;
  for (auto it = branch.blocks.rbegin(); it != branch.blocks.rend(); ++it) {
    reverse_inplace(x);
    x = coupling_inverse(*it, x);
  }
  return x;
}

Vec trunk_eval(const MlpParams& trunk, const Vec& xi) { return mlp_eval(trunk, xi); }

std::vector<ad::Jet2> trunk_eval_jet2(const MlpParams& trunk, const Vec& xi, const Vec& dir) {
  return ad::directional_jet2([&trunk](const std::vector<ad::Jet2>& in) { return mlp_eval(trunk, in); },
                              xi, dir);
}

// ---- tape builders ----------------------------------------------------------

using Var = ad::Tape::Var;

TapeDeepONet register_params(ad::Tape& tape, const DeepONetParams& p) {
  TapeDeepONet vars;
  auto reg_mlp = [&tape](const MlpParams& m) {
    TapeMlp t;
    for (const auto& l : m.layers)
      t.layers.emplace_back(tape.input(l.w), tape.input(Mat::from_row(l.b)));
    return t;
  };
  vars.trunk = reg_mlp(p.trunk);
  for (const auto& b : p.branch.blocks)
    vars.blocks.emplace_back(reg_mlp(b.k_net), reg_mlp(b.r_net));
  return vars;
}

void read_grads(const ad::Tape& tape, const TapeDeepONet& vars, DeepONetParams& grads) {
  auto read_mlp = [&tape](const TapeMlp& t, MlpParams& m) {
    for (std::size_t l = 0; l < t.layers.size(); ++l) {
      const Mat& gw = tape.grad(t.layers[l].first);
      const Mat& gb = tape.grad(t.layers[l].second);
      if (gw.size() != 0)
        m.layers[l].w.a = gw.a;
      else
        std::fill(m.layers[l].w.a.begin(), m.layers[l].w.a.end(), 0.0);
      if (gb.size() != 0)
        m.layers[l].b = gb.a;
      else
        std::fill(m.layers[l].b.begin(), m.layers[l].b.end(), 0.0);
    }
  };
  read_mlp(vars.trunk, grads.trunk);
  for (std::size_t i = 0; i < vars.blocks.size(); ++i) {
    read_mlp(vars.blocks[i].first, grads.branch.blocks[i].k_net);
    read_mlp(vars.blocks[i].second, grads.branch.blocks[i].r_net);
  }
}

Var mlp_forward(ad::Tape& tape, const TapeMlp& mlp, Var x) {
  const int n_layers = static_cast<int>(mlp.layers.size());
  Var h = x;
  for (int l = 0; l < n_layers; ++l) {
    Var z = tape.add_rowvec(tape.matmul(h, mlp.layers[l].first, false, true),
                            mlp.layers[l].second);
    h = (l + 1 < n_layers) ? tape.tanh(z) : z;
  }
  return h;
}

namespace {

// s_max * tanh(k / s_max), built from tape primitives.
Var bounded_scale(ad::Tape& tape, Var k) {
  return tape.affine(tape.tanh(tape.affine(k, 1.0 / kLogScaleBound, 0.0)), kLogScaleBound, 0.0);
}

int tape_mlp_in(const ad::Tape& tape, const TapeMlp& m) {
  return tape.val(m.layers.front().first).cols;
}
int tape_mlp_out(const ad::Tape& tape, const TapeMlp& m) {
  return tape.val(m.layers.back().first).rows;
}

}  // namespace

Var branch_forward(ad::Tape& tape, const TapeDeepONet& net, Var u) {
  Var x = u;
  for (const auto& [k_net, r_net] : net.blocks) {
    const int split = tape_mlp_in(tape, k_net);
    const int dim = split + tape_mlp_out(tape, k_net);
    Var x1 = tape.slice_cols(x, 0, split);
    Var x2 = tape.slice_cols(x, split, dim);
    Var kc = bounded_scale(tape, mlp_forward(tape, k_net, x1));
    Var r = mlp_forward(tape, r_net, x1);
    Var y2 = tape.add(tape.mul(x2, tape.exp(kc)), r);
    x = tape.reverse_cols(tape.concat_cols(x1, y2));
  }
  return x;
}

Var branch_inverse(ad::Tape& tape, const TapeDeepONet& net, Var b) {
  Var x = b;
  for (auto it = net.blocks.rbegin(); it != net.blocks.rend(); ++it) {
    const auto& [k_net, r_net] = *it;
    const int split = tape_mlp_in(tape, k_net);
    const int dim = split + tape_mlp_out(tape, k_net);
    x = tape.reverse_cols(x);
    Var x1 = tape.slice_cols(x, 0, split);
    Var y2 = tape.slice_cols(x, split, dim);
    Var kc = bounded_scale(tape, mlp_forward(tape, k_net, x1));
    Var r = mlp_forward(tape, r_net, x1);
    Var x2 = tape.mul(tape.sub(y2, r), tape.exp(tape.affine(kc, -1.0, 0.0)));
    x = tape.concat_cols(x1, x2);
  }
  return x;
}

Var trunk_forward(ad::Tape& tape, const TapeMlp& trunk, const Mat& coords) {
  return mlp_forward(tape, trunk, tape.constant(coords));
}

TrunkJets trunk_forward_jets(ad::Tape& tape, const TapeMlp& trunk, const Mat& coords,
                             const std::vector<JetRequest>& requests) {
  const int n = coords.rows;
  const int cdim = coords.cols;

  struct Stream {
    Var d1;
    Var d2;
    bool second;
  };

  Var v = tape.constant(coords);
  std::vector<Stream> streams;
  for (const JetRequest& req : requests) {
    Mat seed(n, cdim);
    for (int i = 0; i < n; ++i) seed(i, req.axis) = 1.0;
    Stream s;
    s.d1 = tape.constant(seed);
    s.second = req.second;
    s.d2 = req.second ? tape.constant(Mat(n, cdim)) : -1;
    streams.push_back(s);
  }

  const int n_layers = static_cast<int>(trunk.layers.size());
  for (int l = 0; l < n_layers; ++l) {
    const auto& [w, bias] = trunk.layers[l];
    // Linear part: bias shifts values only; derivative streams are linear maps.
    v = tape.add_rowvec(tape.matmul(v, w, false, true), bias);
    for (Stream& s : streams) {
      s.d1 = tape.matmul(s.d1, w, false, true);
      if (s.second) s.d2 = tape.matmul(s.d2, w, false, true);
    }
    if (l + 1 < n_layers) {
      Var t = tape.tanh(v);
      // f' = 1 - t^2, f'' = -2 t (1 - t^2); jets follow
      //   d1' = f' d1,  d2' = f' d2 + f'' d1^2.
      Var fp = tape.affine(tape.mul(t, t), -1.0, 1.0);
      for (Stream& s : streams) {
        Var d1_old = s.d1;
        s.d1 = tape.mul(fp, d1_old);
        if (s.second) {
          Var fpp_d1sq =
              tape.affine(tape.mul(tape.mul(t, fp), tape.mul(d1_old, d1_old)), -2.0, 0.0);
          s.d2 = tape.add(tape.mul(fp, s.d2), fpp_d1sq);
        }
      }
      v = t;
    }
  }

  TrunkJets out;
  out.value = v;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    JetStreamVars jv;
    jv.axis = requests[i].axis;
    jv.d1 = streams[i].d1;
    jv.d2 = streams[i].second ? streams[i].d2 : -1;
    out.streams.push_back(jv);
  }
  return out;
}

}  // namespace idon::nets
