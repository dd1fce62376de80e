#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dstack/core/error.hpp"
#include "dstack/core/rng.hpp"
#include "dstack/lookahead/value_fn.hpp"

namespace dstack {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1>;

struct ModelArch {
  std::string game;
  int round = 0;
  int buckets = 1;  // K
  int layers = 3;   // hidden layers
  int width = 64;

  int inputs() const { return 2 * buckets + 1; }
  int outputs() const { return 2 * buckets; }
  friend bool operator==(const ModelArch&, const ModelArch&) = default;
};

// A training batch. Column j of `x` holds the bucketed ranges of both players
// followed by the pot feature. Targets are per hand, in pot fractions;
// `bucket(h, j)` is the bucket of hand h in sample j (-1 when blocked).
struct Batch {
  Mat x;
  Mat t1, t2;
  Eigen::MatrixXi bucket;
  int size() const { return static_cast<int>(x.cols()); }
};

// Huber loss with delta 1 and its derivative.
inline double huber(double e) {
  const double a = std::abs(e);
  return a <= 1 ? 0.5 * e * e : a - 0.5;
}
inline double huber_grad(double e) { return e > 1 ? 1 : (e < -1 ? -1 : e); }

// Feedforward counterfactual value approximator: parametric-rectifier hidden
// layers, linear bucket outputs and the zero-sum correction over bucket mass.
// All parameters live in one flat vector.
class CfvModel {
 public:
  CfvModel() = default;
  CfvModel(ModelArch arch, std::uint64_t seed) : arch_(std::move(arch)) {
    if (arch_.buckets < 1 || arch_.layers < 0 || arch_.width < 1) throw Error("bad model architecture");
    layout();
    Rng rng(seed);
    for (const Layer& l : layers_) {
      const double scale = std::sqrt(2.0 / l.in);  // He initialization
      for (int i = 0; i < l.in * l.out; ++i) params_[l.w + i] = standard_normal(rng) * scale;
      for (int i = 0; i < l.out; ++i) params_[l.b + i] = 0;
      if (l.alpha >= 0)
        for (int i = 0; i < l.out; ++i) params_[l.alpha + i] = 0.25;
    }
  }

  const ModelArch& arch() const { return arch_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Zero-sum outputs (2K x B) for inputs (2K+1 x B).
  Mat forward(const Mat& x) const {
    Cache c;
    return run(x, c);
  }

  // Mean per-hand Huber loss over the batch.
  double loss(const Batch& b) const {
    const Mat z = forward(b.x);
    return batch_loss(b, z, nullptr);
  }

  // Loss and its gradient with respect to every parameter.
  double loss_and_grad(const Batch& b, std::vector<double>& grad) const {
    Cache c;
    const Mat z = run(b.x, c);
    Mat dz;
    const double l = batch_loss(b, z, &dz);
    backward(b.x, c, dz, grad);
    return l;
  }

  std::string save_text() const {
    std::ostringstream os;
    os << "# dstack-cfvmodel v1\n";
    os << "game " << arch_.game << "\nround " << arch_.round << "\nbuckets " << arch_.buckets << "\nlayers "
       << arch_.layers << "\nwidth " << arch_.width << "\nparams " << params_.size() << '\n';
    char buf[64];
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto r = std::to_chars(buf, buf + sizeof buf, params_[i], std::chars_format::hex);
      os << std::string(buf, r.ptr) << (i % 8 == 7 || i + 1 == params_.size() ? '\n' : ' ');
    }
    return os.str();
  }

  static CfvModel parse_text(const std::string& text) {
    std::istringstream in(text);
    std::string line, key;
    std::getline(in, line);
    if (line != "# dstack-cfvmodel v1") throw Error("not a dstack model file");
    CfvModel m;
    std::size_t count = 0;
    auto expect = [&](const char* want) {
      in >> key;
      if (key != want) throw Error(std::string("model file: expected '") + want + "', got '" + key + "'");
    };
    expect("game");
    in >> m.arch_.game;
    expect("round");
    in >> m.arch_.round;
    expect("buckets");
    in >> m.arch_.buckets;
    expect("layers");
    in >> m.arch_.layers;
    expect("width");
    in >> m.arch_.width;
    expect("params");
    in >> count;
    if (!in) throw Error("model file: bad header");
    m.layout();
    if (count != m.params_.size()) throw Error("model file: parameter count does not match the architecture");
    std::string tok;
    for (std::size_t i = 0; i < count; ++i) {
      if (!(in >> tok)) throw Error("model file: truncated");
      // Hex floats without a 0x prefix, as written by to_chars.
      double v = 0;
      auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v, std::chars_format::hex);
      if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) throw Error("model file: bad number '" + tok + "'");
      m.params_[i] = v;
    }
    for (double x : m.params_)
      if (!std::isfinite(x)) throw Error("model file: non-finite weight");
    return m;
  }

  void save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw Error("cannot write model '" + path + "'");
    f << save_text();
  }
  static CfvModel load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open model '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_text(ss.str());
  }

 private:
  struct Layer {
    int in = 0, out = 0;
    int w = 0, b = 0, alpha = -1;  // offsets into params_; alpha < 0 for the output layer
  };
  struct Cache {
    std::vector<Mat> pre, act;  // per hidden layer
    Mat out;                    // raw network outputs
  };

  void layout() {
    layers_.clear();
    int off = 0, in = arch_.inputs();
    for (int l = 0; l <= arch_.layers; ++l) {
      Layer L;
      L.in = in;
      L.out = l == arch_.layers ? arch_.outputs() : arch_.width;
      L.w = off;
      off += L.in * L.out;
      L.b = off;
      off += L.out;
      if (l < arch_.layers) {
        L.alpha = off;
        off += L.out;
      }
      layers_.push_back(L);
      in = L.out;
    }
    params_.assign(static_cast<std::size_t>(off), 0.0);
  }

  Eigen::Map<const Mat> weights(const Layer& l) const { return {params_.data() + l.w, l.out, l.in}; }
  Eigen::Map<const Vec> bias(const Layer& l) const { return {params_.data() + l.b, l.out}; }

  Mat run(const Mat& x, Cache& c) const {
    if (x.rows() != arch_.inputs()) throw Error("model input has the wrong size");
    Mat a = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const Layer& l = layers_[i];
      Mat h = weights(l) * a;
      h.colwise() += bias(l);
      if (l.alpha < 0) {
        c.out = h;
        break;
      }
      Mat act = h;
      for (int r = 0; r < l.out; ++r) {
        const double al = params_[l.alpha + r];
        for (Eigen::Index j = 0; j < act.cols(); ++j)
          if (act(r, j) < 0) act(r, j) *= al;
      }
      c.pre.push_back(std::move(h));
      c.act.push_back(act);
      a = std::move(act);
    }
    const int k = arch_.buckets;
    Mat z = c.out;
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      double* col = z.data() + j * z.rows();
      const double* in = x.data() + j * x.rows();
      zero_sum_layer(std::span<double>(col, k), std::span<double>(col + k, k), std::span<const double>(in, k),
                     std::span<const double>(in + k, k));
    }
    return z;
  }

  // Mean Huber loss over allowed hands of both players; fills dL/dz.
  double batch_loss(const Batch& b, const Mat& z, Mat* dz) const {
    const int k = arch_.buckets;
    const Eigen::Index n = b.t1.rows();
    if (dz) dz->setZero(z.rows(), z.cols());
    double total = 0;
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      int allowed = 0;
      for (Eigen::Index h = 0; h < n; ++h) allowed += b.bucket(h, j) >= 0;
      if (allowed == 0) continue;
      const double w = 1.0 / (2.0 * allowed * static_cast<double>(z.cols()));
      for (Eigen::Index h = 0; h < n; ++h) {
        const int bk = b.bucket(h, j);
        if (bk < 0) continue;
        const double e1 = z(bk, j) - b.t1(h, j), e2 = z(k + bk, j) - b.t2(h, j);
        total += w * (huber(e1) + huber(e2));
        if (dz) {
          (*dz)(bk, j) += w * huber_grad(e1);
          (*dz)(k + bk, j) += w * huber_grad(e2);
        }
      }
    }
    return total;
  }

  void backward(const Mat& x, const Cache& c, const Mat& dz, std::vector<double>& grad) const {
    grad.assign(params_.size(), 0.0);
    const int k = arch_.buckets;
    // Through the zero-sum correction: z_p = o_p - a_p * s with s = b1.o1 + b2.o2.
    Mat d = dz;
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      double m1 = 0, m2 = 0, g1 = 0, g2 = 0;
      for (int i = 0; i < k; ++i) {
        m1 += x(i, j);
        m2 += x(k + i, j);
        g1 += dz(i, j);
        g2 += dz(k + i, j);
      }
      double a1 = 0, a2 = 0;
      if (m1 > 0 && m2 > 0) {
        a1 = 1 / (2 * m1);
        a2 = 1 / (2 * m2);
      } else if (m1 > 0) {
        a1 = 1 / m1;
      } else if (m2 > 0) {
        a2 = 1 / m2;
      }
      const double cs = g1 * a1 + g2 * a2;
      for (int i = 0; i < 2 * k; ++i) d(i, j) -= x(i, j) * cs;
    }
    for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
      const Layer& l = layers_[static_cast<std::size_t>(i)];
      if (l.alpha >= 0) {
        // d holds dL/d(activation); move to pre-activation and alpha.
        const Mat& h = c.pre[static_cast<std::size_t>(i)];
        for (int r = 0; r < l.out; ++r) {
          const double al = params_[l.alpha + r];
          double ga = 0;
          for (Eigen::Index j = 0; j < d.cols(); ++j)
            if (h(r, j) < 0) {
              ga += d(r, j) * h(r, j);
              d(r, j) *= al;
            }
          grad[l.alpha + r] = ga;
        }
      }
      const Mat& in = i == 0 ? x : c.act[static_cast<std::size_t>(i) - 1];
      Eigen::Map<Mat>(grad.data() + l.w, l.out, l.in) = d * in.transpose();
      Eigen::Map<Vec>(grad.data() + l.b, l.out) = d.rowwise().sum();
      if (i > 0) d = weights(l).transpose() * d;
    }
  }

  ModelArch arch_;
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

// Adam over a flat parameter vector.
class Adam {
 public:
  explicit Adam(std::size_t n, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8)
      : m_(n, 0.0), v_(n, 0.0), b1_(b1), b2_(b2), eps_(eps) {}
  void step(std::vector<double>& p, const std::vector<double>& g, double lr) {
    ++t_;
    const double c1 = 1 - std::pow(b1_, t_), c2 = 1 - std::pow(b2_, t_);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m_[i] = b1_ * m_[i] + (1 - b1_) * g[i];
      v_[i] = b2_ * v_[i] + (1 - b2_) * g[i] * g[i];
      p[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

 private:
  std::vector<double> m_, v_;
  double b1_, b2_, eps_;
  long long t_ = 0;
};

}  // namespace dstack
