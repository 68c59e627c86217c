#pragma once

#include "hirevae/autodiff.hpp"
#include "hirevae/rng.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hirevae {

// Parameter values are kept exactly representable in float32 at all times
// (after init and after every optimizer step), so checkpoint blobs written as
// little-endian float32 round-trip bit-exactly. All arithmetic stays double.
inline double snap_f32(double x) { return static_cast<double>(static_cast<float>(x)); }
ad::Mat snap_f32(ad::Mat m);

enum class Init { Zero, Xavier, Constant };

struct Parameter {
  std::string path;  // unique, e.g. "feature.stock_gru.w_x"
  ad::Mat value;
  // Adam state; not part of checkpoints.
  ad::Mat adam_m, adam_v;
};

// Seeded from (model_seed, path) so initialization is independent of module
// construction order.
Parameter make_param(const std::string& path, int rows, int cols, Init init,
                     std::uint64_t model_seed, double const_val = 0.0);

class ParamRegistry {
 public:
  void add(Parameter* p);
  const std::vector<Parameter*>& all() const { return params_; }
  Parameter* find(const std::string& path) const;
  std::size_t scalar_count() const;

 private:
  std::vector<Parameter*> params_;
  std::unordered_map<std::string, Parameter*> by_path_;
};

// Mounts parameters into a graph, once each; remembers the bindings so the
// optimizer can read gradients back after backward().
class Binder {
 public:
  explicit Binder(ad::Graph& g) : g_(&g) {}

  ad::Var operator()(Parameter& p);

  const std::vector<std::pair<Parameter*, ad::Var>>& bound() const { return bound_; }

 private:
  ad::Graph* g_;
  std::vector<std::pair<Parameter*, ad::Var>> bound_;
  std::unordered_map<Parameter*, ad::Var> cache_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  // Applies one update to every bound parameter using gradients accumulated in
  // the graph, then snaps values back to float32 grid.
  void step(ad::Graph& g, const Binder& binder);

  int steps_taken() const { return t_; }

 private:
  AdamConfig cfg_;
  int t_ = 0;
};

}  // namespace hirevae
