#include "bidplan/grad/causal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bidplan {

const char* to_string(CausalKind kind) {
  return kind == CausalKind::window ? "window" : "attention";
}

CausalKind causal_kind_from_string(const std::string& name) {
  if (name == "window") return CausalKind::window;
  if (name == "attention") return CausalKind::attention;
  throw std::invalid_argument("unknown causal context kind: " + name);
}

void CausalNetConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("causal net: horizon must be >= 1");
  if (feature_dim < 0) throw std::invalid_argument("causal net: negative feature_dim");
  if (window < 0) throw std::invalid_argument("causal net: negative window");
  if (kind == CausalKind::attention && width < 1) {
    throw std::invalid_argument("causal net: attention width must be >= 1");
  }
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("causal net: hidden sizes must be positive");
  }
}

CausalMeanNet::CausalMeanNet(CausalNetConfig config) : config_(std::move(config)) {
  config_.validate();
}

void CausalMeanNet::check_call(int t, std::span<const double> prefix,
                               std::span<const double> feature) const {
  if (t < 1 || t > config_.horizon) throw std::domain_error("causal net: step out of range");
  if (prefix.size() < static_cast<std::size_t>(t - 1)) {
    throw std::domain_error("causal net: prefix shorter than t - 1");
  }
  if (static_cast<int>(feature.size()) != config_.feature_dim) {
    throw std::domain_error("causal net: feature has " + std::to_string(feature.size()) +
                            " entries, expected " + std::to_string(config_.feature_dim));
  }
}

namespace {

std::vector<int> head_sizes(int input, const std::vector<int>& hidden) {
  std::vector<int> sizes{input};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

int window_input_dim(const CausalNetConfig& c) {
  return c.window + (c.use_cumulative ? 1 : 0) + (c.use_time ? 1 : 0) + 1 + c.feature_dim;
}

double prefix_sum(std::span<const double> prefix, int t) {
  double s = 0.0;
  for (int j = 0; j < t - 1; ++j) s += prefix[static_cast<std::size_t>(j)];
  return s;
}

}  // namespace

WindowMeanNet::WindowMeanNet(CausalNetConfig config)
    : CausalMeanNet(std::move(config)),
      mlp_(head_sizes(window_input_dim(config_), config_.hidden), config_.activation, params_,
           "mean") {}

std::unique_ptr<CausalMeanNet> WindowMeanNet::clone() const {
  return std::make_unique<WindowMeanNet>(*this);
}

void WindowMeanNet::init(Rng& rng, double output_scale) {
  mlp_.init(params_.values, rng, output_scale);
}

void WindowMeanNet::encode(int t, std::span<const double> prefix, double condition,
                           std::span<const double> feature, std::vector<double>& out) const {
  const CausalNetConfig& c = config_;
  out.clear();
  for (int k = 0; k < c.window; ++k) {
    const int j = t - 2 - k;  // 0-based index of c_{t-1-k}
    out.push_back(j >= 0 ? prefix[static_cast<std::size_t>(j)] : 0.0);
  }
  if (c.use_cumulative) out.push_back(prefix_sum(prefix, t) / c.horizon);
  if (c.use_time) out.push_back(static_cast<double>(t - 1) / c.horizon);
  out.push_back(condition);
  out.insert(out.end(), feature.begin(), feature.end());
}

double WindowMeanNet::mean_at(int t, std::span<const double> prefix, double condition,
                              std::span<const double> feature) const {
  check_call(t, prefix, feature);
  thread_local std::vector<double> input;
  thread_local Mlp::Tape tape;
  encode(t, prefix, condition, feature, input);
  return mlp_.forward(params_.values, input, tape)[0];
}

void WindowMeanNet::backward_at(int t, std::span<const double> prefix, double condition,
                                std::span<const double> feature, double upstream,
                                std::span<double> param_grad,
                                std::span<double> prefix_grad) const {
  check_call(t, prefix, feature);
  if (param_grad.size() != params_.size()) {
    throw std::domain_error("causal net: parameter gradient buffer has wrong length");
  }
  thread_local std::vector<double> input;
  thread_local std::vector<double> input_grad;
  thread_local Mlp::Tape tape;
  encode(t, prefix, condition, feature, input);
  mlp_.forward(params_.values, input, tape);
  input_grad.assign(input.size(), 0.0);
  const double up[1] = {upstream};
  mlp_.backward(params_.values, tape, up, param_grad,
                prefix_grad.empty() ? std::span<double>() : std::span<double>(input_grad));
  if (prefix_grad.empty()) return;
  const CausalNetConfig& c = config_;
  for (int k = 0; k < c.window; ++k) {
    const int j = t - 2 - k;
    if (j >= 0) prefix_grad[static_cast<std::size_t>(j)] += input_grad[static_cast<std::size_t>(k)];
  }
  if (c.use_cumulative) {
    const double g = input_grad[static_cast<std::size_t>(c.window)] / c.horizon;
    for (int j = 0; j < t - 1; ++j) prefix_grad[static_cast<std::size_t>(j)] += g;
  }
}

// Attention layout: token z_j = [c_j, j / horizon] for j < t; context
// q_in = [cum?, time?, condition, feature..., c_{t-1}]; head input = [h, q_in].
struct AttentionMeanNet::Cache {
  std::vector<double> q_in;
  std::vector<double> q;
  std::vector<double> k;  // (t-1) x width
  std::vector<double> v;
  std::vector<double> p;
  std::vector<double> head_in;
  Mlp::Tape tape;
};

int AttentionMeanNet::context_dim() const {
  return (config_.use_cumulative ? 1 : 0) + (config_.use_time ? 1 : 0) + 1 +
         config_.feature_dim + 1;
}

AttentionMeanNet::AttentionMeanNet(CausalNetConfig config) : CausalMeanNet(std::move(config)) {
  const auto d = static_cast<std::size_t>(config_.width);
  const auto cd = static_cast<std::size_t>(context_dim());
  wq_ = params_.add("attn.wq", d * cd);
  bq_ = params_.add("attn.bq", d);
  wk_ = params_.add("attn.wk", d * 2);
  bk_ = params_.add("attn.bk", d);
  wv_ = params_.add("attn.wv", d * 2);
  bv_ = params_.add("attn.bv", d);
  head_ = Mlp(head_sizes(config_.width + context_dim(), config_.hidden), config_.activation,
              params_, "head");
}

std::unique_ptr<CausalMeanNet> AttentionMeanNet::clone() const {
  return std::make_unique<AttentionMeanNet>(*this);
}

void AttentionMeanNet::init(Rng& rng, double output_scale) {
  const int d = config_.width;
  auto fill = [&](std::size_t offset, int out, int in) {
    const double limit = std::sqrt(6.0 / (in + out));
    for (int i = 0; i < out * in; ++i) {
      params_.values[offset + static_cast<std::size_t>(i)] = uniform(rng, -limit, limit);
    }
  };
  fill(wq_, d, context_dim());
  fill(wk_, d, 2);
  fill(wv_, d, 2);
  for (std::size_t off : {bq_, bk_, bv_}) {
    std::fill_n(params_.values.begin() + static_cast<std::ptrdiff_t>(off), d, 0.0);
  }
  head_.init(params_.values, rng, output_scale);
}

void AttentionMeanNet::run(int t, std::span<const double> prefix, double condition,
                           std::span<const double> feature, Cache& cache) const {
  const CausalNetConfig& c = config_;
  const auto d = static_cast<std::size_t>(c.width);
  const auto cd = static_cast<std::size_t>(context_dim());
  const double* w = params_.values.data();
  const auto n = static_cast<std::size_t>(t - 1);

  cache.q_in.clear();
  if (c.use_cumulative) cache.q_in.push_back(prefix_sum(prefix, t) / c.horizon);
  if (c.use_time) cache.q_in.push_back(static_cast<double>(t - 1) / c.horizon);
  cache.q_in.push_back(condition);
  cache.q_in.insert(cache.q_in.end(), feature.begin(), feature.end());
  cache.q_in.push_back(n > 0 ? prefix[n - 1] : 0.0);

  cache.q.assign(d, 0.0);
  for (std::size_t a = 0; a < d; ++a) {
    double z = w[bq_ + a];
    for (std::size_t i = 0; i < cd; ++i) z += w[wq_ + a * cd + i] * cache.q_in[i];
    cache.q[a] = z;
  }
  cache.k.assign(n * d, 0.0);
  cache.v.assign(n * d, 0.0);
  cache.p.assign(n, 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  double max_score = -1e300;
  for (std::size_t j = 0; j < n; ++j) {
    const double z0 = prefix[j];
    const double z1 = static_cast<double>(j + 1) / c.horizon;
    double s = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      const double kv = w[bk_ + a] + w[wk_ + 2 * a] * z0 + w[wk_ + 2 * a + 1] * z1;
      cache.k[j * d + a] = kv;
      cache.v[j * d + a] = w[bv_ + a] + w[wv_ + 2 * a] * z0 + w[wv_ + 2 * a + 1] * z1;
      s += cache.q[a] * kv;
    }
    cache.p[j] = s * scale;
    max_score = std::max(max_score, cache.p[j]);
  }
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    cache.p[j] = std::exp(cache.p[j] - max_score);
    total += cache.p[j];
  }
  for (std::size_t j = 0; j < n; ++j) cache.p[j] /= total;

  cache.head_in.assign(d, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t a = 0; a < d; ++a) cache.head_in[a] += cache.p[j] * cache.v[j * d + a];
  }
  cache.head_in.insert(cache.head_in.end(), cache.q_in.begin(), cache.q_in.end());
  head_.forward(params_.values, cache.head_in, cache.tape);
}

double AttentionMeanNet::mean_at(int t, std::span<const double> prefix, double condition,
                                 std::span<const double> feature) const {
  check_call(t, prefix, feature);
  thread_local Cache cache;
  run(t, prefix, condition, feature, cache);
  return cache.tape.act.back()[0];
}

void AttentionMeanNet::backward_at(int t, std::span<const double> prefix, double condition,
                                   std::span<const double> feature, double upstream,
                                   std::span<double> param_grad,
                                   std::span<double> prefix_grad) const {
  check_call(t, prefix, feature);
  if (param_grad.size() != params_.size()) {
    throw std::domain_error("causal net: parameter gradient buffer has wrong length");
  }
  thread_local Cache cache;
  run(t, prefix, condition, feature, cache);
  const CausalNetConfig& c = config_;
  const auto d = static_cast<std::size_t>(c.width);
  const auto cd = static_cast<std::size_t>(context_dim());
  const auto n = static_cast<std::size_t>(t - 1);
  const double* w = params_.values.data();
  double* g = param_grad.data();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  std::vector<double> d_head(d + cd, 0.0);
  const double up[1] = {upstream};
  head_.backward(params_.values, cache.tape, up, param_grad, d_head);
  std::vector<double> dq_in(d_head.begin() + static_cast<std::ptrdiff_t>(d), d_head.end());

  // Softmax and value paths.
  std::vector<double> dscore(n, 0.0);
  double weighted = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double dp = 0.0;
    for (std::size_t a = 0; a < d; ++a) dp += d_head[a] * cache.v[j * d + a];
    dscore[j] = dp;
    weighted += cache.p[j] * dp;
  }
  std::vector<double> dq(d, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double ds = cache.p[j] * (dscore[j] - weighted) * scale;
    const double z0 = prefix[j];
    const double z1 = static_cast<double>(j + 1) / c.horizon;
    double dz0 = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      const double dk = ds * cache.q[a];
      const double dv = cache.p[j] * d_head[a];
      dq[a] += ds * cache.k[j * d + a];
      g[wk_ + 2 * a] += dk * z0;
      g[wk_ + 2 * a + 1] += dk * z1;
      g[bk_ + a] += dk;
      g[wv_ + 2 * a] += dv * z0;
      g[wv_ + 2 * a + 1] += dv * z1;
      g[bv_ + a] += dv;
      dz0 += dk * w[wk_ + 2 * a] + dv * w[wv_ + 2 * a];
    }
    if (!prefix_grad.empty()) prefix_grad[j] += dz0;
  }
  for (std::size_t a = 0; a < d; ++a) {
    g[bq_ + a] += dq[a];
    for (std::size_t i = 0; i < cd; ++i) {
      g[wq_ + a * cd + i] += dq[a] * cache.q_in[i];
      dq_in[i] += dq[a] * w[wq_ + a * cd + i];
    }
  }
  if (prefix_grad.empty()) return;
  if (c.use_cumulative) {
    const double gc = dq_in[0] / c.horizon;
    for (std::size_t j = 0; j < n; ++j) prefix_grad[j] += gc;
  }
  if (n > 0) prefix_grad[n - 1] += dq_in[cd - 1];
}

std::unique_ptr<CausalMeanNet> make_causal_net(const CausalNetConfig& config) {
  if (config.kind == CausalKind::attention) return std::make_unique<AttentionMeanNet>(config);
  return std::make_unique<WindowMeanNet>(config);
}

TeacherForcedFunction::TeacherForcedFunction(const CausalMeanNet& net) : net_(net.clone()) {
  params_ = net.params();
}

int TeacherForcedFunction::input_dim() const {
  return net_->config().horizon + 1 + net_->config().feature_dim;
}

std::unique_ptr<CausalMeanNet> TeacherForcedFunction::bound() const {
  std::unique_ptr<CausalMeanNet> copy = net_->clone();
  copy->params().values = params_.values;
  return copy;
}

std::vector<double> TeacherForcedFunction::forward(std::span<const double> input) const {
  check_input(input);
  const int horizon = net_->config().horizon;
  const auto costs = input.first(static_cast<std::size_t>(horizon));
  const double condition = input[static_cast<std::size_t>(horizon)];
  const auto feature = input.subspan(static_cast<std::size_t>(horizon) + 1);
  std::unique_ptr<CausalMeanNet> net = bound();
  std::vector<double> out(static_cast<std::size_t>(horizon));
  for (int t = 1; t <= horizon; ++t) {
    out[static_cast<std::size_t>(t - 1)] = net->mean_at(t, costs, condition, feature);
  }
  return out;
}

Gradients TeacherForcedFunction::backward(std::span<const double> input,
                                          std::span<const double> upstream) const {
  check_input(input);
  check_upstream(upstream);
  const int horizon = net_->config().horizon;
  const auto costs = input.first(static_cast<std::size_t>(horizon));
  const double condition = input[static_cast<std::size_t>(horizon)];
  const auto feature = input.subspan(static_cast<std::size_t>(horizon) + 1);
  std::unique_ptr<CausalMeanNet> net = bound();
  Gradients g{params_.zeros_like(), std::vector<double>(input.size(), 0.0)};
  std::span<double> cost_grad(g.input.data(), static_cast<std::size_t>(horizon));
  for (int t = 1; t <= horizon; ++t) {
    net->backward_at(t, costs, condition, feature, upstream[static_cast<std::size_t>(t - 1)],
                     g.params.values, cost_grad);
  }
  return g;
}

}  // namespace bidplan
