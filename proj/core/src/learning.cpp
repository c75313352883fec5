// Copyright 2026 The feelsim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "feelsim/learning.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

namespace feelsim {

void Dataset::push_back(std::span<const double> x, std::size_t label) {
  if (x.size() != feature_dim) throw std::invalid_argument("Dataset::push_back: feature width mismatch");
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(label);
}

Dataset Dataset::select(std::span<const std::size_t> indices) const {
  Dataset out{feature_dim, num_classes, {}, {}};
  out.features.reserve(indices.size() * feature_dim);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(row(i), labels[i]);
  return out;
}

void Dataset::validate() const {
  if (features.size() != labels.size() * feature_dim) {
    throw std::invalid_argument("Dataset: features and labels disagree in length");
  }
  for (std::size_t y : labels) {
    if (y >= num_classes) throw std::invalid_argument("Dataset: label out of range");
  }
}

std::size_t ModelSpec::param_count() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    total += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return total;
}

void ModelSpec::validate() const {
  if (layer_sizes.size() < 2) throw std::invalid_argument("model: need at least input and output layers");
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw std::invalid_argument("model: layer sizes must be positive");
  }
  if (num_classes() < 2) throw std::invalid_argument("model: need at least two classes");
}

ParamVector init_params(const ModelSpec& model, RngStream& rng) {
  model.validate();
  ParamVector w(model.param_count());
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
    const std::size_t in = model.layer_sizes[l];
    const std::size_t out = model.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t i = 0; i < in * out; ++i) w[offset + i] = limit * (2.0 * rng.uniform() - 1.0);
    offset += in * out + out;  // biases stay zero
  }
  return w;
}

namespace {

struct Activations {
  // layer[0] is the input, layer.back() the logits; hidden layers hold the
  // post-rectifier values.
  std::vector<std::vector<double>> layer;
};

void run_forward(const ModelSpec& model, const ParamVector& w, std::span<const double> x,
                 Activations& act) {
  const std::size_t layers = model.layer_sizes.size();
  act.layer.resize(layers);
  act.layer[0].assign(x.begin(), x.end());
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    const std::size_t in = model.layer_sizes[l];
    const std::size_t out = model.layer_sizes[l + 1];
    const double* weights = w.values().data() + offset;
    const double* bias = weights + in * out;
    auto& next = act.layer[l + 1];
    next.assign(out, 0.0);
    const auto& prev = act.layer[l];
    for (std::size_t o = 0; o < out; ++o) {
      double z = bias[o];
      const double* row = weights + o * in;
      for (std::size_t i = 0; i < in; ++i) z += row[i] * prev[i];
      next[o] = (l + 2 < layers) ? std::max(z, 0.0) : z;
    }
    offset += in * out + out;
  }
}

double cross_entropy(std::span<const double> logits, std::size_t label, std::vector<double>* probs) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - peak);
  const double lse = peak + std::log(sum);
  if (probs) {
    probs->resize(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) (*probs)[k] = std::exp(logits[k] - lse);
  }
  return lse - logits[label];
}

// Adds d(loss)/d(params) of one sample into grad.
void run_backward(const ModelSpec& model, const ParamVector& w, const Activations& act,
                  std::vector<double> delta, ParamVector& grad) {
  const std::size_t layers = model.layer_sizes.size();
  std::vector<std::size_t> offsets(layers - 1);
  for (std::size_t l = 0, off = 0; l + 1 < layers; ++l) {
    offsets[l] = off;
    off += model.layer_sizes[l] * model.layer_sizes[l + 1] + model.layer_sizes[l + 1];
  }
  for (std::size_t l = layers - 1; l-- > 0;) {
    const std::size_t in = model.layer_sizes[l];
    const std::size_t out = model.layer_sizes[l + 1];
    const double* weights = w.values().data() + offsets[l];
    double* gw = grad.view().data() + offsets[l];
    double* gb = gw + in * out;
    const auto& prev = act.layer[l];
    for (std::size_t o = 0; o < out; ++o) {
      const double dz = delta[o];
      if (dz == 0.0) continue;
      double* row = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) row[i] += dz * prev[i];
      gb[o] += dz;
    }
    if (l == 0) break;
    std::vector<double> below(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double dz = delta[o];
      if (dz == 0.0) continue;
      const double* row = weights + o * in;
      for (std::size_t i = 0; i < in; ++i) below[i] += row[i] * dz;
    }
    for (std::size_t i = 0; i < in; ++i) {
      if (prev[i] <= 0.0) below[i] = 0.0;  // rectifier derivative
    }
    delta = std::move(below);
  }
}

}  // namespace

std::vector<double> forward(const ModelSpec& model, const ParamVector& w, std::span<const double> x) {
  Activations act;
  run_forward(model, w, x, act);
  return act.layer.back();
}

double loss_and_gradient(const ModelSpec& model, const ParamVector& w, const Dataset& data,
                         std::span<const std::size_t> indices, ParamVector* grad) {
  if (w.size() != model.param_count()) {
    throw std::invalid_argument("loss_and_gradient: parameter count does not match model");
  }
  if (data.feature_dim != model.input_dim()) {
    throw std::invalid_argument("loss_and_gradient: feature width does not match model input");
  }
  if (indices.empty()) throw std::invalid_argument("loss_and_gradient: empty batch");
  if (grad) *grad = ParamVector(w.size());

  Activations act;
  std::vector<double> probs;
  double total = 0.0;
  for (std::size_t idx : indices) {
    run_forward(model, w, data.row(idx), act);
    const std::size_t y = data.labels[idx];
    total += cross_entropy(act.layer.back(), y, grad ? &probs : nullptr);
    if (grad) {
      probs[y] -= 1.0;
      run_backward(model, w, act, probs, *grad);
    }
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  if (grad) *grad *= inv;
  return total * inv;
}

ParamVector full_batch_gradient(const ModelSpec& model, const ParamVector& w, const Dataset& data) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  ParamVector grad;
  loss_and_gradient(model, w, data, all, &grad);
  return grad;
}

EvalResult evaluate(const ModelSpec& model, const ParamVector& w, const Dataset& data) {
  if (data.size() == 0) return {};
  Activations act;
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    run_forward(model, w, data.row(i), act);
    const auto& logits = act.layer.back();
    loss += cross_entropy(logits, data.labels[i], nullptr);
    const auto best = static_cast<std::size_t>(
        std::distance(logits.begin(), std::max_element(logits.begin(), logits.end())));
    if (best == data.labels[i]) ++correct;
  }
  const auto n = static_cast<double>(data.size());
  return {loss / n, static_cast<double>(correct) / n};
}

ParamVector local_sgd(const ModelSpec& model, const ParamVector& w_start, const Dataset& shard,
                      std::size_t steps, std::size_t batch, double lr, RngStream& rng) {
  if (shard.size() == 0) throw std::invalid_argument("local_sgd: empty shard");
  if (steps == 0) throw std::invalid_argument("local_sgd: need at least one step");
  if (batch == 0 || batch > shard.size()) {
    throw std::invalid_argument("local_sgd: batch size must lie in [1, shard size]");
  }
  if (lr < 0.0) throw std::invalid_argument("local_sgd: negative learning rate");

  ParamVector w = w_start;
  ParamVector grad;
  for (std::size_t step = 0; step < steps; ++step) {
    auto picked = rng.sample_without_replacement(shard.size(), batch);
    // Fixed summation order: a full batch reproduces the full-batch gradient bit for bit.
    std::sort(picked.begin(), picked.end());
    loss_and_gradient(model, w, shard, picked, &grad);
    w.axpy(-lr, grad);
  }
  return w - w_start;
}

ClusterModel make_clusters(std::size_t num_classes, std::size_t feature_dim, double separation,
                           RngStream& rng) {
  if (num_classes == 0 || feature_dim == 0) {
    throw std::invalid_argument("make_clusters: classes and feature width must be positive");
  }
  ClusterModel c{num_classes, feature_dim, {}};
  c.means.resize(num_classes);
  for (auto& mean : c.means) {
    mean.resize(feature_dim);
    double sq = 0.0;
    for (auto& v : mean) {
      v = rng.normal();
      sq += v * v;
    }
    const double scale = separation / std::sqrt(sq);
    for (auto& v : mean) v *= scale;
  }
  return c;
}

Dataset sample_clusters(const ClusterModel& clusters, std::size_t samples, RngStream& rng) {
  Dataset data{clusters.feature_dim, clusters.num_classes, {}, {}};
  data.features.reserve(samples * clusters.feature_dim);
  data.labels.reserve(samples);
  std::vector<double> x(clusters.feature_dim);
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t y = i % clusters.num_classes;
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = clusters.means[y][j] + rng.normal();
    data.push_back(x, y);
  }
  return data;
}

Dataset synthesize_dataset(std::size_t num_classes, std::size_t samples, std::size_t feature_dim,
                           double separation, RngStream& rng) {
  if (samples < num_classes) throw std::invalid_argument("synthesize_dataset: fewer samples than classes");
  const ClusterModel clusters = make_clusters(num_classes, feature_dim, separation, rng);
  return sample_clusters(clusters, samples, rng);
}

std::vector<Dataset> partition(const Dataset& data, std::size_t n_devices, PartitionMode mode,
                               RngStream& rng) {
  if (n_devices == 0) throw std::invalid_argument("partition: need at least one device");
  std::vector<std::vector<std::size_t>> members(n_devices);

  if (mode.kind == PartitionMode::Kind::kIid) {
    if (data.size() < n_devices) throw std::invalid_argument("partition: fewer samples than devices");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    const std::size_t base = order.size() / n_devices;
    const std::size_t extra = order.size() % n_devices;
    std::size_t cursor = 0;
    for (std::size_t n = 0; n < n_devices; ++n) {
      const std::size_t take = base + (n < extra ? 1 : 0);
      members[n].assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                        order.begin() + static_cast<std::ptrdiff_t>(cursor + take));
      cursor += take;
    }
  } else {
    const std::size_t classes = data.num_classes;
    const std::size_t per_device = mode.classes_per_device;
    if (per_device == 0 || per_device > classes) {
      throw std::invalid_argument("partition: classes_per_device must lie in [1, num_classes]");
    }
    if (per_device * n_devices < classes) {
      throw std::invalid_argument("partition: classes_per_device * devices must cover every class");
    }
    std::vector<std::size_t> class_perm(classes);
    std::iota(class_perm.begin(), class_perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(class_perm));

    std::vector<std::vector<std::size_t>> holders(classes);
    for (std::size_t n = 0; n < n_devices; ++n) {
      for (std::size_t j = 0; j < per_device; ++j) {
        holders[class_perm[(n * per_device + j) % classes]].push_back(n);
      }
    }
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);

    for (std::size_t c = 0; c < classes; ++c) {
      auto& pool = by_class[c];
      const auto& owners = holders[c];
      if (pool.size() < owners.size()) {
        throw std::invalid_argument("partition: class " + std::to_string(c) + " has " +
                                    std::to_string(pool.size()) + " samples for " +
                                    std::to_string(owners.size()) + " devices");
      }
      rng.shuffle(std::span<std::size_t>(pool));
      const std::size_t base = pool.size() / owners.size();
      const std::size_t extra = pool.size() % owners.size();
      std::size_t cursor = 0;
      for (std::size_t k = 0; k < owners.size(); ++k) {
        const std::size_t take = base + (k < extra ? 1 : 0);
        auto& dst = members[owners[k]];
        dst.insert(dst.end(), pool.begin() + static_cast<std::ptrdiff_t>(cursor),
                   pool.begin() + static_cast<std::ptrdiff_t>(cursor + take));
        cursor += take;
      }
    }
  }

  std::vector<Dataset> shards;
  shards.reserve(n_devices);
  for (auto& m : members) {
    std::sort(m.begin(), m.end());
    shards.push_back(data.select(m));
  }
  return shards;
}

namespace {

double parse_double(std::string_view field, std::size_t line_no) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw std::invalid_argument("csv line " + std::to_string(line_no) + ": bad number '" +
                                std::string(field) + "'");
  }
  return v;
}

}  // namespace

Dataset load_csv_dataset(const std::filesystem::path& path, std::size_t num_classes) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open dataset " + path.string());
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_label = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    row.clear();
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      row.push_back(parse_double(rest.substr(0, comma), line_no));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (row.size() < 2) throw std::invalid_argument("csv line " + std::to_string(line_no) + ": no features");
    const double label = row.front();
    if (label < 0.0 || label != std::floor(label)) {
      throw std::invalid_argument("csv line " + std::to_string(line_no) + ": label must be a non-negative integer");
    }
    if (data.labels.empty()) {
      data.feature_dim = row.size() - 1;
    } else if (row.size() - 1 != data.feature_dim) {
      throw std::invalid_argument("csv line " + std::to_string(line_no) + ": ragged row (" +
                                  std::to_string(row.size() - 1) + " features, expected " +
                                  std::to_string(data.feature_dim) + ")");
    }
    const auto y = static_cast<std::size_t>(label);
    max_label = std::max(max_label, y);
    data.push_back(std::span<const double>(row).subspan(1), y);
  }
  if (data.labels.empty()) throw std::invalid_argument("dataset " + path.string() + " is empty");
  data.num_classes = num_classes == 0 ? max_label + 1 : num_classes;
  data.validate();
  return data;
}

}  // namespace feelsim
