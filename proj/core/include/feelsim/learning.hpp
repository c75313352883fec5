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

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "feelsim/param_vector.hpp"
#include "feelsim/rng.hpp"

namespace feelsim {

/// Labelled samples with features stored row-major.
struct Dataset {
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;
  std::vector<std::size_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const noexcept {
    return {features.data() + i * feature_dim, feature_dim};
  }
  void push_back(std::span<const double> x, std::size_t label);

  // Subset in the given index order.
  Dataset select(std::span<const std::size_t> indices) const;

  // Throws std::invalid_argument on ragged storage or out-of-range labels.
  void validate() const;
};

/// Fully connected network: rectifier hidden layers, softmax cross-entropy
/// head. Parameters are laid out layer by layer as W (out x in, row-major)
/// followed by b (out).
struct ModelSpec {
  std::vector<std::size_t> layer_sizes{20, 32, 10};

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t num_classes() const { return layer_sizes.back(); }
  std::size_t param_count() const;
  void validate() const;
};

/// Uniform Glorot initialization, zero biases.
ParamVector init_params(const ModelSpec& model, RngStream& rng);

/// Mean cross-entropy over the listed samples; accumulates the mean gradient
/// into *grad when non-null. Samples are visited in the order given.
double loss_and_gradient(const ModelSpec& model, const ParamVector& w, const Dataset& data,
                         std::span<const std::size_t> indices, ParamVector* grad);

ParamVector full_batch_gradient(const ModelSpec& model, const ParamVector& w, const Dataset& data);

/// Logits of a single sample.
std::vector<double> forward(const ModelSpec& model, const ParamVector& w, std::span<const double> x);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean cross-entropy and top-1 accuracy (argmax ties go to the lower class).
EvalResult evaluate(const ModelSpec& model, const ParamVector& w, const Dataset& data);

/// H steps of mini-batch SGD from w_start; each step draws `batch` distinct
/// samples uniformly. Returns w_H - w_start.
ParamVector local_sgd(const ModelSpec& model, const ParamVector& w_start, const Dataset& shard,
                      std::size_t steps, std::size_t batch, double lr, RngStream& rng);

struct ClusterModel {
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;
  std::vector<std::vector<double>> means;
};

/// Class means: random directions on the unit sphere scaled by `separation`.
ClusterModel make_clusters(std::size_t num_classes, std::size_t feature_dim, double separation,
                           RngStream& rng);

/// Balanced draw (sample i has class i mod C) with unit isotropic noise.
Dataset sample_clusters(const ClusterModel& clusters, std::size_t samples, RngStream& rng);

Dataset synthesize_dataset(std::size_t num_classes, std::size_t samples, std::size_t feature_dim,
                           double separation, RngStream& rng);

struct PartitionMode {
  enum class Kind { kIid, kLabelSkew };
  Kind kind = Kind::kIid;
  std::size_t classes_per_device = 2;

  static PartitionMode iid() { return {Kind::kIid, 0}; }
  static PartitionMode label_skew(std::size_t classes_per_device) {
    return {Kind::kLabelSkew, classes_per_device};
  }
};

/// Disjoint shards covering the whole dataset.
///
/// iid: a random permutation cut into near-equal pieces.
/// label skew: a random permutation of the classes is dealt round-robin,
/// device n holding classes perm[(n*c + j) mod C] for j < c; the samples of
/// each class are then split evenly among its holders.
std::vector<Dataset> partition(const Dataset& data, std::size_t n_devices, PartitionMode mode,
                               RngStream& rng);

/// Header-free CSV rows "label,f1,...,fk". Rejects ragged rows and
/// non-numeric fields. num_classes = 0 infers max label + 1.
Dataset load_csv_dataset(const std::filesystem::path& path, std::size_t num_classes = 0);

}  // namespace feelsim
