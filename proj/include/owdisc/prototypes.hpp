#pragma once

#include <cstddef>

#include "owdisc/config.hpp"
#include "owdisc/embedding.hpp"
#include "owdisc/prototype_bank.hpp"

namespace owdisc {

// Normalized per-class means of a labeled set; throws on an empty class or
// fewer than two classes.
PrototypeBank class_mean_prototypes(const EmbeddingSet& source);

/// Trains the seen-class prototypes as an L2-normalized linear classifier on
/// frozen source embeddings.
///
/// Starts from the normalized class means and runs `config.iterations` steps
/// of mini-batch SGD on softmax cross-entropy (logits scaled by
/// 1/temperature), renormalizing every column after each step. If the trained
/// classifier ends with lower training accuracy than its initialization, the
/// initialization is returned.
PrototypeBank train_seen_prototypes(const EmbeddingSet& source, const DiscoveryConfig& config);

// K-means on the target embeddings with k clusters, projected to the sphere.
PrototypeBank target_prototypes(const EmbeddingSet& target, std::size_t k, const DiscoveryConfig& config);

// Fraction of labeled samples whose highest-scoring column is their label.
double nearest_prototype_accuracy(const PrototypeBank& bank, const EmbeddingSet& labeled);

}  // namespace owdisc
