#ifndef ICBPL_CONFIG_HPP
#define ICBPL_CONFIG_HPP

#include <filesystem>
#include <string>
#include <string_view>

#include "icbpl/trainer.hpp"

namespace icbpl {

// Plain key-value text, one `key = value` per line, '#' starts a comment.
// Keys mirror TrainConfig:
//
//   clusters, latent_dim, hidden_dims (comma list, empty for none),
//   preset (cifar10 | stl10 | cifar100 | imagenet50; sets the lambdas),
//   lambda1, lambda2, lambda3, sigma (number | median), neighbor_count,
//   refresh_period, batch_size, max_epochs, lr, seed,
//   metric (cosine | euclidean), augmentation (views | noise), noise_std,
//   stability_patience, stability_threshold
//
// Keys are applied in file order, so an explicit lambda after a preset
// overrides it.

/// kInvalidArgument naming the line for unknown keys or malformed values.
TrainConfig parse_train_config(std::string_view text, TrainConfig base = {});
TrainConfig load_train_config(const std::filesystem::path& path);

/// Inverse of parse_train_config for every key (no preset line).
std::string format_train_config(const TrainConfig& config);

}  // namespace icbpl

#endif  // ICBPL_CONFIG_HPP
