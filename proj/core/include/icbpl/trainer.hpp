#ifndef ICBPL_TRAINER_HPP
#define ICBPL_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "icbpl/dataset.hpp"
#include "icbpl/error.hpp"
#include "icbpl/geometry.hpp"
#include "icbpl/head.hpp"
#include "icbpl/losses.hpp"
#include "icbpl/neighbors.hpp"

namespace icbpl {

enum class AugmentationMode {
    kViews,  // sample one stored view per sample per epoch
    kNoise,  // additive Gaussian noise, rescaled to the original row norm
};

struct TrainConfig {
    int clusters = 10;
    int latent_dim = 64;
    std::vector<int> hidden_dims{512};
    LossWeights weights;
    KernelConfig kernel = KernelConfig::median();
    int neighbor_count = kDefaultNeighborCount;
    int refresh_period = kDefaultRefreshPeriod;
    int batch_size = 100;
    int max_epochs = 400;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    Metric metric = Metric::kCosine;
    AugmentationMode augmentation = AugmentationMode::kNoise;
    double noise_std = 0.05;
    // Early stop once fewer than stability_threshold of the labels change
    // between consecutive epochs, stability_patience epochs in a row.
    int stability_patience = 20;
    double stability_threshold = 0.001;

    /// kInvalidArgument on any infeasible field (including latent_dim < clusters - 1).
    void validate() const;
};

struct ClusterAssignment {
    std::vector<int> labels;
    std::vector<double> scores;
    std::vector<std::size_t> counts;
};

struct EpochRecord {
    int epoch = 0;
    LossTerms loss;  // batch means
    double sigma = 0.0;
    bool neighbors_refreshed = false;
    double changed_fraction = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::vector<int> refresh_epochs;
    bool early_stopped = false;
    std::optional<double> acc;
    std::optional<double> nmi;
};

struct TrainResult {
    ProjectionHead head;
    PedccSet pedcc;
    TrainReport report;
    ClusterAssignment assignment;
};

/// Raised when the loss or a gradient becomes non-finite. Carries the head
/// from before the failing update.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& message, ProjectionHead last_good, PedccSet pedcc, TrainReport report)
        : Error(ErrorCode::kNonFinite, message),
          last_good_(std::move(last_good)),
          pedcc_(std::move(pedcc)),
          report_(std::move(report)) {}

    const ProjectionHead& last_good() const noexcept { return last_good_; }
    const PedccSet& pedcc() const noexcept { return pedcc_; }
    const TrainReport& report() const noexcept { return report_; }

private:
    ProjectionHead last_good_;
    PedccSet pedcc_;
    TrainReport report_;
};

/// Called after every completed epoch.
using EpochObserver = std::function<void(const EpochRecord&)>;

/// Full training loop. Labels in the dataset are never used for training,
/// only for the final acc/nmi in the report. Deterministic for a fixed seed.
TrainResult train(const EmbeddingDataset& dataset, const TrainConfig& config, const EpochObserver& observer = {});

/// Label every sample with its nearest PEDCC center in latent space.
ClusterAssignment assign(const EmbeddingDataset& dataset, const ProjectionHead& head, const PedccSet& pedcc);
ClusterAssignment assign_latents(const Matrix& latents, const PedccSet& pedcc);

/// Adds N(0, noise_std^2) to every entry and rescales each row back to its
/// original norm.
Matrix noise_augment(const Matrix& x, double noise_std, std::mt19937_64& rng);

/// d_in -> hidden... -> latent_dim for this config.
std::vector<int> head_layout(const TrainConfig& config, Index input_dim);

}  // namespace icbpl

#endif  // ICBPL_TRAINER_HPP
