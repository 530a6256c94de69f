#ifndef ICBPL_LOSSES_HPP
#define ICBPL_LOSSES_HPP

#include <string_view>

#include "icbpl/geometry.hpp"
#include "icbpl/types.hpp"

namespace icbpl {

/// Weights on the augmentation, neighbor and centroid terms. The MMD term
/// always carries weight 1.
struct LossWeights {
    double lambda1 = 8.0;  // augmentation
    double lambda2 = 2.0;  // k-NN
    double lambda3 = 2.0;  // min-cosine-to-centroid

    /// Throws kInvalidArgument unless all weights are finite and >= 0.
    void validate() const;

    /// Named presets: "cifar10" (9,2,2); "stl10", "cifar100", "imagenet50" (8,2,2).
    static LossWeights preset(std::string_view name);
};

/// Gaussian kernel bandwidth: either fixed or the median heuristic.
class KernelConfig {
public:
    static KernelConfig median() { return KernelConfig(0.0); }
    static KernelConfig fixed(double sigma);

    bool is_median() const noexcept { return sigma_ == 0.0; }
    /// Only meaningful when !is_median().
    double sigma() const noexcept { return sigma_; }

private:
    explicit KernelConfig(double sigma) : sigma_(sigma) {}
    double sigma_;
};

/// Latent features for one batch. Neighbor latents are stored flattened:
/// row i * neighbor_count + j holds neighbor j of sample i.
struct LatentBatch {
    Matrix z;
    Matrix z_aug;
    Matrix z_nbr;
    Index neighbor_count = 0;

    Index batch_size() const noexcept { return z.rows(); }

    /// Shape checks only. Unit norms are a caller precondition.
    void validate_shapes() const;
};

struct LossTerms {
    double loss1 = 0.0;
    double loss2 = 0.0;
    double loss3 = 0.0;
    double loss4 = 0.0;
    double total = 0.0;
};

struct LossEvaluation {
    LossTerms terms;
    double sigma = 0.0;  // bandwidth actually used for loss1
    Matrix grad_z;
    Matrix grad_z_aug;
    Matrix grad_z_nbr;
};

double gaussian_kernel(const Eigen::Ref<const RowVector>& x, const Eigen::Ref<const RowVector>& y,
                       double sigma);

/// Median of the Euclidean distances over all unordered row pairs (mean of
/// the two middle values for an even count). kDegenerateBandwidth when it
/// is zero, e.g. when all rows coincide.
double median_pairwise_distance(const Matrix& rows);

double resolve_bandwidth(const KernelConfig& kernel, const Matrix& latents);

/// Three-term MMD estimator between the latent rows and the PEDCC centers,
/// evaluated literally (the cross term includes every latent/center pair),
/// so the value can be negative.
double mmd_loss(const Matrix& latents, const PedccSet& pedcc, const KernelConfig& kernel);

/// (1/2N) sum_i (1 - z_i.a_i)^2, or (1/2N) sum_i |z_i - a_i|^2 / 2 for the
/// Euclidean metric.
double augmentation_loss(const Matrix& z, const Matrix& z_aug, Metric metric = Metric::kCosine);

/// (1/2NM) sum_ij (1 - z_i.n_ij)^2 with the same Euclidean alternative.
/// neighbor_count must be >= 1.
double knn_loss(const Matrix& z, const Matrix& z_nbr, Index neighbor_count, Metric metric = Metric::kCosine);

/// Batch mean of (1 - max_p z_i.u_p)^2.
double min_cos_loss(const Matrix& z, const PedccSet& pedcc);

/// loss1 + lambda1*loss2 + lambda2*loss3 + lambda3*loss4 and its exact
/// gradient with respect to every latent entry. loss1 runs over the rows of
/// [z; z_aug]. The bandwidth is treated as a constant; with the median
/// heuristic it is resolved from [z; z_aug] first. Batches with
/// neighbor_count == 0 skip loss3. Sums are serial, in index order.
LossEvaluation combined_loss(const LatentBatch& batch, const PedccSet& pedcc, const LossWeights& weights,
                             const KernelConfig& kernel, Metric metric = Metric::kCosine);

}  // namespace icbpl

#endif  // ICBPL_LOSSES_HPP
