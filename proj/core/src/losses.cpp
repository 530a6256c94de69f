#include "icbpl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "icbpl/error.hpp"

namespace icbpl {

namespace {

void require_finite(const Matrix& m, const char* what) {
    require(m.allFinite(), ErrorCode::kInvalidArgument, std::string(what) + " contains non-finite values");
}

double kernel_from_sq(double squared_distance, double sigma) {
    return std::exp(-squared_distance / (2.0 * sigma * sigma));
}

// Gaussian kernel matrix between the rows of a and b, squared distances
// taken as |a|^2 + |b|^2 - 2 a.b and clamped at zero.
Matrix kernel_matrix(const Matrix& a, const Matrix& b, double sigma) {
    const Vector a_sq = a.rowwise().squaredNorm();
    const Vector b_sq = b.rowwise().squaredNorm();
    Matrix sq = -2.0 * (a * b.transpose());
    sq.colwise() += a_sq;
    sq.rowwise() += b_sq.transpose();
    return (sq.cwiseMax(0.0) * (-1.0 / (2.0 * sigma * sigma))).array().exp().matrix();
}

// Value of the MMD estimator; when `grad` is non-null it receives
// d(value)/d(latents) with sigma held constant.
double mmd_value(const Matrix& latents, const Matrix& centers, double sigma, Matrix* grad) {
    const Index m = latents.rows();
    const Index c = centers.rows();
    require(m >= 2, ErrorCode::kInvalidArgument, "MMD needs at least two latent rows");
    require(c >= 2, ErrorCode::kInvalidArgument, "MMD needs at least two PEDCC centers");
    require(latents.cols() == centers.cols(), ErrorCode::kInvalidArgument,
            "latent dimension does not match PEDCC dimension");

    const double inv_sigma2 = 1.0 / (sigma * sigma);
    const double latent_coef = 1.0 / (static_cast<double>(m) * static_cast<double>(m - 1));
    const double center_coef = 1.0 / (static_cast<double>(c) * static_cast<double>(c - 1));
    const double cross_coef = 2.0 / (static_cast<double>(m) * static_cast<double>(c));

    Matrix k_ll = kernel_matrix(latents, latents, sigma);
    k_ll.diagonal().setZero();
    Matrix k_uu = kernel_matrix(centers, centers, sigma);
    k_uu.diagonal().setZero();
    const Matrix k_lu = kernel_matrix(latents, centers, sigma);

    if (grad) {
        // d/dl_i sum_{a != b} k(l_a, l_b) = -(2/sigma^2) sum_j k_ij (l_i - l_j)
        // d/dl_i sum_j k(l_i, u_j)        = -(1/sigma^2) sum_j k_ij (l_i - u_j)
        const Vector ll_rows = k_ll.rowwise().sum();
        const Vector lu_rows = k_lu.rowwise().sum();
        *grad = (-2.0 * latent_coef * inv_sigma2) * (latents.array().colwise() * ll_rows.array()).matrix();
        grad->noalias() += (2.0 * latent_coef * inv_sigma2) * (k_ll * latents);
        *grad += (cross_coef * inv_sigma2) * (latents.array().colwise() * lu_rows.array()).matrix();
        grad->noalias() -= (cross_coef * inv_sigma2) * (k_lu * centers);
    }

    return latent_coef * k_ll.sum() + center_coef * k_uu.sum() - cross_coef * k_lu.sum();
}

// Contrast between anchors and targets, target row i * per_anchor + j
// pairing with anchor i. `scale` is the leading 1/(2N) or 1/(2NM).
double contrast_value(const Matrix& anchors, const Matrix& targets, Index per_anchor, double scale, Metric metric,
                      Matrix* grad_anchor, Matrix* grad_target) {
    if (grad_anchor) grad_anchor->setZero(anchors.rows(), anchors.cols());
    if (grad_target) grad_target->setZero(targets.rows(), targets.cols());
    double sum = 0.0;
    for (Index i = 0; i < anchors.rows(); ++i) {
        for (Index j = 0; j < per_anchor; ++j) {
            const Index r = i * per_anchor + j;
            if (metric == Metric::kCosine) {
                const double gap = 1.0 - anchors.row(i).dot(targets.row(r));
                sum += gap * gap;
                if (grad_anchor) grad_anchor->row(i) += (-2.0 * scale * gap) * targets.row(r);
                if (grad_target) grad_target->row(r) += (-2.0 * scale * gap) * anchors.row(i);
            } else {
                const RowVector diff = anchors.row(i) - targets.row(r);
                sum += 0.5 * diff.squaredNorm();
                if (grad_anchor) grad_anchor->row(i) += scale * diff;
                if (grad_target) grad_target->row(r) -= scale * diff;
            }
        }
    }
    return scale * sum;
}

double min_cos_value(const Matrix& z, const PedccSet& pedcc, Matrix* grad) {
    require(z.rows() >= 1, ErrorCode::kInvalidArgument, "min-cosine loss needs at least one row");
    require(z.cols() == pedcc.dim(), ErrorCode::kInvalidArgument,
            "latent dimension does not match PEDCC dimension");
    const double scale = 1.0 / static_cast<double>(z.rows());
    if (grad) grad->setZero(z.rows(), z.cols());
    double sum = 0.0;
    for (Index i = 0; i < z.rows(); ++i) {
        const CenterMatch best = nearest_center(z.row(i), pedcc);
        const double gap = 1.0 - best.cosine;
        sum += gap * gap;
        if (grad) grad->row(i) = (-2.0 * scale * gap) * pedcc.centers().row(best.index);
    }
    return scale * sum;
}

}  // namespace

void LossWeights::validate() const {
    for (double w : {lambda1, lambda2, lambda3})
        require(std::isfinite(w) && w >= 0.0, ErrorCode::kInvalidArgument,
                "loss weights must be finite and non-negative");
}

LossWeights LossWeights::preset(std::string_view name) {
    if (name == "cifar10") return {9.0, 2.0, 2.0};
    if (name == "stl10" || name == "cifar100" || name == "imagenet50") return {8.0, 2.0, 2.0};
    fail(ErrorCode::kInvalidArgument,
         "unknown weight preset '" + std::string(name) + "' (expected cifar10, stl10, cifar100, imagenet50)");
}

KernelConfig KernelConfig::fixed(double sigma) {
    require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::kInvalidArgument,
            "kernel bandwidth must be positive and finite");
    return KernelConfig(sigma);
}

void LatentBatch::validate_shapes() const {
    require(z.rows() >= 1, ErrorCode::kInvalidArgument, "latent batch is empty");
    require(z_aug.rows() == z.rows() && z_aug.cols() == z.cols(), ErrorCode::kInvalidArgument,
            "augmented latents must match the shape of z");
    require(neighbor_count >= 0, ErrorCode::kInvalidArgument, "neighbor count must be non-negative");
    require(z_nbr.rows() == z.rows() * neighbor_count && (neighbor_count == 0 || z_nbr.cols() == z.cols()),
            ErrorCode::kInvalidArgument, "neighbor latents must have batch_size * neighbor_count rows of z's width");
}

double gaussian_kernel(const Eigen::Ref<const RowVector>& x, const Eigen::Ref<const RowVector>& y, double sigma) {
    require(x.size() == y.size(), ErrorCode::kInvalidArgument, "kernel arguments differ in length");
    require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::kInvalidArgument,
            "kernel bandwidth must be positive and finite");
    require(x.allFinite() && y.allFinite(), ErrorCode::kInvalidArgument, "kernel arguments must be finite");
    return kernel_from_sq((x - y).squaredNorm(), sigma);
}

double median_pairwise_distance(const Matrix& rows) {
    require(rows.rows() >= 2, ErrorCode::kInvalidArgument, "median bandwidth needs at least two rows");
    std::vector<double> distances;
    distances.reserve(static_cast<std::size_t>(rows.rows() * (rows.rows() - 1) / 2));
    for (Index i = 0; i < rows.rows(); ++i)
        for (Index j = i + 1; j < rows.rows(); ++j) distances.push_back((rows.row(i) - rows.row(j)).norm());

    const std::size_t mid = distances.size() / 2;
    std::nth_element(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(mid), distances.end());
    double median = distances[mid];
    if (distances.size() % 2 == 0) {
        const double lower = *std::max_element(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (lower + median);
    }
    if (!(median > 0.0))
        fail(ErrorCode::kDegenerateBandwidth, "median pairwise distance is zero; rows are (mostly) identical");
    return median;
}

double resolve_bandwidth(const KernelConfig& kernel, const Matrix& latents) {
    return kernel.is_median() ? median_pairwise_distance(latents) : kernel.sigma();
}

double mmd_loss(const Matrix& latents, const PedccSet& pedcc, const KernelConfig& kernel) {
    require(latents.rows() >= 2, ErrorCode::kInvalidArgument, "MMD needs at least two latent rows");
    require_finite(latents, "latents");
    return mmd_value(latents, pedcc.centers(), resolve_bandwidth(kernel, latents), nullptr);
}

double augmentation_loss(const Matrix& z, const Matrix& z_aug, Metric metric) {
    require(z.rows() >= 1 && z.rows() == z_aug.rows() && z.cols() == z_aug.cols(), ErrorCode::kInvalidArgument,
            "augmentation loss needs two non-empty matrices of identical shape");
    return contrast_value(z, z_aug, 1, 1.0 / (2.0 * static_cast<double>(z.rows())), metric, nullptr, nullptr);
}

double knn_loss(const Matrix& z, const Matrix& z_nbr, Index neighbor_count, Metric metric) {
    require(neighbor_count >= 1, ErrorCode::kInvalidArgument, "k-NN loss needs at least one neighbor per sample");
    require(z.rows() >= 1 && z_nbr.rows() == z.rows() * neighbor_count && z_nbr.cols() == z.cols(),
            ErrorCode::kInvalidArgument, "neighbor latents must have batch_size * neighbor_count rows of z's width");
    const double scale = 1.0 / (2.0 * static_cast<double>(z.rows()) * static_cast<double>(neighbor_count));
    return contrast_value(z, z_nbr, neighbor_count, scale, metric, nullptr, nullptr);
}

double min_cos_loss(const Matrix& z, const PedccSet& pedcc) { return min_cos_value(z, pedcc, nullptr); }

LossEvaluation combined_loss(const LatentBatch& batch, const PedccSet& pedcc, const LossWeights& weights,
                             const KernelConfig& kernel, Metric metric) {
    batch.validate_shapes();
    weights.validate();
    require(batch.z.cols() == pedcc.dim(), ErrorCode::kInvalidArgument,
            "latent dimension does not match PEDCC dimension");
    require_finite(batch.z, "z");
    require_finite(batch.z_aug, "z_aug");
    require_finite(batch.z_nbr, "z_nbr");

    const Index n = batch.batch_size();
    const Index d = batch.z.cols();

    LossEvaluation out;
    Matrix stacked(2 * n, d);
    stacked.topRows(n) = batch.z;
    stacked.bottomRows(n) = batch.z_aug;
    out.sigma = resolve_bandwidth(kernel, stacked);

    Matrix mmd_grad;
    out.terms.loss1 = mmd_value(stacked, pedcc.centers(), out.sigma, &mmd_grad);
    out.grad_z = mmd_grad.topRows(n);
    out.grad_z_aug = mmd_grad.bottomRows(n);
    out.grad_z_nbr = Matrix::Zero(batch.z_nbr.rows(), batch.neighbor_count > 0 ? d : batch.z_nbr.cols());

    Matrix ga, gb;
    out.terms.loss2 =
        contrast_value(batch.z, batch.z_aug, 1, 1.0 / (2.0 * static_cast<double>(n)), metric, &ga, &gb);
    out.grad_z += weights.lambda1 * ga;
    out.grad_z_aug += weights.lambda1 * gb;

    if (batch.neighbor_count > 0) {
        const double scale = 1.0 / (2.0 * static_cast<double>(n) * static_cast<double>(batch.neighbor_count));
        out.terms.loss3 = contrast_value(batch.z, batch.z_nbr, batch.neighbor_count, scale, metric, &ga, &gb);
        out.grad_z += weights.lambda2 * ga;
        out.grad_z_nbr += weights.lambda2 * gb;
    }

    out.terms.loss4 = min_cos_value(batch.z, pedcc, &ga);
    out.grad_z += weights.lambda3 * ga;

    out.terms.total = out.terms.loss1 + weights.lambda1 * out.terms.loss2 + weights.lambda2 * out.terms.loss3 +
                      weights.lambda3 * out.terms.loss4;
    return out;
}

}  // namespace icbpl
