#include "icbpl/geometry.hpp"

#include <cmath>
#include <random>
#include <string>

#include "icbpl/error.hpp"

namespace icbpl {

namespace {

// Regular simplex by dimension extension. Starting from the antipodal pair
// on the line, k centers in k-1 coordinates become k+1 centers by shrinking
// the old ones by sqrt(1 - 1/k^2), pushing them to -1/k along the new axis,
// and adding the new basic point e_k. Each step keeps unit norms, zero sum
// and pairwise dots of -1/k.
Matrix simplex_centers(int num_centers, int dim) {
    Matrix centers = Matrix::Zero(num_centers, dim);
    centers(0, 0) = 1.0;
    centers(1, 0) = -1.0;
    for (int k = 2; k < num_centers; ++k) {
        const double offset = 1.0 / static_cast<double>(k);
        const double shrink = std::sqrt(1.0 - offset * offset);
        centers.topLeftCorner(k, k - 1) *= shrink;
        centers.block(0, k - 1, k, 1).setConstant(-offset);
        centers(k, k - 1) = 1.0;
    }
    return centers;
}

}  // namespace

Matrix random_orthogonal(int dim, std::uint64_t seed) {
    require(dim >= 1, ErrorCode::kInvalidArgument, "rotation dimension must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd gaussian(dim, dim);
    for (Index r = 0; r < dim; ++r)
        for (Index c = 0; c < dim; ++c) gaussian(r, c) = normal(rng);

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd& r = qr.matrixQR();
    for (Index c = 0; c < dim; ++c)
        if (r(c, c) < 0.0) q.col(c) *= -1.0;
    return q;
}

PedccSet generate_pedcc(int num_centers, int dim, std::optional<std::uint64_t> seed) {
    require(num_centers >= 2, ErrorCode::kInvalidArgument,
            "num_centers must be at least 2, got " + std::to_string(num_centers));
    require(dim >= 1, ErrorCode::kInvalidArgument, "dim must be positive, got " + std::to_string(dim));
    if (num_centers > dim + 1)
        fail(ErrorCode::kInfeasibleGeometry,
             std::to_string(num_centers) + " equidistant centers do not fit in " + std::to_string(dim) +
                 " dimensions (at most dim + 1)");

    Matrix centers = simplex_centers(num_centers, dim);
    if (seed) {
        // Rows are points; apply x -> Q x as X Q^T.
        const Matrix rotation = random_orthogonal(dim, *seed);
        centers = (centers * rotation.transpose()).eval();
        centers.rowwise().normalize();
    }
    return PedccSet(std::move(centers), seed);
}

PedccSet PedccSet::from_centers(Matrix centers, std::optional<std::uint64_t> seed) {
    require(centers.rows() >= 2, ErrorCode::kInvalidArgument, "a PEDCC set needs at least two centers");
    require(centers.cols() >= 1, ErrorCode::kInvalidArgument, "PEDCC centers need a positive dimension");
    require(centers.allFinite(), ErrorCode::kInvalidArgument, "PEDCC centers must be finite");
    for (Index i = 0; i < centers.rows(); ++i) {
        const double norm = centers.row(i).norm();
        require(std::abs(norm - 1.0) <= 1e-4, ErrorCode::kInvalidArgument,
                "PEDCC center " + std::to_string(i) + " is not unit norm (" + std::to_string(norm) + ")");
        centers.row(i) /= norm;
    }
    for (Index i = 0; i < centers.rows(); ++i)
        for (Index j = i + 1; j < centers.rows(); ++j)
            require((centers.row(i) - centers.row(j)).norm() > 1e-6, ErrorCode::kInvalidArgument,
                    "PEDCC centers " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
    return PedccSet(std::move(centers), seed);
}

CenterMatch nearest_center(const Eigen::Ref<const RowVector>& z, const PedccSet& pedcc) {
    require(z.size() == pedcc.dim(), ErrorCode::kInvalidArgument,
            "latent has dimension " + std::to_string(z.size()) + " but PEDCC has " +
                std::to_string(pedcc.dim()));
    const Matrix& centers = pedcc.centers();
    CenterMatch best{0, centers.row(0).dot(z)};
    for (Index i = 1; i < centers.rows(); ++i) {
        const double cosine = centers.row(i).dot(z);
        if (cosine > best.cosine) best = {static_cast<int>(i), cosine};
    }
    return best;
}

std::vector<CenterMatch> nearest_centers(const Matrix& z, const PedccSet& pedcc) {
    require(z.cols() == pedcc.dim(), ErrorCode::kInvalidArgument,
            "latents have dimension " + std::to_string(z.cols()) + " but PEDCC has " +
                std::to_string(pedcc.dim()));
    std::vector<CenterMatch> matches;
    matches.reserve(static_cast<std::size_t>(z.rows()));
    for (Index r = 0; r < z.rows(); ++r) matches.push_back(nearest_center(z.row(r), pedcc));
    return matches;
}

}  // namespace icbpl
