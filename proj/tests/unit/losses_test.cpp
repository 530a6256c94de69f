#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "convert.hpp"
#include "expect_error.hpp"
#include "icbpl/losses.hpp"
#include "oracles.hpp"

namespace icbpl {
namespace {

Matrix row1(double a) {
    Matrix m(1, 1);
    m << a;
    return m;
}

Matrix row2(double a, double b) {
    Matrix m(1, 2);
    m << a, b;
    return m;
}

PedccSet line_centers() {
    Matrix u(2, 2);
    u << 1, 0, -1, 0;
    return PedccSet::from_centers(u);
}

TEST(Kernel, ClosedForms) {
    const RowVector x = row2(0.3, -0.4).row(0);
    EXPECT_EQ(gaussian_kernel(x, x, 0.7), 1.0);
    const double sigma = 0.5;
    const RowVector y = x + RowVector::Unit(2, 0) * std::sqrt(2.0) * sigma;
    EXPECT_NEAR(gaussian_kernel(x, y, sigma), std::exp(-1.0), 1e-12);
    EXPECT_NEAR(gaussian_kernel(row2(1, 0).row(0), row2(-1, 0).row(0), 1.0), 0.1353352832366127, 1e-12);
    EXPECT_ICBPL_ERROR(gaussian_kernel(x, x, 0.0), ErrorCode::kInvalidArgument);
}

TEST(Mmd, AntipodalLatentsAgainstAntipodalCenters) {
    Matrix l(2, 1);
    l << 1, -1;
    const auto p = generate_pedcc(2, 1);
    const double expected = std::exp(-2.0) - 1.0;
    const double oracle_value = oracle::mmd(testing::to_rows(l), testing::to_rows(p.centers()), 1.0);
    EXPECT_NEAR(oracle_value, expected, 1e-12);
    EXPECT_NEAR(mmd_loss(l, p, KernelConfig::fixed(1.0)), oracle_value, 1e-9);
    EXPECT_NEAR(mmd_loss(l, p, KernelConfig::fixed(1.0)), -0.864665, 1e-6);
}

TEST(Mmd, CollapsedOntoOneCenter) {
    const auto p = generate_pedcc(2, 3);
    Matrix l(5, 3);
    for (Index i = 0; i < 5; ++i) l.row(i) = p.centers().row(1);
    // first term is exactly 1 because every pair coincides
    const double sigma = 0.8;
    const double u_term = gaussian_kernel(p.centers().row(0), p.centers().row(1), sigma);
    const double cross = 0.5 * (1.0 + u_term);
    EXPECT_NEAR(mmd_loss(l, p, KernelConfig::fixed(sigma)), 1.0 + u_term - 2.0 * cross, 1e-12);
    EXPECT_NEAR(mmd_loss(l, p, KernelConfig::fixed(sigma)),
                oracle::mmd(testing::to_rows(l), testing::to_rows(p.centers()), sigma), 1e-12);
}

TEST(Mmd, MatchesTermwiseOracleOnRandomInputs) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = generate_pedcc(2 + trial % 5, 7, trial);
        const Matrix l = testing::unit_rows(3 + trial, 7, rng);
        const double sigma = 0.2 + 0.1 * trial;
        EXPECT_NEAR(mmd_loss(l, p, KernelConfig::fixed(sigma)),
                    oracle::mmd(testing::to_rows(l), testing::to_rows(p.centers()), sigma), 1e-12);
    }
}

TEST(Mmd, CenterKernelGrowsWithSigma) {
    const auto p = generate_pedcc(4, 4);
    double prev = 0.0;
    for (double sigma = 0.1; sigma < 10.0; sigma *= 2.0) {
        const double k = gaussian_kernel(p.centers().row(0), p.centers().row(1), sigma);
        EXPECT_GT(k, prev);
        EXPECT_GT(k, 0.0);
        prev = k;
    }
}

TEST(Mmd, MedianBandwidth) {
    std::mt19937_64 rng(2);
    const Matrix l = testing::unit_rows(9, 4, rng);
    EXPECT_NEAR(median_pairwise_distance(l), oracle::median_distance(testing::to_rows(l)), 1e-15);
    const Matrix even = testing::unit_rows(4, 4, rng);  // six pairs
    EXPECT_NEAR(median_pairwise_distance(even), oracle::median_distance(testing::to_rows(even)), 1e-15);

    const auto p = generate_pedcc(3, 4);
    EXPECT_NEAR(mmd_loss(l, p, KernelConfig::median()),
                oracle::mmd(testing::to_rows(l), testing::to_rows(p.centers()), oracle::median_distance(testing::to_rows(l))),
                1e-12);
}

TEST(Mmd, Errors) {
    const auto p = generate_pedcc(2, 2);
    EXPECT_ICBPL_ERROR(mmd_loss(row2(1, 0), p, KernelConfig::fixed(1.0)), ErrorCode::kInvalidArgument);
    Matrix same(3, 2);
    same.rowwise() = RowVector::Unit(2, 0);
    EXPECT_ICBPL_ERROR(mmd_loss(same, p, KernelConfig::median()), ErrorCode::kDegenerateBandwidth);
    EXPECT_ICBPL_ERROR(KernelConfig::fixed(-1.0), ErrorCode::kInvalidArgument);
    EXPECT_ICBPL_ERROR(KernelConfig::fixed(std::nan("")), ErrorCode::kInvalidArgument);
}

TEST(AugmentationLoss, ClosedForms) {
    std::mt19937_64 rng(1);
    const Matrix z = testing::unit_rows(6, 5, rng);
    EXPECT_NEAR(augmentation_loss(z, z), 0.0, 1e-15);
    EXPECT_NEAR(augmentation_loss(row2(1, 0), row2(0, 1)), 0.5, 1e-12);
    EXPECT_NEAR(augmentation_loss(row2(1, 0), row2(-1, 0)), 2.0, 1e-12);
    EXPECT_ICBPL_ERROR(augmentation_loss(z, z.topRows(2)), ErrorCode::kInvalidArgument);
}

TEST(AugmentationLoss, EuclideanVariant) {
    // |z - a|^2 / 2 = 1 - z.a for unit rows, halved again by the 1/(2N)
    EXPECT_NEAR(augmentation_loss(row2(1, 0), row2(0, 1), Metric::kEuclidean), 0.5, 1e-12);
    EXPECT_NEAR(augmentation_loss(row2(1, 0), row2(-1, 0), Metric::kEuclidean), 1.0, 1e-12);
}

TEST(KnnLoss, ClosedForms) {
    std::mt19937_64 rng(3);
    const Matrix z = testing::unit_rows(4, 3, rng);
    Matrix nbr(8, 3);
    for (Index i = 0; i < 4; ++i) nbr.row(2 * i) = nbr.row(2 * i + 1) = z.row(i);
    EXPECT_NEAR(knn_loss(z, nbr, 2), 0.0, 1e-15);
    EXPECT_NEAR(knn_loss(row2(1, 0), row2(0, 1), 1), 0.5, 1e-12);
    Matrix two(2, 2);
    two << 1, 0, 0, 1;
    EXPECT_NEAR(knn_loss(row2(1, 0), two, 2), 0.25, 1e-12);
    EXPECT_ICBPL_ERROR(knn_loss(z, Matrix(0, 3), 0), ErrorCode::kInvalidArgument);
}

TEST(MinCosLoss, ClosedForms) {
    const auto p = line_centers();
    EXPECT_EQ(min_cos_loss(p.centers(), p), 0.0);
    EXPECT_NEAR(min_cos_loss(row2(0, 1), p), 1.0, 1e-12);
    const double c30 = std::cos(std::numbers::pi / 6.0);
    const double s30 = std::sin(std::numbers::pi / 6.0);
    EXPECT_NEAR(min_cos_loss(row2(c30, s30), p), (1.0 - c30) * (1.0 - c30), 1e-12);
    EXPECT_NEAR(min_cos_loss(row2(c30, s30), p), 0.017949, 1e-6);
    EXPECT_ICBPL_ERROR(min_cos_loss(row1(1.0), p), ErrorCode::kInvalidArgument);
}

TEST(Weights, PresetsAndValidation) {
    const auto c10 = LossWeights::preset("cifar10");
    EXPECT_EQ(c10.lambda1, 9.0);
    EXPECT_EQ(c10.lambda2, 2.0);
    EXPECT_EQ(c10.lambda3, 2.0);
    for (const char* name : {"stl10", "cifar100", "imagenet50"}) {
        const auto w = LossWeights::preset(name);
        EXPECT_EQ(w.lambda1, 8.0) << name;
        EXPECT_EQ(w.lambda2, 2.0) << name;
        EXPECT_EQ(w.lambda3, 2.0) << name;
    }
    EXPECT_ICBPL_ERROR(LossWeights::preset("mnist"), ErrorCode::kInvalidArgument);
    EXPECT_ICBPL_ERROR((LossWeights{-1.0, 0.0, 0.0}.validate()), ErrorCode::kInvalidArgument);
}

LatentBatch random_batch(Index n, Index d, Index m, std::mt19937_64& rng) {
    LatentBatch b;
    b.z = testing::unit_rows(n, d, rng);
    b.z_aug = testing::unit_rows(n, d, rng);
    b.z_nbr = testing::unit_rows(n * m, d, rng);
    b.neighbor_count = m;
    return b;
}

TEST(CombinedLoss, PerfectArrangementLeavesOnlyMmd) {
    const auto p = generate_pedcc(3, 4);
    LatentBatch b;
    b.z = p.centers();
    b.z_aug = p.centers();
    b.neighbor_count = 2;
    b.z_nbr.resize(6, 4);
    for (Index i = 0; i < 3; ++i) b.z_nbr.row(2 * i) = b.z_nbr.row(2 * i + 1) = p.centers().row(i);
    const auto kernel = KernelConfig::fixed(0.6);
    const auto eval = combined_loss(b, p, LossWeights{9, 2, 2}, kernel);
    Matrix stacked(6, 4);
    stacked << b.z, b.z_aug;
    EXPECT_NEAR(eval.terms.loss2, 0.0, 1e-15);
    EXPECT_NEAR(eval.terms.loss3, 0.0, 1e-15);
    EXPECT_NEAR(eval.terms.loss4, 0.0, 1e-15);
    EXPECT_NEAR(eval.terms.total, mmd_loss(stacked, p, kernel), 1e-12);
    EXPECT_NEAR(eval.terms.loss1, oracle::mmd(testing::to_rows(stacked), testing::to_rows(p.centers()), 0.6), 1e-12);
}

TEST(CombinedLoss, TotalIsWeightedSum) {
    std::mt19937_64 rng(11);
    const auto p = generate_pedcc(3, 5);
    const auto b = random_batch(4, 5, 3, rng);
    const LossWeights w{1.5, 0.25, 3.0};
    const auto e = combined_loss(b, p, w, KernelConfig::median());
    EXPECT_NEAR(e.terms.total, e.terms.loss1 + 1.5 * e.terms.loss2 + 0.25 * e.terms.loss3 + 3.0 * e.terms.loss4, 1e-14);
    EXPECT_NEAR(e.terms.loss2, augmentation_loss(b.z, b.z_aug), 1e-15);
    EXPECT_NEAR(e.terms.loss3, knn_loss(b.z, b.z_nbr, 3), 1e-15);
    EXPECT_NEAR(e.terms.loss4, min_cos_loss(b.z, p), 1e-15);
    Matrix stacked(8, 5);
    stacked << b.z, b.z_aug;
    EXPECT_NEAR(e.sigma, oracle::median_distance(testing::to_rows(stacked)), 1e-15);
}

// Builds f(flat latents) with sigma pinned to the value the analytic pass used.
double total_at(const std::vector<double>& flat, const LatentBatch& shape, const PedccSet& p, const LossWeights& w,
                double sigma, Metric metric) {
    LatentBatch b = shape;
    std::size_t k = 0;
    for (Matrix* m : {&b.z, &b.z_aug, &b.z_nbr})
        for (Index i = 0; i < m->size(); ++i) m->data()[i] = flat[k++];
    return combined_loss(b, p, w, KernelConfig::fixed(sigma), metric).terms.total;
}

void check_gradient(const LatentBatch& b, const PedccSet& p, const LossWeights& w, Metric metric) {
    const auto e = combined_loss(b, p, w, KernelConfig::median(), metric);
    std::vector<double> x, analytic;
    for (const Matrix* m : {&b.z, &b.z_aug, &b.z_nbr}) {
        const auto f = testing::flatten(*m);
        x.insert(x.end(), f.begin(), f.end());
    }
    for (const Matrix* g : {&e.grad_z, &e.grad_z_aug, &e.grad_z_nbr}) {
        const auto f = testing::flatten(*g);
        analytic.insert(analytic.end(), f.begin(), f.end());
    }
    const auto numeric = oracle::central_difference(
        [&](const std::vector<double>& v) { return total_at(v, b, p, w, e.sigma, metric); }, x);
    EXPECT_LE(oracle::relative_error(analytic, numeric), 1e-4);
}

TEST(CombinedLoss, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(17);
    const auto p = generate_pedcc(3, 5, 1);
    for (int trial = 0; trial < 10; ++trial) check_gradient(random_batch(4, 5, 2, rng), p, LossWeights{8, 2, 2}, Metric::kCosine);
}

TEST(CombinedLoss, EuclideanGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(19);
    const auto p = generate_pedcc(3, 5, 2);
    for (int trial = 0; trial < 10; ++trial)
        check_gradient(random_batch(4, 5, 2, rng), p, LossWeights{8, 2, 2}, Metric::kEuclidean);
}

TEST(CombinedLoss, NoNeighborsSkipsLoss3) {
    std::mt19937_64 rng(23);
    const auto p = generate_pedcc(3, 5);
    auto b = random_batch(4, 5, 0, rng);
    const auto e = combined_loss(b, p, LossWeights{}, KernelConfig::fixed(1.0));
    EXPECT_EQ(e.terms.loss3, 0.0);
    EXPECT_EQ(e.grad_z_nbr.size(), 0);
    check_gradient(b, p, LossWeights{}, Metric::kCosine);
}

TEST(CombinedLoss, InvariantUnderRowPermutation) {
    std::mt19937_64 rng(29);
    const auto p = generate_pedcc(4, 6);
    const auto b = random_batch(5, 6, 2, rng);
    const std::vector<Index> perm{3, 0, 4, 1, 2};
    LatentBatch q = b;
    for (Index i = 0; i < 5; ++i) {
        q.z.row(i) = b.z.row(perm[i]);
        q.z_aug.row(i) = b.z_aug.row(perm[i]);
        for (Index j = 0; j < 2; ++j) q.z_nbr.row(2 * i + j) = b.z_nbr.row(2 * perm[i] + j);
    }
    const auto kernel = KernelConfig::fixed(0.9);
    const auto a = combined_loss(b, p, LossWeights{}, kernel);
    const auto c = combined_loss(q, p, LossWeights{}, kernel);
    EXPECT_NEAR(a.terms.total, c.terms.total, 1e-12);
    for (Index i = 0; i < 5; ++i) EXPECT_LE((a.grad_z.row(perm[i]) - c.grad_z.row(i)).norm(), 1e-12);
}

TEST(CombinedLoss, ContrastGradientsVanishAtMinima) {
    const auto p = generate_pedcc(3, 4);
    LatentBatch b;
    b.z = p.centers();
    b.z_aug = b.z;
    b.neighbor_count = 1;
    b.z_nbr = b.z;
    // only the contrast and centroid terms: MMD is isolated by subtracting it
    const auto kernel = KernelConfig::fixed(1.0);
    const auto full = combined_loss(b, p, LossWeights{5, 5, 5}, kernel);
    const auto mmd_only = combined_loss(b, p, LossWeights{0, 0, 0}, kernel);
    EXPECT_LE((full.grad_z - mmd_only.grad_z).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE((full.grad_z_aug - mmd_only.grad_z_aug).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE(full.grad_z_nbr.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CombinedLoss, NonNegativeTerms) {
    std::mt19937_64 rng(31);
    const auto p = generate_pedcc(5, 8);
    for (int t = 0; t < 50; ++t) {
        const auto b = random_batch(6, 8, 3, rng);
        const auto e = combined_loss(b, p, LossWeights{}, KernelConfig::median());
        EXPECT_GE(e.terms.loss2, 0.0);
        EXPECT_GE(e.terms.loss3, 0.0);
        EXPECT_GE(e.terms.loss4, 0.0);
    }
}

TEST(CombinedLoss, ShapeErrors) {
    std::mt19937_64 rng(37);
    const auto p = generate_pedcc(3, 5);
    auto b = random_batch(4, 5, 2, rng);
    b.z_nbr = b.z_nbr.topRows(7);
    EXPECT_ICBPL_ERROR(combined_loss(b, p, LossWeights{}, KernelConfig::median()), ErrorCode::kInvalidArgument);
    auto c = random_batch(4, 5, 2, rng);
    EXPECT_ICBPL_ERROR(combined_loss(c, generate_pedcc(3, 6), LossWeights{}, KernelConfig::median()),
                       ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace icbpl
