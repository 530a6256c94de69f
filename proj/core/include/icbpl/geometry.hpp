#ifndef ICBPL_GEOMETRY_HPP
#define ICBPL_GEOMETRY_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "icbpl/types.hpp"

namespace icbpl {

/// Predefined evenly-distributed class centroids: C unit vectors in d
/// dimensions forming a regular simplex centred at the origin, so every
/// pair of distinct centers has dot product -1/(C-1).
///
/// Immutable once built; safe to share across threads.
class PedccSet {
public:
    /// Wraps externally supplied centers (e.g. loaded from disk). Rows are
    /// renormalized; rows further than 1e-4 from unit norm, or duplicated
    /// rows, are rejected with kInvalidArgument.
    static PedccSet from_centers(Matrix centers, std::optional<std::uint64_t> seed = std::nullopt);

    const Matrix& centers() const noexcept { return centers_; }
    Index num_centers() const noexcept { return centers_.rows(); }
    Index dim() const noexcept { return centers_.cols(); }
    std::optional<std::uint64_t> seed() const noexcept { return seed_; }

private:
    PedccSet(Matrix centers, std::optional<std::uint64_t> seed)
        : centers_(std::move(centers)), seed_(seed) {}

    friend PedccSet generate_pedcc(int, int, std::optional<std::uint64_t>);

    Matrix centers_;
    std::optional<std::uint64_t> seed_;
};

/// Builds C = num_centers centers in `dim` dimensions. Without a seed the
/// output is deterministic and occupies the first C-1 coordinates; with a
/// seed a random orthogonal rotation of R^dim is applied to every row.
///
/// Requires 2 <= num_centers <= dim + 1: fewer than two centers is
/// kInvalidArgument, more than dim + 1 is kInfeasibleGeometry.
PedccSet generate_pedcc(int num_centers, int dim, std::optional<std::uint64_t> seed = std::nullopt);

struct CenterMatch {
    int index = 0;
    double cosine = 0.0;
};

/// argmax_i dot(z, centers[i]); ties go to the lowest index.
CenterMatch nearest_center(const Eigen::Ref<const RowVector>& z, const PedccSet& pedcc);

/// Row-wise nearest_center over a matrix of latents.
std::vector<CenterMatch> nearest_centers(const Matrix& z, const PedccSet& pedcc);

/// Seeded Haar-distributed orthogonal matrix (QR of a Gaussian matrix with
/// the sign convention that makes R's diagonal positive).
Matrix random_orthogonal(int dim, std::uint64_t seed);

}  // namespace icbpl

#endif  // ICBPL_GEOMETRY_HPP
