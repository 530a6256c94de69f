#ifndef ICBPL_TESTS_SUPPORT_CONVERT_HPP
#define ICBPL_TESTS_SUPPORT_CONVERT_HPP

#include <random>
#include <vector>

#include "icbpl/types.hpp"

namespace icbpl::testing {

inline std::vector<std::vector<double>> to_rows(const Matrix& m) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) rows[static_cast<std::size_t>(i)].push_back(m(i, j));
    return rows;
}

inline Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

inline Matrix unit_rows(Index rows, Index cols, std::mt19937_64& rng) {
    Matrix m = gaussian(rows, cols, rng);
    m.rowwise().normalize();
    return m;
}

inline std::vector<double> flatten(const Matrix& m) {
    return {m.data(), m.data() + m.size()};
}

}  // namespace icbpl::testing

#endif  // ICBPL_TESTS_SUPPORT_CONVERT_HPP
