#pragma once

#include <Eigen/Core>

namespace signrec::nn::detail {

template <typename Real>
using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Real>
using MatMap = Eigen::Map<RowMatrix<Real>>;

template <typename Real>
using ConstMatMap = Eigen::Map<const RowMatrix<Real>>;

template <typename Real>
using RowVecMap = Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>>;

template <typename Real>
using ConstRowVecMap = Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>>;

}  // namespace signrec::nn::detail
