#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace spectra {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;
using Matrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
using ColVector = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;
using RealMatrix = Eigen::MatrixXd;

}  // namespace spectra
