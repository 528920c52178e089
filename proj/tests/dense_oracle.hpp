#pragma once

// Test-only dense-matrix reference for spin dynamics. Builds full 2^n x 2^n
// operators from Pauli algebra and exponentiates by Hermitian
// diagonalisation. Shares nothing with the state-vector kernels.

#include <Eigen/Dense>
#include <complex>
#include <numbers>

#include "eoq/spin_sim.hpp"

namespace oracle {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using cplx = std::complex<double>;

inline Mat pauli(char which) {
    Mat m(2, 2);
    switch (which) {
        case 'x': m << 0, 1, 1, 0; break;
        case 'y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
        case 'z': m << 1, 0, 0, -1; break;
        default: m = Mat::Identity(2, 2);
    }
    return m;
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Single-spin operator on spin k of n, with bit k of the index = spin k (so
// spin n-1 is the most significant Kronecker factor).
inline Mat on_spin(const Mat& op, int k, int n) {
    Mat out = Mat::Identity(1, 1);
    for (int q = n - 1; q >= 0; --q) out = kron(out, q == k ? op : Mat::Identity(2, 2));
    return out;
}

// S_i . S_j
inline Mat heisenberg(int i, int j, int n) {
    Mat h = Mat::Zero(1 << n, 1 << n);
    for (char c : {'x', 'y', 'z'}) h += 0.25 * on_spin(pauli(c), i, n) * on_spin(pauli(c), j, n);
    return h;
}

inline Mat singlet_projector(int i, int j, int n) {
    return 0.25 * Mat::Identity(1 << n, 1 << n) - heisenberg(i, j, n);
}

inline Mat zeeman(const std::vector<double>& f_hz, int n) {
    Mat h = Mat::Zero(1 << n, 1 << n);
    for (int k = 0; k < n; ++k) h += 0.5 * f_hz[k] * on_spin(pauli('z'), k, n);
    return h;
}

// exp(-2 pi i H t) for Hermitian H in Hz.
inline Mat propagator(const Mat& h, double t) {
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    Vec ph(h.rows());
    for (int k = 0; k < h.rows(); ++k) ph(k) = std::exp(cplx(0, -2 * std::numbers::pi * es.eigenvalues()(k) * t));
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

inline Vec to_vec(const eoq::PureState& s) {
    Vec v(s.dim());
    for (std::size_t i = 0; i < s.dim(); ++i) v(i) = s[i];
    return v;
}

inline double max_abs_diff(const Vec& a, const eoq::PureState& s) {
    double m = 0;
    for (std::size_t i = 0; i < s.dim(); ++i) m = std::max(m, std::abs(a(i) - s[i]));
    return m;
}

}  // namespace oracle
