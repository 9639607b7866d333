#include "loosectl/edit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include <Eigen/QR>

#include "loosectl/error.hpp"
#include "loosectl/rng.hpp"

namespace lc {

void LoraLayer::validate() const {
    const auto M = W.rows(), N = W.cols();
    if (M == 0 || N == 0) throw InvalidArgument("W must be non-empty");
    const auto r = A.rows();
    if (r < 1) throw InvalidArgument("LoRA rank must be positive");
    if (A.cols() != N) throw InvalidArgument("A must be r x N with N = W.cols()");
    if (B.rows() != M || B.cols() != r) throw InvalidArgument("B must be M x r");
    if (r > std::min(M, N)) throw InvalidArgument("LoRA rank exceeds min(M, N)");
    if (!std::isfinite(gamma)) throw InvalidArgument("gamma must be finite");
}

Vector lora_forward(const LoraLayer& layer, const Vector& x) {
    layer.validate();
    if (x.size() != layer.W.cols()) throw InvalidArgument("input length does not match W.cols()");
    const Vector low = layer.A * x;  // r
    return layer.W * x + layer.gamma * (layer.B * low);
}

Matrix jacobian_fd(const VectorFn& f, const Vector& x, const JacobianOptions& opts) {
    if (!(opts.eps > 0.0)) throw InvalidArgument("eps must be positive");
    const auto n = x.size();
    if (n == 0) throw InvalidArgument("x must be non-empty");

    std::vector<Vector> plus(static_cast<std::size_t>(n)), minus(static_cast<std::size_t>(n));
    std::vector<double> step(static_cast<std::size_t>(n));
    auto column = [&](Eigen::Index j) {
        const double h = opts.eps * (1.0 + std::abs(x[j]));
        Vector xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        step[static_cast<std::size_t>(j)] = xp[j] - xm[j];
        plus[static_cast<std::size_t>(j)] = f(xp);
        minus[static_cast<std::size_t>(j)] = f(xm);
    };
    if (opts.parallel_safe && n > 1) {
        const auto workers = static_cast<Eigen::Index>(
            std::clamp<unsigned>(std::thread::hardware_concurrency(), 1u, 16u));
        std::vector<std::jthread> pool;
        for (Eigen::Index w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (Eigen::Index j = w; j < n; j += workers) column(j);
            });
    } else {
        for (Eigen::Index j = 0; j < n; ++j) column(j);
    }

    const auto m = plus[0].size();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (plus[static_cast<std::size_t>(j)].size() != m || minus[static_cast<std::size_t>(j)].size() != m)
            throw ContractViolation("black-box function returned inconsistent output lengths");
    }
    Matrix J(m, n);
    for (Eigen::Index j = 0; j < n; ++j)
        J.col(j) = (plus[static_cast<std::size_t>(j)] - minus[static_cast<std::size_t>(j)]) /
                   step[static_cast<std::size_t>(j)];
    return J;
}

namespace {

// Extend the (possibly partially zero) columns of Q to an orthonormal set;
// columns flagged in `missing` are filled by Gram-Schmidt on the standard basis.
void complete_orthonormal(Matrix& Q, const std::vector<bool>& missing) {
    const auto m = Q.rows();
    Eigen::Index candidate = 0;
    for (Eigen::Index k = 0; k < Q.cols(); ++k) {
        if (!missing[static_cast<std::size_t>(k)]) continue;
        while (candidate < m) {
            Vector v = Vector::Unit(m, candidate++);
            for (int pass = 0; pass < 2; ++pass)
                for (Eigen::Index j = 0; j < Q.cols(); ++j) {
                    if (j == k || (missing[static_cast<std::size_t>(j)] && j > k)) continue;
                    v -= Q.col(j).dot(v) * Q.col(j);
                }
            const double nv = v.norm();
            if (nv > 1e-8) {
                Q.col(k) = v / nv;
                break;
            }
        }
    }
}

SvdResult jacobi_tall(const Matrix& A) {
    const auto m = A.rows(), n = A.cols();
    Matrix U = A;
    Matrix V = Matrix::Identity(n, n);
    constexpr double tol = 1e-15;
    for (int sweep = 0; sweep < 80; ++sweep) {
        bool rotated = false;
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double alpha = U.col(p).squaredNorm();
                const double beta = U.col(q).squaredNorm();
                const double gamma = U.col(p).dot(U.col(q));
                if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (Eigen::Index i = 0; i < m; ++i) {
                    const double up = U(i, p), uq = U(i, q);
                    U(i, p) = c * up - s * uq;
                    U(i, q) = s * up + c * uq;
                }
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double vp = V(i, p), vq = V(i, q);
                    V(i, p) = c * vp - s * vq;
                    V(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }
    Vector sigma(n);
    for (Eigen::Index j = 0; j < n; ++j) sigma[j] = U.col(j).norm();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return sigma[a] > sigma[b]; });

    SvdResult r;
    r.U = Matrix::Zero(m, n);
    r.V = Matrix(n, n);
    r.sigma = Vector(n);
    std::vector<bool> missing(static_cast<std::size_t>(n), false);
    const double smax = sigma.size() ? sigma.maxCoeff() : 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto j = order[static_cast<std::size_t>(k)];
        r.sigma[k] = sigma[j];
        r.V.col(k) = V.col(j);
        if (sigma[j] > 1e-14 * std::max(smax, 1e-300) && sigma[j] > 0.0)
            r.U.col(k) = U.col(j) / sigma[j];
        else
            missing[static_cast<std::size_t>(k)] = true;
    }
    complete_orthonormal(r.U, missing);
    return r;
}

}  // namespace

SvdResult jacobi_svd(const Matrix& J) {
    if (J.rows() == 0 || J.cols() == 0) throw InvalidArgument("SVD of an empty matrix");
    if (J.rows() >= J.cols()) return jacobi_tall(J);
    SvdResult t = jacobi_tall(J.transpose());
    std::swap(t.U, t.V);
    return t;
}

namespace {

Matrix orthonormal_basis(const Matrix& Y) {
    Eigen::HouseholderQR<Matrix> qr(Y);
    return qr.householderQ() * Matrix::Identity(Y.rows(), Y.cols());
}

}  // namespace

EditDirectionSet top_directions_svd(const Matrix& J, int n_directions, const DirectionOptions& opts) {
    const auto m = J.rows(), n = J.cols();
    if (m == 0 || n == 0) throw InvalidArgument("Jacobian must be non-empty");
    if (n_directions < 1 || n_directions > std::min(m, n))
        throw InvalidArgument("number of directions must lie in [1, min(m, n)]");
    const auto N = static_cast<Eigen::Index>(n_directions);

    SvdResult svd;
    const auto entries = static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
    if (entries > opts.dense_budget) {
        // Randomized subspace iteration on a sketch of N + oversample columns.
        const Eigen::Index k = std::min<Eigen::Index>(N + opts.oversample, std::min(m, n));
        Matrix Q = orthonormal_basis(J * seeded_gaussian(static_cast<int>(n), static_cast<int>(k), opts.seed));
        for (int it = 0; it < opts.power_iterations; ++it) {
            const Matrix Z = orthonormal_basis(J.transpose() * Q);
            Q = orthonormal_basis(J * Z);
        }
        const Matrix Bsmall = Q.transpose() * J;  // k x n
        SvdResult s = jacobi_svd(Bsmall);
        svd.U = Q * s.U;
        svd.sigma = s.sigma;
        svd.V = s.V;
    } else {
        svd = jacobi_svd(J);
    }

    EditDirectionSet out;
    out.directions = svd.U.leftCols(N);
    out.x_directions = svd.V.leftCols(N);
    out.sigmas = svd.sigma.head(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index r = 0; r < n; ++r) {
            const double v = out.x_directions(r, i);
            if (std::abs(v) > 1e-12) {
                if (v < 0.0) {
                    out.x_directions.col(i) *= -1.0;
                    out.directions.col(i) *= -1.0;
                }
                break;
            }
        }
    }
    const double s1 = out.sigmas[0];
    out.rank_deficient = !(s1 > 0.0) || out.sigmas[N - 1] <= 1e-10 * s1;
    return out;
}

Vector apply_h_edit(const Vector& delta_h, const EditDirectionSet& set, int index, double beta) {
    if (index < 0 || index >= set.count()) throw InvalidArgument("edit direction index out of range");
    if (delta_h.size() != set.directions.rows())
        throw InvalidArgument("delta_h length does not match the direction dimension");
    return delta_h + beta * set.directions.col(index);
}

Matrix shared_attention_weights(const AttentionTensors& target, const AttentionTensors& source) {
    if (target.Q.rows() == 0 || target.Q.cols() == 0) throw InvalidArgument("target queries are empty");
    if (target.Q.cols() != source.K.cols())
        throw InvalidArgument("query and key channel counts differ");
    if (source.K.rows() != source.V.rows() || source.K.rows() == 0)
        throw InvalidArgument("source keys and values must have equal, non-zero token counts");
    const double scale = 1.0 / std::sqrt(static_cast<double>(target.Q.cols()));
    Matrix S = (target.Q * source.K.transpose()) * scale;
    for (Eigen::Index i = 0; i < S.rows(); ++i) {
        const double mx = S.row(i).maxCoeff();
        S.row(i) = (S.row(i).array() - mx).exp().matrix();
        S.row(i) /= S.row(i).sum();
    }
    return S;
}

Matrix kv_shared_attention(const AttentionTensors& target, const AttentionTensors& source) {
    return shared_attention_weights(target, source) * source.V;
}

Matrix seeded_gaussian(int rows, int cols, std::uint64_t seed) {
    Rng rng(mix64(seed));
    Matrix M(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) M(r, c) = rng.normal();
    return M;
}

ToyNetwork ToyNetwork::random(int n_in, int n_hidden, int n_out, std::uint64_t seed) {
    if (n_in < 1 || n_hidden < 1 || n_out < 1) throw InvalidArgument("layer sizes must be positive");
    ToyNetwork net;
    net.W1 = seeded_gaussian(n_hidden, n_in, seed * 4 + 0) / std::sqrt(static_cast<double>(n_in));
    net.b1 = 0.1 * seeded_gaussian(n_hidden, 1, seed * 4 + 1).col(0);
    net.W2 = seeded_gaussian(n_out, n_hidden, seed * 4 + 2) / std::sqrt(static_cast<double>(n_hidden));
    net.b2 = 0.1 * seeded_gaussian(n_out, 1, seed * 4 + 3).col(0);
    return net;
}

Vector ToyNetwork::operator()(const Vector& x) const {
    if (x.size() != W1.cols()) throw InvalidArgument("toy network input length mismatch");
    const Vector hidden = (W1 * x + b1).array().tanh().matrix();
    return W2 * hidden + b2;
}

}  // namespace lc
