#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

namespace lc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr int kDefaultLoraRank = 8;
inline constexpr double kDefaultLoraGamma = 1.2;

/// Frozen linear map W (M x N) with a rank-r additive update B A scaled by
/// gamma at inference.
struct LoraLayer {
    Matrix W;  // M x N
    Matrix A;  // r x N
    Matrix B;  // M x r
    double gamma = kDefaultLoraGamma;

    int rank() const { return static_cast<int>(A.rows()); }
    /// Throws InvalidArgument on non-conformable shapes or r > min(M, N).
    void validate() const;
};

/// W x + gamma B (A x), without forming B A.
Vector lora_forward(const LoraLayer& layer, const Vector& x);

using VectorFn = std::function<Vector(const Vector&)>;

struct JacobianOptions {
    double eps = 1e-4;
    /// Caller asserts f may be evaluated concurrently for different columns.
    bool parallel_safe = false;
};

/// Central differences with per-coordinate step eps * (1 + |x_j|); exactly
/// 2n evaluations. Throws ContractViolation if f's output length varies.
Matrix jacobian_fd(const VectorFn& f, const Vector& x, const JacobianOptions& opts = {});

struct SvdResult {
    Matrix U;  // m x k
    Vector sigma;  // k, descending
    Matrix V;  // n x k
};

/// One-sided Jacobi SVD (thin). Columns sorted by descending singular value.
SvdResult jacobi_svd(const Matrix& J);

struct EditDirectionSet {
    Matrix directions;    // m x N, h-space unit columns
    Vector sigmas;        // N, non-increasing
    Matrix x_directions;  // n x N, x-space unit columns
    bool rank_deficient = false;

    int count() const { return static_cast<int>(sigmas.size()); }
};

struct DirectionOptions {
    /// Above this many Jacobian entries, randomized subspace iteration is used.
    std::size_t dense_budget = 4'000'000;
    int oversample = 8;
    int power_iterations = 2;
    std::uint64_t seed = 0;
};

/// Top-N singular triplets of J: h-space directions are left singular
/// vectors, x-space directions right singular vectors. Each x-direction's
/// first nonzero component is made positive.
EditDirectionSet top_directions_svd(const Matrix& J, int n_directions,
                                    const DirectionOptions& opts = {});

/// delta_h + beta * e_i.
Vector apply_h_edit(const Vector& delta_h, const EditDirectionSet& set, int index, double beta);

struct AttentionTensors {
    Matrix Q;  // tokens x d
    Matrix K;  // tokens x d
    Matrix V;  // tokens x d_v
};

/// Row-stochastic weights softmax(Q_target K_source^T / sqrt(d)).
Matrix shared_attention_weights(const AttentionTensors& target, const AttentionTensors& source);

/// Attention of the target queries over the source keys and values.
Matrix kv_shared_attention(const AttentionTensors& target, const AttentionTensors& source);

/// Two-layer toy map y = W2 tanh(W1 x + b1) + b2 with seeded weights; the
/// stand-in for a control network in direction probing.
struct ToyNetwork {
    Matrix W1;
    Vector b1;
    Matrix W2;
    Vector b2;

    static ToyNetwork random(int n_in, int n_hidden, int n_out, std::uint64_t seed);
    Vector operator()(const Vector& x) const;
    int input_size() const { return static_cast<int>(W1.cols()); }
    int output_size() const { return static_cast<int>(W2.rows()); }
};

/// Deterministic N(0, 1) matrix from a seed (platform-independent).
Matrix seeded_gaussian(int rows, int cols, std::uint64_t seed);

}  // namespace lc
