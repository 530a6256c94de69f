#ifndef ICBPL_HEAD_HPP
#define ICBPL_HEAD_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "icbpl/types.hpp"

namespace icbpl {

/// y = x * W^T + b, W stored out x in.
struct DenseLayer {
    Matrix weight;
    Vector bias;
};

struct HeadGradients {
    std::vector<Matrix> weight;
    std::vector<Vector> bias;
};

/// Added to the row norm before dividing, so an all-zero output maps to zero
/// instead of NaN.
inline constexpr double kNormEpsilon = 1e-12;

class ProjectionHead;

/// Activations recorded by ProjectionHead::forward. Only valid for the head
/// instance and parameter version that produced it.
class ForwardCache {
public:
    const Matrix& latents() const noexcept { return latents_; }

private:
    friend class ProjectionHead;
    const ProjectionHead* owner_ = nullptr;
    std::uint64_t version_ = 0;
    std::vector<Matrix> inputs_;  // input to each layer (post-activation)
    Matrix output_;               // final layer output before normalization
    Vector norms_;                // row norms of output_
    Matrix latents_;
};

/// Multilayer perceptron with rectifier hidden layers and an L2-normalized
/// output. Single-writer; const methods are safe to call concurrently.
class ProjectionHead {
public:
    /// layer_dims = {d_in, h_1, ..., d_latent}; weights uniform in
    /// +-1/sqrt(fan_in), seeded.
    ProjectionHead(std::vector<int> layer_dims, std::uint64_t seed);
    explicit ProjectionHead(std::vector<DenseLayer> layers);

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<int> layer_dims() const;
    Index input_dim() const noexcept { return layers_.front().weight.cols(); }
    Index latent_dim() const noexcept { return layers_.back().weight.rows(); }
    std::size_t parameter_count() const;

    ForwardCache forward(const Matrix& x) const;
    /// forward() without recording activations.
    Matrix infer(const Matrix& x) const;

    /// Parameter gradients for upstream grad_z (same shape as the cached
    /// latents), composed through the normalization Jacobian.
    HeadGradients backward(const ForwardCache& cache, const Matrix& grad_z) const;

    /// Mutable parameter access; invalidates outstanding caches.
    std::vector<DenseLayer>& mutable_layers();

    /// Zero-initialized gradients shaped like the parameters.
    HeadGradients zero_gradients() const;

private:
    void check_layers() const;

    std::vector<DenseLayer> layers_;
    std::uint64_t version_ = 0;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

/// One bias-corrected Adam update of a flat parameter block. `step` is the
/// 1-based index of the update being applied.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
                 std::span<double> second_moment, std::int64_t step, const AdamConfig& config);

class AdamState {
public:
    AdamState(const ProjectionHead& head, AdamConfig config);

    /// Applies one update to every parameter block. Non-finite gradients
    /// abort with kNonFinite naming the offending layer, before any
    /// parameter is touched.
    void step(ProjectionHead& head, const HeadGradients& grads);

    std::int64_t step_count() const noexcept { return step_; }
    const AdamConfig& config() const noexcept { return config_; }

private:
    AdamConfig config_;
    std::int64_t step_ = 0;
    std::vector<Matrix> weight_m_, weight_v_;
    std::vector<Vector> bias_m_, bias_v_;
};

}  // namespace icbpl

#endif  // ICBPL_HEAD_HPP
