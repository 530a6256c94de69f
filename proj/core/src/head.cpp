#include "icbpl/head.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <string>

#include "icbpl/error.hpp"

namespace icbpl {

namespace {

std::uint64_t next_version() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

bool finite(std::span<const double> values) {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

std::span<double> as_span(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> as_span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> as_span(const Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

ProjectionHead::ProjectionHead(std::vector<int> layer_dims, std::uint64_t seed) {
    require(layer_dims.size() >= 2, ErrorCode::kInvalidArgument,
            "a projection head needs at least an input and an output dimension");
    for (int dim : layer_dims)
        require(dim >= 1, ErrorCode::kInvalidArgument, "layer dimensions must be positive");

    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const int fan_in = layer_dims[l];
        const int fan_out = layer_dims[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> uniform(-bound, bound);
        DenseLayer layer{Matrix(fan_out, fan_in), Vector(fan_out)};
        for (Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = uniform(rng);
        for (Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = uniform(rng);
        layers_.push_back(std::move(layer));
    }
    version_ = next_version();
}

ProjectionHead::ProjectionHead(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    check_layers();
    version_ = next_version();
}

void ProjectionHead::check_layers() const {
    require(!layers_.empty(), ErrorCode::kInvalidArgument, "a projection head needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const DenseLayer& layer = layers_[l];
        require(layer.weight.rows() >= 1 && layer.weight.cols() >= 1 && layer.bias.size() == layer.weight.rows(),
                ErrorCode::kInvalidArgument, "layer " + std::to_string(l) + " has inconsistent shapes");
        require(layer.weight.allFinite() && layer.bias.allFinite(), ErrorCode::kInvalidArgument,
                "layer " + std::to_string(l) + " has non-finite parameters");
        if (l > 0)
            require(layer.weight.cols() == layers_[l - 1].weight.rows(), ErrorCode::kInvalidArgument,
                    "layer " + std::to_string(l) + " input width does not match the previous layer");
    }
}

std::vector<int> ProjectionHead::layer_dims() const {
    std::vector<int> dims{static_cast<int>(input_dim())};
    for (const DenseLayer& layer : layers_) dims.push_back(static_cast<int>(layer.weight.rows()));
    return dims;
}

std::size_t ProjectionHead::parameter_count() const {
    std::size_t total = 0;
    for (const DenseLayer& layer : layers_) total += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
    return total;
}

std::vector<DenseLayer>& ProjectionHead::mutable_layers() {
    version_ = next_version();
    return layers_;
}

HeadGradients ProjectionHead::zero_gradients() const {
    HeadGradients grads;
    for (const DenseLayer& layer : layers_) {
        grads.weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
        grads.bias.push_back(Vector::Zero(layer.bias.size()));
    }
    return grads;
}

ForwardCache ProjectionHead::forward(const Matrix& x) const {
    require(x.cols() == input_dim(), ErrorCode::kInvalidArgument,
            "input has " + std::to_string(x.cols()) + " columns, head expects " + std::to_string(input_dim()));
    require(x.allFinite(), ErrorCode::kInvalidArgument, "head input contains non-finite values");

    ForwardCache cache;
    cache.owner_ = this;
    cache.version_ = version_;
    cache.inputs_.reserve(layers_.size());

    Matrix activation = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const DenseLayer& layer = layers_[l];
        Matrix pre = activation * layer.weight.transpose();
        pre.rowwise() += layer.bias.transpose();
        cache.inputs_.push_back(std::move(activation));
        if (l + 1 < layers_.size())
            activation = pre.cwiseMax(0.0);
        else
            cache.output_ = std::move(pre);
    }

    cache.norms_ = cache.output_.rowwise().norm();
    cache.latents_ = cache.output_;
    for (Index r = 0; r < cache.latents_.rows(); ++r) cache.latents_.row(r) /= cache.norms_[r] + kNormEpsilon;
    return cache;
}

Matrix ProjectionHead::infer(const Matrix& x) const { return forward(x).latents_; }

HeadGradients ProjectionHead::backward(const ForwardCache& cache, const Matrix& grad_z) const {
    require(cache.owner_ == this && cache.version_ == version_, ErrorCode::kInvalidState,
            "forward cache is stale or belongs to a different head");
    require(grad_z.rows() == cache.latents_.rows() && grad_z.cols() == cache.latents_.cols(),
            ErrorCode::kInvalidState, "upstream gradient shape does not match the cached forward pass");

    // d z / d y for z = y / (|y| + eps):  I/(|y|+eps) - y y^T / (|y| (|y|+eps)^2)
    Matrix delta(grad_z.rows(), grad_z.cols());
    for (Index r = 0; r < grad_z.rows(); ++r) {
        const double norm = cache.norms_[r];
        const double denom = norm + kNormEpsilon;
        delta.row(r) = grad_z.row(r) / denom;
        if (norm > 0.0) {
            const double projection = cache.output_.row(r).dot(grad_z.row(r));
            delta.row(r) -= (projection / (norm * denom * denom)) * cache.output_.row(r);
        }
    }

    HeadGradients grads;
    grads.weight.resize(layers_.size());
    grads.bias.resize(layers_.size());
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const Matrix& input = cache.inputs_[l];
        grads.weight[l] = delta.transpose() * input;
        grads.bias[l] = delta.colwise().sum().transpose();
        if (l > 0) {
            Matrix upstream = delta * layers_[l].weight;
            delta = upstream.cwiseProduct((input.array() > 0.0).cast<double>().matrix());
        }
    }
    return grads;
}

void AdamConfig::validate() const {
    require(std::isfinite(lr) && lr > 0.0, ErrorCode::kInvalidArgument, "Adam learning rate must be positive");
    require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0, ErrorCode::kInvalidArgument,
            "Adam betas must lie in (0, 1)");
    require(std::isfinite(epsilon) && epsilon > 0.0, ErrorCode::kInvalidArgument, "Adam epsilon must be positive");
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
                 std::span<double> second_moment, std::int64_t step, const AdamConfig& config) {
    require(grads.size() == params.size() && first_moment.size() == params.size() &&
                second_moment.size() == params.size(),
            ErrorCode::kInvalidArgument, "Adam buffers differ in size from the parameters");
    require(step >= 1, ErrorCode::kInvalidArgument, "Adam step index is 1-based");
    const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
    const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        first_moment[i] = config.beta1 * first_moment[i] + (1.0 - config.beta1) * grads[i];
        second_moment[i] = config.beta2 * second_moment[i] + (1.0 - config.beta2) * grads[i] * grads[i];
        const double m_hat = first_moment[i] / correction1;
        const double v_hat = second_moment[i] / correction2;
        params[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
}

AdamState::AdamState(const ProjectionHead& head, AdamConfig config) : config_(config) {
    config_.validate();
    for (const DenseLayer& layer : head.layers()) {
        weight_m_.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
        weight_v_.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
        bias_m_.push_back(Vector::Zero(layer.bias.size()));
        bias_v_.push_back(Vector::Zero(layer.bias.size()));
    }
}

void AdamState::step(ProjectionHead& head, const HeadGradients& grads) {
    const std::size_t count = weight_m_.size();
    require(head.layers().size() == count && grads.weight.size() == count && grads.bias.size() == count,
            ErrorCode::kInvalidArgument, "Adam state, head and gradients disagree on the layer count");
    for (std::size_t l = 0; l < count; ++l) {
        require(grads.weight[l].rows() == weight_m_[l].rows() && grads.weight[l].cols() == weight_m_[l].cols() &&
                    grads.bias[l].size() == bias_m_[l].size(),
                ErrorCode::kInvalidArgument, "gradient shape mismatch in layer " + std::to_string(l));
        if (!finite(as_span(grads.weight[l])) || !finite(as_span(grads.bias[l])))
            fail(ErrorCode::kNonFinite, "non-finite gradient in layer " + std::to_string(l));
    }

    ++step_;
    std::vector<DenseLayer>& layers = head.mutable_layers();
    for (std::size_t l = 0; l < count; ++l) {
        adam_update(as_span(layers[l].weight), as_span(grads.weight[l]), as_span(weight_m_[l]),
                    as_span(weight_v_[l]), step_, config_);
        adam_update(as_span(layers[l].bias), as_span(grads.bias[l]), as_span(bias_m_[l]), as_span(bias_v_[l]),
                    step_, config_);
    }
}

}  // namespace icbpl
