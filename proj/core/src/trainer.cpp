#include "icbpl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "icbpl/metrics.hpp"

namespace icbpl {

namespace {

Matrix normalized_rows(Matrix m) {
    for (Index r = 0; r < m.rows(); ++r) {
        const double norm = m.row(r).norm();
        if (norm > 0.0) m.row(r) /= norm;
    }
    return m;
}

}  // namespace

Matrix noise_augment(const Matrix& x, double noise_std, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, noise_std);
    Matrix out = x;
    for (Index r = 0; r < out.rows(); ++r) {
        const double norm = x.row(r).norm();
        for (Index c = 0; c < out.cols(); ++c) out(r, c) += normal(rng);
        const double noisy_norm = out.row(r).norm();
        if (noisy_norm > 0.0) out.row(r) *= norm / noisy_norm;
    }
    return out;
}

void TrainConfig::validate() const {
    require(clusters >= 2, ErrorCode::kInvalidArgument, "clusters must be at least 2");
    require(latent_dim >= clusters - 1, ErrorCode::kInvalidArgument,
            "latent_dim " + std::to_string(latent_dim) + " cannot hold " + std::to_string(clusters) +
                " equidistant centers (needs >= clusters - 1)");
    for (int h : hidden_dims) require(h >= 1, ErrorCode::kInvalidArgument, "hidden layer widths must be positive");
    weights.validate();
    require(neighbor_count >= 0, ErrorCode::kInvalidArgument, "neighbor_count must be non-negative");
    require(refresh_period >= 1, ErrorCode::kInvalidArgument, "refresh_period must be positive");
    require(batch_size >= 2, ErrorCode::kInvalidArgument, "batch_size must be at least 2");
    require(max_epochs >= 1, ErrorCode::kInvalidArgument, "max_epochs must be positive");
    require(std::isfinite(lr) && lr > 0.0, ErrorCode::kInvalidArgument, "lr must be positive");
    require(std::isfinite(noise_std) && noise_std > 0.0, ErrorCode::kInvalidArgument, "noise_std must be positive");
    require(stability_patience >= 1, ErrorCode::kInvalidArgument, "stability_patience must be positive");
    require(stability_threshold >= 0.0 && stability_threshold <= 1.0, ErrorCode::kInvalidArgument,
            "stability_threshold must lie in [0, 1]");
}

std::vector<int> head_layout(const TrainConfig& config, Index input_dim) {
    std::vector<int> dims{static_cast<int>(input_dim)};
    dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
    dims.push_back(config.latent_dim);
    return dims;
}

ClusterAssignment assign_latents(const Matrix& latents, const PedccSet& pedcc) {
    ClusterAssignment out;
    out.counts.assign(static_cast<std::size_t>(pedcc.num_centers()), 0);
    for (const CenterMatch& match : nearest_centers(latents, pedcc)) {
        out.labels.push_back(match.index);
        out.scores.push_back(match.cosine);
        ++out.counts[static_cast<std::size_t>(match.index)];
    }
    return out;
}

ClusterAssignment assign(const EmbeddingDataset& dataset, const ProjectionHead& head, const PedccSet& pedcc) {
    dataset.validate();
    require(dataset.dim() == head.input_dim(), ErrorCode::kInvalidArgument,
            "embeddings have dimension " + std::to_string(dataset.dim()) + ", head expects " +
                std::to_string(head.input_dim()));
    require(head.latent_dim() == pedcc.dim(), ErrorCode::kInvalidArgument,
            "head latent dimension does not match the PEDCC dimension");
    return assign_latents(head.infer(dataset.data_as_double()), pedcc);
}

TrainResult train(const EmbeddingDataset& dataset, const TrainConfig& config, const EpochObserver& observer) {
    using Clock = std::chrono::steady_clock;

    dataset.validate();
    config.validate();
    const Index n = dataset.size();
    const Index m = config.neighbor_count;
    require(m == 0 || n > m, ErrorCode::kInvalidArgument,
            "dataset of " + std::to_string(n) + " samples is too small for " + std::to_string(m) + " neighbors");
    if (config.augmentation == AugmentationMode::kViews)
        require(dataset.num_views() >= 1, ErrorCode::kInvalidArgument,
                "augmentation mode 'views' needs at least one stored view");

    std::mt19937_64 rng(config.seed);
    PedccSet pedcc = generate_pedcc(config.clusters, config.latent_dim);
    ProjectionHead head(head_layout(config, dataset.dim()), rng());
    AdamState adam(head, AdamConfig{config.lr});

    const Matrix inputs = dataset.data_as_double();
    std::optional<NeighborTable> table;
    TrainReport report;
    std::vector<int> previous = assign_latents(head.infer(inputs), pedcc).labels;
    int stable_epochs = 0;

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::vector<Index> view_choice(static_cast<std::size_t>(n), 0);

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        const auto started = Clock::now();
        EpochRecord record;
        record.epoch = epoch;

        if (m > 0 && refresh_due(epoch, config.refresh_period)) {
            // The first table comes from the input embeddings, later ones
            // from the current latents.
            const Matrix features = epoch == 0 ? (config.metric == Metric::kCosine ? normalized_rows(inputs) : inputs)
                                               : head.infer(inputs);
            table = build_neighbors(features, static_cast<int>(m), config.metric, epoch);
            record.neighbors_refreshed = true;
            report.refresh_epochs.push_back(epoch);
        }

        if (config.augmentation == AugmentationMode::kViews) {
            std::uniform_int_distribution<Index> pick(0, dataset.num_views() - 1);
            for (Index& v : view_choice) v = pick(rng);
        }
        std::iota(order.begin(), order.end(), Index{0});
        std::shuffle(order.begin(), order.end(), rng);

        std::optional<double> sigma;
        if (!config.kernel.is_median()) sigma = config.kernel.sigma();
        LossTerms sums;
        int batches = 0;

        for (Index start = 0; start < n; start += config.batch_size) {
            const Index size = std::min<Index>(config.batch_size, n - start);
            const std::vector<Index> idx(order.begin() + start, order.begin() + start + size);

            Matrix stacked(size * (2 + m), dataset.dim());
            stacked.topRows(size) = inputs(idx, Eigen::all);
            if (config.augmentation == AugmentationMode::kViews) {
                for (Index r = 0; r < size; ++r) {
                    const auto& view = dataset.views[static_cast<std::size_t>(view_choice[idx[r]])];
                    stacked.row(size + r) = view.row(idx[r]).cast<double>();
                }
            } else {
                stacked.middleRows(size, size) = noise_augment(stacked.topRows(size), config.noise_std, rng);
            }
            for (Index r = 0; r < size && m > 0; ++r) {
                const auto neighbors = table->row(idx[r]);
                for (Index j = 0; j < m; ++j) stacked.row(2 * size + r * m + j) = inputs.row(neighbors[j]);
            }

            const ForwardCache cache = head.forward(stacked);
            const Matrix& latents = cache.latents();
            if (!latents.allFinite())
                throw TrainingDiverged("non-finite latents at epoch " + std::to_string(epoch), head, pedcc, report);
            LatentBatch batch{latents.topRows(size), latents.middleRows(size, size), latents.bottomRows(size * m), m};
            if (!sigma) {
                Matrix pair_rows(2 * size, latents.cols());
                pair_rows << batch.z, batch.z_aug;
                sigma = median_pairwise_distance(pair_rows);
            }

            const LossEvaluation eval =
                combined_loss(batch, pedcc, config.weights, KernelConfig::fixed(*sigma), config.metric);
            if (!std::isfinite(eval.terms.total))
                throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch), head, pedcc, report);

            Matrix grad(stacked.rows(), latents.cols());
            grad << eval.grad_z, eval.grad_z_aug, eval.grad_z_nbr;
            try {
                adam.step(head, head.backward(cache, grad));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::kNonFinite) throw;
                throw TrainingDiverged(std::string(e.what()) + " at epoch " + std::to_string(epoch), head, pedcc,
                                       report);
            }

            sums.loss1 += eval.terms.loss1;
            sums.loss2 += eval.terms.loss2;
            sums.loss3 += eval.terms.loss3;
            sums.loss4 += eval.terms.loss4;
            sums.total += eval.terms.total;
            ++batches;
        }

        const double inv = 1.0 / static_cast<double>(batches);
        record.loss = {sums.loss1 * inv, sums.loss2 * inv, sums.loss3 * inv, sums.loss4 * inv, sums.total * inv};
        record.sigma = *sigma;

        const std::vector<int> labels = assign_latents(head.infer(inputs), pedcc).labels;
        std::size_t changed = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) changed += labels[i] != previous[i];
        record.changed_fraction = static_cast<double>(changed) / static_cast<double>(n);
        previous = labels;

        record.seconds = std::chrono::duration<double>(Clock::now() - started).count();
        report.epochs.push_back(record);
        if (observer) observer(record);

        stable_epochs = record.changed_fraction < config.stability_threshold ? stable_epochs + 1 : 0;
        if (stable_epochs >= config.stability_patience) {
            report.early_stopped = true;
            break;
        }
    }

    ClusterAssignment assignment = assign_latents(head.infer(inputs), pedcc);
    if (dataset.labels) {
        const int k = std::max(config.clusters, *std::max_element(dataset.labels->begin(), dataset.labels->end()) + 1);
        const LabelPair pair{assignment.labels, *dataset.labels};
        report.acc = cluster_accuracy(pair, k);
        report.nmi = nmi(pair);
    }
    return TrainResult{std::move(head), std::move(pedcc), std::move(report), std::move(assignment)};
}

}  // namespace icbpl
