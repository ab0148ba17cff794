#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "corolla/image.hpp"
#include "corolla/num/ops.hpp"
#include "corolla/rng.hpp"

namespace corolla::supcon {

enum class Branch { fundus, thickness };

enum class Reduction { sum, mean };

// Anchors whose positive set is empty are skipped by default; strict mode
// turns them into errors.
struct ContrastiveConfig {
    double temperature = 0.05;
    bool strict_empty_positives = false;
    Reduction reduction = Reduction::sum;
};

// 2n embedding rows: each source sample contributes an anchor view and its
// augmented sibling. pairing[i] names the sibling view of row i.
template <class T>
struct EmbeddingBatch {
    num::Var<T> z;  // [2n x d], unit-norm rows
    std::vector<int> labels;
    std::vector<int> pairing;

    int size() const { return static_cast<int>(labels.size()); }

    void validate() const {
        const auto& Z = z.value();
        require(Z.rank() == 2, ErrorCode::shape_mismatch,
                "EmbeddingBatch: z must be [n x d]");
        int n = static_cast<int>(Z.shape[0]);
        require(n >= 2, ErrorCode::invalid_argument,
                "EmbeddingBatch: need at least 2 rows");
        require(static_cast<int>(labels.size()) == n &&
                    static_cast<int>(pairing.size()) == n,
                ErrorCode::shape_mismatch,
                "EmbeddingBatch: labels/pairing length mismatch");
        for (int i = 0; i < n; ++i) {
            int j = pairing[i];
            require(j >= 0 && j < n && j != i && pairing[j] == i,
                    ErrorCode::validation,
                    "EmbeddingBatch: pairing must be a fixed-point-free "
                    "involution");
            require(labels[i] == labels[j], ErrorCode::validation,
                    "EmbeddingBatch: paired views must share a label");
        }
        if (num::debug_checks()) {
            size_t d = Z.shape[1];
            for (int i = 0; i < n; ++i) {
                double ss = 0.0;
                for (size_t c = 0; c < d; ++c) {
                    double v = static_cast<double>(Z.at2(i, c));
                    ss += v * v;
                }
                require(std::abs(std::sqrt(ss) - 1.0) <= 1e-6,
                        ErrorCode::numeric,
                        "EmbeddingBatch: row " + std::to_string(i) +
                            " is not unit-norm");
            }
        }
    }
};

// P(i): all other indices sharing labels[i].
inline std::vector<int> positive_set(const std::vector<int>& labels, int i) {
    require(i >= 0 && i < static_cast<int>(labels.size()),
            ErrorCode::invalid_argument, "positive_set: index out of range");
    std::vector<int> out;
    for (int p = 0; p < static_cast<int>(labels.size()); ++p)
        if (p != i && labels[p] == labels[i]) out.push_back(p);
    return out;
}

template <class T>
struct LossResult {
    num::Var<T> loss;
    int skipped_anchors = 0;
    double mean_positive_similarity = 0.0;
};

namespace detail {

// Shared kernel: L = reduce_i (-1/|P(i)|) sum_{p in P(i)}
//   [ s(i,p) - logsumexp_{a != i} s(i,a) ],  s = z zᵀ / temperature.
// The self loss is this kernel with P(i) = {pairing[i]}, which makes the
// Eq.-reduction identity hold bitwise.
template <class T>
LossResult<T> contrastive_kernel(const EmbeddingBatch<T>& batch,
                                 const std::vector<std::vector<int>>& positives,
                                 const ContrastiveConfig& cfg,
                                 const char* name) {
    batch.validate();
    require(cfg.temperature > 0.0, ErrorCode::invalid_argument,
            "contrastive loss: temperature must be positive");
    const auto& Z = batch.z.value();
    const int n = static_cast<int>(Z.shape[0]);
    const size_t d = Z.shape[1];
    const T inv_tau = static_cast<T>(1.0 / cfg.temperature);

    // Row-wise logits on demand; n is small (2 * batch size).
    std::vector<T> logits(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) {
            T acc = T(0);
            for (size_t c = 0; c < d; ++c) acc += Z.at2(i, c) * Z.at2(a, c);
            logits[static_cast<size_t>(i) * n + a] = acc * inv_tau;
        }

    int included = 0, skipped = 0;
    double pos_sim_acc = 0.0;
    long pos_sim_count = 0;
    std::vector<T> lse(n, T(0));
    T total = T(0);
    for (int i = 0; i < n; ++i) {
        const auto& P = positives[i];
        if (P.empty()) {
            require(!cfg.strict_empty_positives, ErrorCode::degenerate_batch,
                    std::string(name) + ": anchor " + std::to_string(i) +
                        " has no positives (strict mode)");
            ++skipped;
            continue;
        }
        T m = std::numeric_limits<T>::lowest();
        for (int a = 0; a < n; ++a)
            if (a != i) m = std::max(m, logits[static_cast<size_t>(i) * n + a]);
        T s = T(0);
        for (int a = 0; a < n; ++a)
            if (a != i)
                s += std::exp(logits[static_cast<size_t>(i) * n + a] - m);
        lse[i] = m + std::log(s);
        T inv_p = T(1) / static_cast<T>(P.size());
        T anchor_loss = T(0);
        for (int p : P) {
            anchor_loss -= (logits[static_cast<size_t>(i) * n + p] - lse[i]) * inv_p;
            pos_sim_acc += static_cast<double>(
                logits[static_cast<size_t>(i) * n + p] / inv_tau);
            ++pos_sim_count;
        }
        total += anchor_loss;
        ++included;
    }
    require(included > 0, ErrorCode::degenerate_batch,
            std::string(name) + ": every anchor had an empty positive set");
    T red = cfg.reduction == Reduction::mean ? static_cast<T>(included) : T(1);
    total /= red;

    auto out = num::make_op<T>(
        name, num::Tensor<T>::scalar(total), {batch.z},
        [positives, logits, lse, n, d, inv_tau, red](num::Node<T>& node) {
            if (!node.parents[0]->requires_grad) return;
            const auto& Z = node.parents[0]->value;
            T g0 = node.grad[0] / red;
            // dL/ds, zero diagonal.
            std::vector<T> gs(static_cast<size_t>(n) * n, T(0));
            for (int i = 0; i < n; ++i) {
                const auto& P = positives[i];
                if (P.empty()) continue;
                T inv_p = T(1) / static_cast<T>(P.size());
                for (int a = 0; a < n; ++a) {
                    if (a == i) continue;
                    gs[static_cast<size_t>(i) * n + a] =
                        std::exp(logits[static_cast<size_t>(i) * n + a] - lse[i]);
                }
                for (int p : P) gs[static_cast<size_t>(i) * n + p] -= inv_p;
            }
            // s = z zᵀ / tau  =>  dz = (G + Gᵀ) z / tau.
            num::Tensor<T> dz(Z.shape);
            for (int i = 0; i < n; ++i)
                for (size_t c = 0; c < d; ++c) {
                    T acc = T(0);
                    for (int a = 0; a < n; ++a)
                        acc += (gs[static_cast<size_t>(i) * n + a] +
                                gs[static_cast<size_t>(a) * n + i]) *
                               Z.at2(a, c);
                    dz.at2(i, c) = acc * inv_tau * g0;
                }
            node.parents[0]->accumulate(dz);
        });

    LossResult<T> res;
    res.loss = out;
    res.skipped_anchors = skipped;
    res.mean_positive_similarity =
        pos_sim_count > 0 ? pos_sim_acc / pos_sim_count : 0.0;
    return res;
}

}  // namespace detail

// Positive is the paired augmented view only.
template <class T>
LossResult<T> self_contrastive_loss(const EmbeddingBatch<T>& batch,
                                    const ContrastiveConfig& cfg = {}) {
    std::vector<std::vector<int>> positives(batch.size());
    for (int i = 0; i < batch.size(); ++i) positives[i] = {batch.pairing[i]};
    return detail::contrastive_kernel(batch, positives, cfg,
                                      "self_contrastive_loss");
}

// Positives are all same-label rows.
template <class T>
LossResult<T> sup_contrastive_loss(const EmbeddingBatch<T>& batch,
                                   const ContrastiveConfig& cfg = {}) {
    std::vector<std::vector<int>> positives(batch.size());
    for (int i = 0; i < batch.size(); ++i)
        positives[i] = positive_set(batch.labels, i);
    return detail::contrastive_kernel(batch, positives, cfg,
                                      "sup_contrastive_loss");
}

// View-generation pipeline, applied in fixed order:
// color jitter -> grayscale -> center crop (resized back) -> horizontal flip.
// Jitter and grayscale apply to the fundus branch only.
struct AugmentationSpec {
    Branch branch = Branch::fundus;
    double jitter_strength = 0.4;
    double grayscale_prob = 0.2;
    double crop_scale_lo = 0.7;
    double crop_scale_hi = 1.0;
    double flip_prob = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        require(jitter_strength >= 0.0 && jitter_strength < 1.0,
                ErrorCode::validation, "augment: jitter strength in [0,1)");
        require(grayscale_prob >= 0.0 && grayscale_prob <= 1.0 &&
                    flip_prob >= 0.0 && flip_prob <= 1.0,
                ErrorCode::validation, "augment: probabilities in [0,1]");
        require(crop_scale_lo > 0.0 && crop_scale_lo <= crop_scale_hi &&
                    crop_scale_hi <= 1.0,
                ErrorCode::validation, "augment: crop scale range in (0,1]");
    }
};

ImageRGB augment(const ImageRGB& img, const AugmentationSpec& spec, Pcg32& rng);

// Corner-aligned bilinear resize for float RGB images.
ImageRGB resize_image(const ImageRGB& img, int out_h, int out_w);

}  // namespace corolla::supcon
