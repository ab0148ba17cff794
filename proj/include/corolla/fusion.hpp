#pragma once

#include <optional>
#include <string>
#include <vector>

#include "corolla/image.hpp"
#include "corolla/num/checkpoint.hpp"
#include "corolla/num/ops.hpp"
#include "corolla/rng.hpp"

namespace corolla::fusion {

// Small convolutional encoder standing in for the paper-scale backbone:
// conv 3x3 -> relu -> avgpool 2x2 per block, global average pool, then a
// fully-connected layer to the feature width.
struct EncoderConfig {
    int image_size = 64;
    int in_channels = 3;
    std::vector<int> channel_widths = {8, 16, 32};
    int kernel = 3;
    int pool = 2;
    int feature_width = 64;

    bool operator==(const EncoderConfig&) const = default;
};

template <class T>
num::Var<T> init_uniform(std::vector<size_t> shape, size_t fan_in, Pcg32& rng) {
    T bound = static_cast<T>(1.0 / std::sqrt(static_cast<double>(fan_in)));
    return num::Var<T>::leaf(
        num::random_uniform<T>(std::move(shape), -bound, bound, rng), true);
}

template <class T>
struct Encoder {
    EncoderConfig cfg;
    std::vector<num::Var<T>> kernels;  // [c_out, c_in, k, k] per block
    std::vector<num::Var<T>> biases;   // [c_out] per block
    num::Var<T> fc_w, fc_b;

    static Encoder init(const EncoderConfig& cfg, Pcg32& rng) {
        Encoder e;
        e.cfg = cfg;
        int c_in = cfg.in_channels;
        size_t k = static_cast<size_t>(cfg.kernel);
        for (int c_out : cfg.channel_widths) {
            size_t fan_in = static_cast<size_t>(c_in) * k * k;
            e.kernels.push_back(init_uniform<T>(
                {static_cast<size_t>(c_out), static_cast<size_t>(c_in), k, k},
                fan_in, rng));
            e.biases.push_back(num::Var<T>::leaf(
                num::Tensor<T>({static_cast<size_t>(c_out)}), true));
            c_in = c_out;
        }
        e.fc_w = init_uniform<T>({static_cast<size_t>(cfg.feature_width),
                                  static_cast<size_t>(c_in)},
                                 static_cast<size_t>(c_in), rng);
        e.fc_b = num::Var<T>::leaf(
            num::Tensor<T>({static_cast<size_t>(cfg.feature_width)}), true);
        return e;
    }

    // image tensor [3, h, w] -> feature [F]
    num::Var<T> forward(const num::Var<T>& image) const {
        require(image.value().rank() == 3 &&
                    image.value().shape[0] ==
                        static_cast<size_t>(cfg.in_channels) &&
                    image.value().shape[1] ==
                        static_cast<size_t>(cfg.image_size) &&
                    image.value().shape[2] == static_cast<size_t>(cfg.image_size),
                ErrorCode::shape_mismatch,
                "Encoder: image dims do not match config");
        num::Var<T> h = image;
        for (size_t b = 0; b < kernels.size(); ++b) {
            h = num::conv2d(h, kernels[b]);
            h = num::bias_channels(h, biases[b]);
            h = num::relu(h);
            h = num::avgpool(h, cfg.pool, cfg.pool);
        }
        // global average pool
        size_t c = h.value().shape[0];
        h = num::avgpool(h, h.value().shape[1], h.value().shape[2]);
        h = num::reshape(h, {c});
        return num::linear(fc_w, h, fc_b);
    }

    std::vector<num::Var<T>> params() {
        std::vector<num::Var<T>> out;
        for (size_t b = 0; b < kernels.size(); ++b) {
            out.push_back(kernels[b]);
            out.push_back(biases[b]);
        }
        out.push_back(fc_w);
        out.push_back(fc_b);
        return out;
    }

    // (name, shape) pairs; used for the branch-symmetry check and
    // checkpoint compatibility.
    std::vector<std::pair<std::string, std::vector<size_t>>> manifest() const {
        std::vector<std::pair<std::string, std::vector<size_t>>> out;
        for (size_t b = 0; b < kernels.size(); ++b) {
            out.emplace_back("block" + std::to_string(b) + ".kernel",
                             kernels[b].value().shape);
            out.emplace_back("block" + std::to_string(b) + ".bias",
                             biases[b].value().shape);
        }
        out.emplace_back("fc.weight", fc_w.value().shape);
        out.emplace_back("fc.bias", fc_b.value().shape);
        return out;
    }

    static std::vector<std::pair<std::string, std::vector<size_t>>>
    expected_manifest(const EncoderConfig& cfg) {
        std::vector<std::pair<std::string, std::vector<size_t>>> out;
        size_t c_in = static_cast<size_t>(cfg.in_channels);
        size_t k = static_cast<size_t>(cfg.kernel);
        for (size_t b = 0; b < cfg.channel_widths.size(); ++b) {
            size_t c_out = static_cast<size_t>(cfg.channel_widths[b]);
            out.emplace_back("block" + std::to_string(b) + ".kernel",
                             std::vector<size_t>{c_out, c_in, k, k});
            out.emplace_back("block" + std::to_string(b) + ".bias",
                             std::vector<size_t>{c_out});
            c_in = c_out;
        }
        out.emplace_back("fc.weight",
                         std::vector<size_t>{
                             static_cast<size_t>(cfg.feature_width), c_in});
        out.emplace_back("fc.bias", std::vector<size_t>{
                                        static_cast<size_t>(cfg.feature_width)});
        return out;
    }
};

// Two fully-connected layers with relu, then L2 normalization to the unit
// hypersphere.
template <class T>
struct ProjectionHead {
    num::Var<T> w1, b1, w2, b2;
    int out_dim = 128;

    static ProjectionHead init(int in_dim, int out_dim, Pcg32& rng) {
        ProjectionHead p;
        p.out_dim = out_dim;
        p.w1 = init_uniform<T>({static_cast<size_t>(in_dim),
                                static_cast<size_t>(in_dim)},
                               static_cast<size_t>(in_dim), rng);
        p.b1 = num::Var<T>::leaf(num::Tensor<T>({static_cast<size_t>(in_dim)}),
                                 true);
        p.w2 = init_uniform<T>({static_cast<size_t>(out_dim),
                                static_cast<size_t>(in_dim)},
                               static_cast<size_t>(in_dim), rng);
        p.b2 = num::Var<T>::leaf(num::Tensor<T>({static_cast<size_t>(out_dim)}),
                                 true);
        return p;
    }

    num::Var<T> forward(const num::Var<T>& feature) const {
        auto h = num::relu(num::linear(w1, feature, b1));
        return num::l2_normalize(num::linear(w2, h, b2), 0);
    }

    std::vector<num::Var<T>> params() { return {w1, b1, w2, b2}; }
};

template <class T>
struct ClassifierHead {
    num::Var<T> w, b;

    static ClassifierHead init(int in_dim, int classes, Pcg32& rng) {
        ClassifierHead h;
        h.w = init_uniform<T>({static_cast<size_t>(classes),
                               static_cast<size_t>(in_dim)},
                              static_cast<size_t>(in_dim), rng);
        h.b = num::Var<T>::leaf(num::Tensor<T>({static_cast<size_t>(classes)}),
                                true);
        return h;
    }

    num::Var<T> forward(const num::Var<T>& fused) const {
        return num::linear(w, fused, b);
    }

    std::vector<num::Var<T>> params() { return {w, b}; }
};

// f_F = [f_a ; f_b]; the first F entries equal f_a, the last F equal f_b.
template <class T>
num::Var<T> fuse(const num::Var<T>& f_a, const num::Var<T>& f_b) {
    require(f_a.value().rank() == 1 && f_b.value().rank() == 1 &&
                f_a.value().shape[0] == f_b.value().shape[0],
            ErrorCode::shape_mismatch,
            "fuse: branch features must be equal-width vectors");
    return num::concat<T>({f_a, f_b}, 0);
}

// -log softmax(logits)[label], evaluated through logsumexp.
template <class T>
num::Var<T> cross_entropy(const num::Var<T>& logits, int label) {
    const auto& L = logits.value();
    require(L.rank() == 1, ErrorCode::shape_mismatch,
            "cross_entropy: logits must be a vector");
    require(label >= 0 && label < static_cast<int>(L.shape[0]),
            ErrorCode::invalid_argument, "cross_entropy: label out of range");
    return num::sub(num::logsumexp(logits),
                    num::pick(logits, static_cast<size_t>(label)));
}

// Converts interleaved [0,1] float RGB to a planar [3,h,w] tensor.
template <class T>
num::Tensor<T> image_to_tensor(const ImageRGB& img) {
    num::Tensor<T> t({3, static_cast<size_t>(img.h), static_cast<size_t>(img.w)});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                t.at3(c, y, x) = static_cast<T>(img.at(y, x, c));
    return t;
}

// Checkpoint helpers. Tensors are stored under a prefix; the encoder config
// goes into the manifest metadata so loads verify architecture.
template <class T>
void save_encoder(num::Checkpoint& ck, const std::string& prefix,
                  const Encoder<T>& enc) {
    for (size_t b = 0; b < enc.kernels.size(); ++b) {
        ck.add(prefix + ".block" + std::to_string(b) + ".kernel",
               enc.kernels[b].value());
        ck.add(prefix + ".block" + std::to_string(b) + ".bias",
               enc.biases[b].value());
    }
    ck.add(prefix + ".fc.weight", enc.fc_w.value());
    ck.add(prefix + ".fc.bias", enc.fc_b.value());
    nlohmann::ordered_json arch;
    arch["image_size"] = enc.cfg.image_size;
    arch["in_channels"] = enc.cfg.in_channels;
    arch["channel_widths"] = enc.cfg.channel_widths;
    arch["kernel"] = enc.cfg.kernel;
    arch["pool"] = enc.cfg.pool;
    arch["feature_width"] = enc.cfg.feature_width;
    ck.meta[prefix] = arch;
}

template <class T>
Encoder<T> load_encoder(const num::Checkpoint& ck, const std::string& prefix) {
    require(ck.meta.contains(prefix), ErrorCode::bad_header,
            "checkpoint missing architecture metadata for " + prefix);
    const auto& arch = ck.meta[prefix];
    EncoderConfig cfg;
    cfg.image_size = arch.at("image_size").get<int>();
    cfg.in_channels = arch.at("in_channels").get<int>();
    cfg.channel_widths = arch.at("channel_widths").get<std::vector<int>>();
    cfg.kernel = arch.at("kernel").get<int>();
    cfg.pool = arch.at("pool").get<int>();
    cfg.feature_width = arch.at("feature_width").get<int>();

    Encoder<T> enc;
    enc.cfg = cfg;
    for (size_t b = 0; b < cfg.channel_widths.size(); ++b) {
        enc.kernels.push_back(num::Var<T>::leaf(
            ck.get<T>(prefix + ".block" + std::to_string(b) + ".kernel"), true));
        enc.biases.push_back(num::Var<T>::leaf(
            ck.get<T>(prefix + ".block" + std::to_string(b) + ".bias"), true));
    }
    enc.fc_w = num::Var<T>::leaf(ck.get<T>(prefix + ".fc.weight"), true);
    enc.fc_b = num::Var<T>::leaf(ck.get<T>(prefix + ".fc.bias"), true);

    auto expect = Encoder<T>::expected_manifest(cfg);
    auto got = enc.manifest();
    require(expect.size() == got.size(), ErrorCode::bad_header,
            "checkpoint encoder shape manifest mismatch");
    for (size_t i = 0; i < expect.size(); ++i)
        require(expect[i].second == got[i].second, ErrorCode::bad_header,
                "checkpoint tensor shape mismatch for " + prefix + "." +
                    expect[i].first);
    return enc;
}

template <class T>
void save_projection(num::Checkpoint& ck, const std::string& prefix,
                     const ProjectionHead<T>& p) {
    ck.add(prefix + ".w1", p.w1.value());
    ck.add(prefix + ".b1", p.b1.value());
    ck.add(prefix + ".w2", p.w2.value());
    ck.add(prefix + ".b2", p.b2.value());
    ck.meta[prefix] = {{"out_dim", p.out_dim}};
}

template <class T>
ProjectionHead<T> load_projection(const num::Checkpoint& ck,
                                  const std::string& prefix) {
    ProjectionHead<T> p;
    p.w1 = num::Var<T>::leaf(ck.get<T>(prefix + ".w1"), true);
    p.b1 = num::Var<T>::leaf(ck.get<T>(prefix + ".b1"), true);
    p.w2 = num::Var<T>::leaf(ck.get<T>(prefix + ".w2"), true);
    p.b2 = num::Var<T>::leaf(ck.get<T>(prefix + ".b2"), true);
    if (ck.meta.contains(prefix))
        p.out_dim = ck.meta[prefix].value("out_dim", 128);
    return p;
}

}  // namespace corolla::fusion
