#pragma once

#include <cmath>

#include "corolla/num/autodiff.hpp"

namespace corolla::num {

// Bias-corrected Adam over a fixed parameter list.
template <class T>
struct AdamState {
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
    long step = 0;
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);

    static AdamState init(const std::vector<Var<T>>& params) {
        AdamState st;
        for (const auto& p : params) {
            st.m.emplace_back(p.value().shape);
            st.v.emplace_back(p.value().shape);
        }
        return st;
    }
};

// One update. Parameters without an accumulated gradient are treated as
// having gradient zero (moments still decay, step still counts).
template <class T>
void adam_step(std::vector<Var<T>>& params, AdamState<T>& st, T lr) {
    require(params.size() == st.m.size(), ErrorCode::shape_mismatch,
            "adam_step: parameter count changed");
    st.step += 1;
    T bc1 = T(1) - std::pow(st.beta1, static_cast<T>(st.step));
    T bc2 = T(1) - std::pow(st.beta2, static_cast<T>(st.step));
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi].value();
        require(st.m[pi].same_shape(p), ErrorCode::shape_mismatch,
                "adam_step: moment/parameter shape mismatch");
        const Tensor<T>* g = params[pi].has_grad() ? &params[pi].grad() : nullptr;
        if (g)
            require(g->same_shape(p), ErrorCode::shape_mismatch,
                    "adam_step: gradient shape mismatch");
        for (size_t i = 0; i < p.data.size(); ++i) {
            T gi = g ? g->data[i] : T(0);
            st.m[pi].data[i] = st.beta1 * st.m[pi].data[i] + (T(1) - st.beta1) * gi;
            st.v[pi].data[i] =
                st.beta2 * st.v[pi].data[i] + (T(1) - st.beta2) * gi * gi;
            T mhat = st.m[pi].data[i] / bc1;
            T vhat = st.v[pi].data[i] / bc2;
            p.data[i] -= lr * mhat / (std::sqrt(vhat) + st.eps);
        }
    }
}

// lr0 * (1 + cos(pi * step / total)) / 2.
inline double cosine_lr(long step, long total_steps, double lr0) {
    require(total_steps > 0, ErrorCode::invalid_argument,
            "cosine_lr: total_steps must be positive");
    require(step >= 0 && step <= total_steps, ErrorCode::invalid_argument,
            "cosine_lr: step out of range");
    return lr0 * (1.0 + std::cos(3.14159265358979323846 *
                                 static_cast<double>(step) /
                                 static_cast<double>(total_steps))) /
           2.0;
}

}  // namespace corolla::num
