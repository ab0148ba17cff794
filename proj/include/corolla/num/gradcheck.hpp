#pragma once

#include <functional>

#include "corolla/num/autodiff.hpp"

namespace corolla::num {

struct GradCheckReport {
    double max_rel_err = 0.0;
    size_t worst_index = 0;
    bool pass = true;
};

// Central finite differences against the reverse-mode gradient of a scalar
// function. Relative error uses denominator max(|analytic|, |numeric|, 1),
// so components below 1 are effectively checked absolutely.
template <class T>
GradCheckReport grad_check(const std::function<Var<T>(const Var<T>&)>& f,
                           const Tensor<T>& x, double h = 1e-5,
                           double tol = 1e-5) {
    Var<T> leaf = Var<T>::leaf(x, true);
    Var<T> y = f(leaf);
    require(y.value().numel() == 1, ErrorCode::invalid_argument,
            "grad_check: f must be scalar-valued");
    require(std::isfinite(static_cast<double>(y.value()[0])),
            ErrorCode::numeric, "grad_check: non-finite f(x)");
    backward(y);
    Tensor<T> analytic =
        leaf.has_grad() ? leaf.grad() : Tensor<T>(x.shape, T(0));

    auto eval = [&](const Tensor<T>& at) {
        Var<T> v = Var<T>::leaf(at, false);
        T out = f(v).value()[0];
        require(std::isfinite(static_cast<double>(out)), ErrorCode::numeric,
                "grad_check: non-finite f during differencing");
        return static_cast<double>(out);
    };

    GradCheckReport rep;
    Tensor<T> probe = x;
    for (size_t i = 0; i < x.numel(); ++i) {
        T orig = probe.data[i];
        probe.data[i] = orig + static_cast<T>(h);
        double fp = eval(probe);
        probe.data[i] = orig - static_cast<T>(h);
        double fm = eval(probe);
        probe.data[i] = orig;
        double numeric = (fp - fm) / (2.0 * h);
        double a = static_cast<double>(analytic.data[i]);
        double denom = std::max({std::abs(a), std::abs(numeric), 1.0});
        double err = std::abs(a - numeric) / denom;
        if (err > rep.max_rel_err) {
            rep.max_rel_err = err;
            rep.worst_index = i;
        }
    }
    rep.pass = rep.max_rel_err <= tol;
    return rep;
}

}  // namespace corolla::num
