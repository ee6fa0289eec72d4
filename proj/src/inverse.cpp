#include "foj/inverse.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <stdexcept>

#include "foj/errors.hpp"
#include "foj/kernels.hpp"

namespace foj {

namespace {

Volume make_volume(std::array<int, 3> dims) {
    return Volume(dims[0], dims[1], dims[2]);
}

void check_dims(const Volume& v, std::array<int, 3> dims, const char* what) {
    if (v.D != dims[0] || v.H != dims[1] || v.W != dims[2])
        throw std::invalid_argument(std::string(what) + ": dims mismatch");
}

double norm2(const Volume& v) {
    return std::sqrt(kernels::active().dot(v.data.data(), v.data.data(),
                                           v.data.size()));
}

}  // namespace

Volume IdentityOperator::forward(const Volume& x) const {
    check_dims(x, dims_, "identity forward");
    return x;
}

Volume IdentityOperator::adjoint(const Volume& y) const {
    check_dims(y, dims_, "identity adjoint");
    return y;
}

DenseOperator::DenseOperator(std::vector<double> matrix, std::array<int, 3> in,
                             std::array<int, 3> out)
    : mat_(std::move(matrix)), in_(in), out_(out) {
    rows_ = static_cast<std::size_t>(out[0]) * out[1] * out[2];
    cols_ = static_cast<std::size_t>(in[0]) * in[1] * in[2];
    if (mat_.size() != rows_ * cols_)
        throw std::invalid_argument("dense operator: matrix size mismatch");
}

Volume DenseOperator::forward(const Volume& x) const {
    check_dims(x, in_, "dense forward");
    Volume y = make_volume(out_);
    for (std::size_t r = 0; r < rows_; ++r)
        y.data[r] = kernels::active().dot(&mat_[r * cols_], x.data.data(), cols_);
    return y;
}

Volume DenseOperator::adjoint(const Volume& y) const {
    check_dims(y, out_, "dense adjoint");
    Volume x = make_volume(in_);
    for (std::size_t r = 0; r < rows_; ++r) {
        const double yr = y.data[r];
        if (yr == 0.0) continue;
        const double* row = &mat_[r * cols_];
        for (std::size_t c = 0; c < cols_; ++c) x.data[c] += row[c] * yr;
    }
    return x;
}

void PgdConfig::validate() const {
    if (lambda < 0.0) throw std::invalid_argument("pgd lambda must be >= 0");
    if (n_outer < 0) throw std::invalid_argument("pgd n_outer must be >= 0");
    foj.validate();
}

Volume data_gradient(const LinearOperator& A, const Volume& x, const Volume& b) {
    check_dims(x, A.in_dims(), "data_gradient x");
    check_dims(b, A.out_dims(), "data_gradient b");
    Volume r = A.forward(x);
    kernels::active().axpby(1.0, r.data.data(), -1.0, b.data.data(),
                            r.data.data(), r.data.size());
    return A.adjoint(r);
}

double operator_norm_sq(const LinearOperator& A, int n_iter, std::uint64_t seed) {
    Volume v = make_volume(A.in_dims());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (auto& x : v.data) x = uni(rng);
    double est = 0.0;
    for (int it = 0; it < n_iter; ++it) {
        const double n = norm2(v);
        if (n == 0.0) return 0.0;
        for (auto& x : v.data) x /= n;
        Volume av = A.forward(v);
        est = kernels::active().dot(av.data.data(), av.data.data(),
                                    av.data.size());
        v = A.adjoint(av);
    }
    return est;
}

Volume prox_foj(const Volume& x_half, double lambda, const SolverConfig& foj_cfg,
                ProxState& state, bool warm_start) {
    foj_cfg.validate();
    if (x_half.D < foj_cfg.patch_size || x_half.H < foj_cfg.patch_size ||
        x_half.W < foj_cfg.patch_size)
        throw std::invalid_argument("prox_foj: volume smaller than patch");

    const bool fresh = !(warm_start && state.valid);
    if (fresh) {
        state.grid = build_patch_grid({x_half.D, x_half.H, x_half.W},
                                      foj_cfg.patch_size, foj_cfg.stride);
        state.solver = make_solver_state(state.grid, foj_cfg);
    }
    init_all(state.solver, x_half, state.grid, foj_cfg, fresh);
    refine(state.solver, x_half, state.grid, foj_cfg, foj_cfg.n_refine, nullptr);
    if (foj_cfg.n_refine == 0)
        compute_global_fields(state.solver.field, state.grid, foj_cfg.eta,
                              foj_cfg.delta);
    state.valid = true;

    const Volume& vhat = state.solver.field.global_color;
    Volume out = x_half;
    const double w = 2.0 * lambda;
    kernels::active().axpby(1.0 / (1.0 + w), x_half.data.data(), w / (1.0 + w),
                            vhat.data.data(), out.data.data(), out.size());
    return out;
}

PgdResult reconstruct_pgd(const LinearOperator& A, const Volume& b,
                          const PgdConfig& cfg) {
    cfg.validate();
    check_dims(b, A.out_dims(), "reconstruct_pgd b");

    PgdResult res;
    res.op_norm_sq_estimate = operator_norm_sq(A, 20, cfg.foj.seed + 7919);
    res.lambda_used = cfg.lambda > 0.0
                          ? cfg.lambda
                          : (res.op_norm_sq_estimate > 0.0
                                 ? 1.0 / res.op_norm_sq_estimate
                                 : 1.0);
    if (res.op_norm_sq_estimate > 0.0 &&
        res.lambda_used > 2.0 / res.op_norm_sq_estimate) {
        res.step_warning = true;
        std::cerr << "warning: pgd step " << res.lambda_used
                  << " exceeds stability bound "
                  << 2.0 / res.op_norm_sq_estimate << "\n";
    }

    // x0 = adjoint(b), normalized into [0, 1].
    Volume x = A.adjoint(b);
    const double mn = x.min_value(), mx = x.max_value();
    if (mx > mn) {
        const double scale = 1.0 / (mx - mn);
        for (auto& v : x.data) v = (v - mn) * scale;
    } else {
        for (auto& v : x.data) v = 0.0;
    }
    x.spacing = {b.spacing[0], b.spacing[1], b.spacing[2]};

    ProxState prox_state;
    const double lam = res.lambda_used;
    for (int k = 1; k <= cfg.n_outer; ++k) {
        Volume g = data_gradient(A, x, b);
        kernels::active().axpby(1.0, x.data.data(), -lam, g.data.data(),
                                x.data.data(), x.size());
        x = prox_foj(x, lam, cfg.foj, prox_state, cfg.warm_start);
        if (!x.all_finite())
            throw NumericError("reconstruct_pgd: non-finite iterate at outer " +
                               std::to_string(k));
        Volume r = A.forward(x);
        kernels::active().axpby(1.0, r.data.data(), -1.0, b.data.data(),
                                r.data.data(), r.size());
        res.residual_trace.push_back(norm2(r));
    }
    res.x = std::move(x);
    return res;
}

CglsResult reconstruct_lsq(const LinearOperator& A, const Volume& b, int n_iter) {
    if (n_iter < 1) throw std::invalid_argument("reconstruct_lsq: n_iter >= 1");
    check_dims(b, A.out_dims(), "reconstruct_lsq b");
    const auto& k = kernels::active();

    CglsResult res;
    Volume x = make_volume(A.in_dims());
    x.spacing = b.spacing;
    Volume r = b;
    Volume s = A.adjoint(r);
    Volume p = s;
    double gamma = k.dot(s.data.data(), s.data.data(), s.size());

    for (int it = 0; it < n_iter; ++it) {
        Volume q = A.forward(p);
        const double qq = k.dot(q.data.data(), q.data.data(), q.size());
        if (qq <= 0.0 || !std::isfinite(qq)) {
            res.breakdown = true;  // return current iterate
            break;
        }
        const double alpha = gamma / qq;
        k.axpby(1.0, x.data.data(), alpha, p.data.data(), x.data.data(), x.size());
        k.axpby(1.0, r.data.data(), -alpha, q.data.data(), r.data.data(), r.size());
        res.residual_trace.push_back(norm2(r));
        s = A.adjoint(r);
        const double gamma_new = k.dot(s.data.data(), s.data.data(), s.size());
        if (gamma_new <= 0.0 || !std::isfinite(gamma_new)) {
            if (!std::isfinite(gamma_new)) res.breakdown = true;
            break;
        }
        const double beta = gamma_new / gamma;
        gamma = gamma_new;
        k.axpby(1.0, s.data.data(), beta, p.data.data(), p.data.data(), p.size());
    }
    res.x = std::move(x);
    return res;
}

void write_residual_trace_csv(const std::string& path,
                              const std::vector<double>& trace) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << "iter,residual_l2\n";
    f.precision(17);
    for (std::size_t i = 0; i < trace.size(); ++i)
        f << (i + 1) << ',' << trace[i] << "\n";
}

}  // namespace foj
