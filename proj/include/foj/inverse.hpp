#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "foj/solver.hpp"
#include "foj/tomo.hpp"
#include "foj/volume.hpp"

namespace foj {

// Behavioral contract for a linear forward map A. Implementations must be
// safe for concurrent read-only use and must satisfy the adjoint identity
// <forward(x), y> = <x, adjoint(y)> to the tolerance the tests pin.
class LinearOperator {
public:
    virtual ~LinearOperator() = default;
    virtual Volume forward(const Volume& x) const = 0;
    virtual Volume adjoint(const Volume& y) const = 0;
    virtual std::array<int, 3> in_dims() const = 0;
    virtual std::array<int, 3> out_dims() const = 0;
};

class IdentityOperator final : public LinearOperator {
public:
    explicit IdentityOperator(std::array<int, 3> dims) : dims_(dims) {}
    Volume forward(const Volume& x) const override;
    Volume adjoint(const Volume& y) const override;
    std::array<int, 3> in_dims() const override { return dims_; }
    std::array<int, 3> out_dims() const override { return dims_; }

private:
    std::array<int, 3> dims_;
};

// Dense row-major matrix operator over flattened volumes; test- and
// toy-problem sized.
class DenseOperator final : public LinearOperator {
public:
    DenseOperator(std::vector<double> matrix, std::array<int, 3> in,
                  std::array<int, 3> out);
    Volume forward(const Volume& x) const override;
    Volume adjoint(const Volume& y) const override;
    std::array<int, 3> in_dims() const override { return in_; }
    std::array<int, 3> out_dims() const override { return out_; }
    const std::vector<double>& matrix() const { return mat_; }

private:
    std::vector<double> mat_;
    std::array<int, 3> in_, out_;
    std::size_t rows_, cols_;
};

// The parallel-beam projector as a LinearOperator.
class ProjectorOperator final : public LinearOperator {
public:
    explicit ProjectorOperator(ProjectorGeometry geom) : geom_(std::move(geom)) {
        geom_.validate();
    }
    Volume forward(const Volume& x) const override { return project(geom_, x); }
    Volume adjoint(const Volume& y) const override { return backproject(geom_, y); }
    std::array<int, 3> in_dims() const override { return geom_.vol_dims; }
    std::array<int, 3> out_dims() const override {
        return {static_cast<int>(geom_.angles.size()), geom_.det_rows,
                geom_.det_cols};
    }
    const ProjectorGeometry& geometry() const { return geom_; }

private:
    ProjectorGeometry geom_;
};

struct PgdConfig {
    double lambda = 0.0;  // 0 = auto: 1 / ||A||^2 from the power-method estimate
    int n_outer = 15;
    bool warm_start = true;
    SolverConfig foj;  // the proximal fit; n_init = n_refine = 1 by default

    PgdConfig() {
        foj.n_init = 1;
        foj.n_refine = 1;
    }
    void validate() const;
};

// grad f(x) = A^T (A x - b)
Volume data_gradient(const LinearOperator& A, const Volume& x, const Volume& b);

// Junction state carried across proximal steps when warm-starting.
struct ProxState {
    PatchGrid grid;
    SolverState solver;
    bool valid = false;
};

// One FoJ update fit against x_half (fresh init if no usable previous state,
// otherwise one init sweep plus refinement from it), then the proximal blend
//   x_next = (x_half + 2 lambda Vhat) / (1 + 2 lambda),
// the exact minimizer of ||x - Vhat||^2 + (1/(2 lambda)) ||x - x_half||^2.
Volume prox_foj(const Volume& x_half, double lambda, const SolverConfig& foj_cfg,
                ProxState& state, bool warm_start);

struct PgdResult {
    Volume x;
    std::vector<double> residual_trace;  // ||A x - b|| per outer iteration
    double lambda_used = 0.0;
    double op_norm_sq_estimate = 0.0;
    bool step_warning = false;  // lambda exceeded 2 / ||A||^2
};

PgdResult reconstruct_pgd(const LinearOperator& A, const Volume& b,
                          const PgdConfig& cfg);

struct CglsResult {
    Volume x;
    std::vector<double> residual_trace;  // ||A x - b|| per iteration
    bool breakdown = false;
};

CglsResult reconstruct_lsq(const LinearOperator& A, const Volume& b, int n_iter);

// Largest eigenvalue of A^T A estimated with n_iter power iterations.
double operator_norm_sq(const LinearOperator& A, int n_iter, std::uint64_t seed);

void write_residual_trace_csv(const std::string& path,
                              const std::vector<double>& trace);

}  // namespace foj
