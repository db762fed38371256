#include "matpop/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "matpop/errors.hpp"
#include "matpop/grid.hpp"
#include "matpop/num/parallel.hpp"
#include "matpop/num/quadrature.hpp"
#include "matpop/num/rootfind.hpp"

namespace matpop {

// ---------------------------------------------------------------------------
// SolutionField
// ---------------------------------------------------------------------------

double SolutionField::eval(double t, double mat) const {
    const double t_slack = 1e-9 * dt;
    const double m_slack = 1e-12;
    if (t < t_begin - t_slack || t > end_time() + t_slack)
        throw std::out_of_range("SolutionField: time outside stored range");
    if (mat < m.front() - m_slack || mat > m.back() + m_slack)
        throw std::out_of_range("SolutionField: maturity outside [0,1]");
    double r = (t - t_begin) / dt;
    int i0 = (int)std::floor(r);
    i0 = std::clamp(i0, 0, nt - 2);
    const double ft = std::clamp(r - i0, 0.0, 1.0);
    const std::size_t j0 = num::find_cell(m, mat);
    const double fm = std::clamp((mat - m[j0]) / (m[j0 + 1] - m[j0]), 0.0, 1.0);
    const double lo = at(i0, (int)j0) * (1 - fm) + at(i0, (int)j0 + 1) * fm;
    const double hi = at(i0 + 1, (int)j0) * (1 - fm) + at(i0 + 1, (int)j0 + 1) * fm;
    return lo * (1 - ft) + hi * ft;
}

double SolutionField::max_abs_row(int i) const {
    double mx = 0.0;
    for (int j = 0; j < nm(); ++j) mx = std::max(mx, std::abs(at(i, j)));
    return mx;
}

double SolutionField::sup_abs() const {
    double mx = 0.0;
    for (double v : values) mx = std::max(mx, std::abs(v));
    return mx;
}

int SolutionField::zero_row() const {
    return (int)std::llround(-t_begin / dt);
}

SolutionField make_initial_field(const std::vector<double>& mgrid, double dt, double tau_max,
                                 double horizon, const std::function<double(double)>& mu_bar) {
    if (dt <= 0.0) throw SolverError("time step must be positive");
    if (horizon <= 0.0) throw SolverError("horizon must be positive");
    SolutionField f;
    f.dt = dt;
    f.m = mgrid;
    const int hist = (int)std::ceil(tau_max / dt - 1e-9);
    const int nsteps = (int)std::ceil(horizon / dt - 1e-9);
    f.t_begin = -hist * dt;
    f.nt = hist + nsteps + 1;
    f.values.assign((std::size_t)f.nt * mgrid.size(), 0.0);
    for (int i = 0; i <= hist; ++i)
        for (int j = 0; j < (int)mgrid.size(); ++j) f.at(i, j) = mu_bar(mgrid[j]);
    return f;
}

// ---------------------------------------------------------------------------
// Direct (uncached) source evaluations
// ---------------------------------------------------------------------------

double birth_source(double t, double m, double x, const CommitmentMaps& maps,
                    const InitialData& data) {
    const auto [gi, gp] = maps.g_inverse(m);
    const double d = maps.theta(gi);
    const double tau_d = maps.coeffs().division_age(d);
    if (t <= tau_d) {
        if (gp == 0.0) return 0.0;
        return 2.0 * gp * maps.kernel_proliferating()(t, gi) *
               data.gamma(maps.flow().chi(-t, gi), tau_d - t);
    }
    const double z = maps.zeta(m);
    if (z == 0.0) return 0.0;
    return z * eval_beta(maps.coeffs(), d, x) * x;
}

double cytokinesis_loss(double t, double m, double x, const CommitmentMaps& maps,
                        const InitialData& data) {
    const double th = maps.theta(m);
    const double tau_t = maps.coeffs().division_age(th);
    const double pi = maps.pi_factor(m);
    if (t <= tau_t)
        return pi * maps.kernel_proliferating()(t, m) *
               data.gamma(maps.flow().chi(-t, m), tau_t - t);
    return pi * maps.kernel_proliferating()(tau_t, m) * eval_beta(maps.coeffs(), th, x) * x;
}

double gamma_bar(const InitialData& data, const CommitmentMaps& maps, double m) {
    const double upper = maps.coeffs().division_age(maps.theta(m));
    if (upper <= 0.0) return 0.0;
    return num::integrate([&](double a) { return data.gamma(m, a); }, 0.0, upper,
                          {16, 1.0, 1e-12, 12});
}

double sup_grid(const std::function<double(double)>& f, const std::vector<double>& grid) {
    double mx = 0.0;
    for (double v : grid) mx = std::max(mx, std::abs(f(v)));
    return mx;
}

double gamma_sup_on_domain(const InitialData& data, const CommitmentMaps& maps, int m_samples,
                           int a_samples) {
    double mx = 0.0;
    for (int i = 0; i <= m_samples; ++i) {
        const double m = (double)i / m_samples;
        const double amax = maps.coeffs().division_age(maps.theta(m));
        for (int k = 0; k <= a_samples; ++k)
            mx = std::max(mx, std::abs(data.gamma(m, amax * k / a_samples)));
    }
    return mx;
}

double lipschitz_xbeta(const Reintroduction& beta, double radius, int m_samples, int x_samples) {
    double L = 0.0;
    if (beta.is_hill()) {
        for (int i = 0; i <= m_samples; ++i) {
            const double m = (double)i / m_samples;
            const double b0 = beta.beta0(m);
            const double thn = std::pow(beta.threshold(m), beta.n);
            L = std::max(L, b0);  // slope on x <= 0
            for (int k = 0; k <= x_samples; ++k) {
                const double x = radius * k / x_samples;
                const double xn = std::pow(x, beta.n);
                const double denom = (thn + xn) * (thn + xn);
                const double fp = b0 * thn * (thn + (1.0 - beta.n) * xn) / denom;
                L = std::max(L, std::abs(fp));
            }
        }
        return L;
    }
    const double h = radius / x_samples;
    for (int i = 0; i <= m_samples; ++i) {
        const double m = (double)i / m_samples;
        auto f = [&](double x) { return x * beta(m, x); };
        for (int k = -x_samples; k < x_samples; ++k) {
            const double x = k * h;
            L = std::max(L, std::abs(f(x + h) - f(x)) / h);
        }
    }
    return L;
}

// ---------------------------------------------------------------------------
// Picard engine: cached characteristic/kernel tables on the solution grid
// ---------------------------------------------------------------------------

namespace {

// One quadrature refinement point inside the sample interval
// (s_{l_right-1}, s_{l_right}): either the branch seam of the birth source
// (initial layer -> delayed reintroduction) or the clamp crossing where the
// transported maturity passes g(1) and the birth factor drops to zero. The
// one-sided birth values are: 0, a frozen initial-layer value, or the
// delayed form zeta beta(delta, x) x with x read from the field.
struct Split {
    static constexpr int kNone = -1, kZero = 0, kStatic = 1, kDelay = 2;
    int l_right = 0;
    double s_star = 0.0;
    double k_star = 0.0;   // K(t_n - s*, m_j)
    int left_kind = kNone;
    int right_kind = kNone;
    double f_static = 0.0;  // initial-layer value at s*- (kStatic side)
    double zeta = 0.0, delta = 0.0, tau = 0.0, b0 = 0.0, thn = 0.0;  // kDelay side
    bool fix_loss = false;  // also split the (continuous, kinked) loss integrand
    bool in_layer = false;  // birth side already folded into the static sum
    double m_star = 0.0, b0_m = 0.0, thn_m = 0.0;  // loss data at the crossing
};

struct NodeSplits {
    Split s[2];
    int count = 0;
};

class PicardEngine {
public:
    PicardEngine(const InitialData& data, const CommitmentMaps& maps, const SolutionField& proto,
                 const SolverOptions& opt)
        : data_(data),
          maps_(maps),
          coeffs_(maps.coeffs()),
          opt_(opt),
          mg_(proto.m),
          M_((int)proto.m.size()),
          dt_(proto.dt),
          hist_(proto.zero_row()),
          nsteps_(proto.nt - 1 - proto.zero_row()) {
        hill_ = coeffs_.reintroduction.is_hill();
        hill_n_ = coeffs_.reintroduction.n;
        hill_n_int_ = (hill_n_ == std::floor(hill_n_) && hill_n_ >= 1 && hill_n_ <= 8)
                          ? (int)hill_n_
                          : 0;
        build_tables();
    }

    int nsteps() const { return nsteps_; }
    int hist() const { return hist_; }
    double dt() const { return dt_; }

    double kernel_bound(int steps) const {
        double mx = 0.0;
        const int lim = std::min(steps, Uext_);
        for (int u = 0; u <= lim; ++u)
            for (int j = 0; j < M_; ++j) mx = std::max(mx, K_[idx(u, j)]);
        return mx;
    }

    /// Kernel-propagated continuation of row n1, the natural first iterate.
    void seed_window(SolutionField& f, int n1, int n2) const {
        for (int n = n1 + 1; n <= n2; ++n) {
            const int u = n - n1;
            for (int j = 0; j < M_; ++j)
                f.at(hist_ + n, j) = K_[idx(u, j)] * row_interp(f, hist_ + n1, cellChi_[idx(u, j)],
                                                                fracChi_[idx(u, j)]);
        }
    }

    void prepare_window(int n1, int n2) {
        if (built_n1_ == n1 && built_n2_ == n2) return;
        built_n1_ = n1;
        built_n2_ = n2;
        const std::size_t total = (std::size_t)(nsteps_ + 1) * M_;
        if (staticF_.size() != total) {
            staticF_.assign(total, 0.0);
            lstart_.assign(total, 0);
            splits_.assign(total, NodeSplits{});
        }
        num::parallel_for((std::size_t)(n2 - n1) * M_, opt_.threads, [&](std::size_t k) {
            const int n = n1 + 1 + (int)(k / M_);
            const int j = (int)(k % M_);
            build_node_cache(n, j, n1);
        });
    }

    /// One sweep of the operator over rows (n1, n2]; returns sup-norm change.
    double sweep(const SolutionField& cur, SolutionField& next, int n1, int n2) const {
        std::atomic<bool> bad{false};
        const std::size_t cols = (std::size_t)M_;
        const std::size_t nodes = (std::size_t)(n2 - n1) * cols;
        const int nthreads = std::max(1, opt_.threads);
        std::vector<double> change(nthreads, 0.0);
        num::parallel_for_blocks(nodes, opt_.threads, [&](std::size_t lo, std::size_t hi, int t) {
            double mx = 0.0;
            for (std::size_t k = lo; k < hi; ++k) {
                const int n = n1 + 1 + (int)(k / cols);
                const int j = (int)(k % cols);
                const double v = node_value(cur, n, j, n1);
                if (!std::isfinite(v)) bad.store(true);
                mx = std::max(mx, std::abs(v - cur.at(hist_ + n, j)));
                next.at(hist_ + n, j) = v;
            }
            change[t] = std::max(change[t], mx);
        });
        if (bad.load()) throw SolverError("picard sweep produced a non-finite value");
        double mx = 0.0;
        for (double c : change) mx = std::max(mx, c);
        return mx;
    }

    SolutionField proliferating(const SolutionField& N) const;
    SolutionField shifted_apply(const SolutionField& N,
                                const std::function<double(double)>& a) const;

private:
    // column-major in the backward-time offset: the quadrature loops walk
    // u contiguously for a fixed maturity column
    std::size_t idx(int u, int j) const { return (std::size_t)j * (Uext_ + 1) + u; }

    static double row_interp(const SolutionField& f, int row, int cell, double frac) {
        const double* v = f.values.data() + (std::size_t)row * f.m.size();
        return v[cell] * (1.0 - frac) + v[cell + 1] * frac;
    }

    double field_interp(const SolutionField& f, double t, int cell, double frac) const {
        double r = (t - f.t_begin) / dt_;
        int i0 = (int)std::floor(r);
        i0 = std::clamp(i0, 0, f.nt - 2);
        const double ft = std::clamp(r - i0, 0.0, 1.0);
        return row_interp(f, i0, cell, frac) * (1.0 - ft) +
               row_interp(f, i0 + 1, cell, frac) * ft;
    }

    double pow_n(double x) const {
        if (hill_n_int_ > 0) {
            double r = x;
            for (int i = 1; i < hill_n_int_; ++i) r *= x;
            return r;
        }
        return std::pow(x, hill_n_);
    }

    double beta_hill(double b0, double thn, double x) const {
        if (x < 0.0) return b0;
        return b0 * thn / (thn + pow_n(x));
    }

    double beta_at(double m, double b0, double thn, double x) const {
        if (hill_) return beta_hill(b0, thn, x);
        return coeffs_.reintroduction(m, x);
    }

    void cell_of(double v, int& cell, double& frac) const {
        const std::size_t c = num::find_cell(mg_, v);
        cell = (int)c;
        frac = std::clamp((v - mg_[c]) / (mg_[c + 1] - mg_[c]), 0.0, 1.0);
    }

    // Off-grid kernels: interpolate the exponent linearly between table rows.
    double K_interp(double t, int j) const {
        const double r = std::clamp(t / dt_, 0.0, (double)Uext_);
        const int u0 = std::min((int)r, Uext_ - 1);
        const double f = r - u0;
        const double a0 = -std::log(K_[idx(u0, j)]);
        const double a1 = -std::log(K_[idx(u0 + 1, j)]);
        return std::exp(-(a0 * (1 - f) + a1 * f));
    }

    double Blog_at(double t, int j) const {
        const double r = std::clamp(t / dt_, 0.0, (double)Uext_);
        const int u0 = std::min((int)r, Uext_ - 1);
        const double f = r - u0;
        const double b0 = -std::log(Xi_[idx(u0, j)]);
        const double b1 = -std::log(Xi_[idx(u0 + 1, j)]);
        return b0 * (1 - f) + b1 * f;
    }

    /// xi(t, y) at arbitrary (t, y), bilinear in the exponent.
    double xi_bilinear(double t, double y) const {
        const double r = std::clamp(t / dt_, 0.0, (double)Uext_);
        const int u0 = std::min((int)r, Uext_ - 1);
        const double ft = r - u0;
        int c;
        double fm;
        cell_of(y, c, fm);
        auto blog = [&](int u) {
            return (-std::log(Xi_[idx(u, c)])) * (1 - fm) +
                   (-std::log(Xi_[idx(u, c + 1)])) * fm;
        };
        return std::exp(-(blog(u0) * (1 - ft) + blog(u0 + 1) * ft));
    }

    double chi_row_interp(int u, double y) const {
        int c;
        double fm;
        cell_of(y, c, fm);
        return chi_[idx(u, c)] * (1 - fm) + chi_[idx(u, c + 1)] * fm;
    }

    double chi_bilinear(double t, double y) const {
        const double r = std::clamp(t / dt_, 0.0, (double)Uext_);
        const int u0 = std::min((int)r, Uext_ - 1);
        const double ft = r - u0;
        return chi_row_interp(u0, y) * (1 - ft) + chi_row_interp(u0 + 1, y) * ft;
    }

    /// Initial-layer birth value at sample time s = l*dt for foot (u, j).
    double birth_initial_layer(int l, int u, int j) const {
        const std::size_t k = idx(u, j);
        const double gp = gpr_[k];
        if (gp == 0.0) return 0.0;
        const int cy = cellY_[k];
        const double fy = fracY_[k];
        const double blog = (-std::log(Xi_[idx(l, cy)])) * (1 - fy) +
                            (-std::log(Xi_[idx(l, cy + 1)])) * fy;
        const double chi_y = chi_[idx(l, cy)] * (1 - fy) + chi_[idx(l, cy + 1)] * fy;
        return 2.0 * gp * std::exp(-blog) * data_.gamma(chi_y, tauDelta_[k] - l * dt_);
    }

    void build_node_cache(int n, int j, int n1);
    double node_value(const SolutionField& cur, int n, int j, int n1) const;
    Split find_branch_seam(int n, int j, int l_right) const;
    double birth_sample(const SolutionField& cur, int n, int j, int l) const;
    double loss_sample(const SolutionField& cur, int n, int j, int l) const;
    double split_side(const SolutionField& cur, const Split& sp, bool left) const;
    std::pair<double, double> split_corrections(const SolutionField& cur, int n, int j,
                                                const NodeSplits& ns) const;

    void build_tables();

    const InitialData& data_;
    const CommitmentMaps& maps_;
    const ModelCoefficients& coeffs_;
    SolverOptions opt_;

    std::vector<double> mg_;
    int M_;
    double dt_;
    int hist_;
    int nsteps_;
    int Uext_ = 0;

    bool hill_ = true;
    double hill_n_ = 1.0;
    int hill_n_int_ = 1;

    // per (offset u, column j) tables, flattened u * M + j
    std::vector<double> chi_, K_, Xi_;
    std::vector<double> ginv_, gpr_, delta_, tauDelta_, zeta_;
    std::vector<double> theta_, tauTheta_, pi_, xiThetaDelay_;
    std::vector<double> b0chi_, thnchi_, b0D_, thnD_, b0T_, thnT_;
    std::vector<int> cellChi_, cellY_, cellD_, cellT_;
    std::vector<double> fracChi_, fracY_, fracD_, fracT_;

    // per-window caches
    int built_n1_ = -1, built_n2_ = -1;
    std::vector<double> staticF_;
    std::vector<int> lstart_;
    std::vector<NodeSplits> splits_;

    // clamp geometry (division-map inverse saturates at g(1))
    double g1_ = 1.0;
    double gp_left_ = 0.0;       // (g^{-1})' just below g(1)
    double delta_g1_ = 0.0;      // theta(1)
    double tau_g1_ = 0.0;        // tau(theta(1))
    double b0_g1_ = 0.0, thn_g1_ = 0.0;    // Hill data at m = g(1)
    double b0_dg1_ = 0.0, thn_dg1_ = 0.0;  // Hill data at delta(g(1))
    std::vector<double> tof_g1_;           // time of flight g(1) -> m_j
};

void PicardEngine::build_tables() {
    Uext_ = nsteps_ + hist_ + 1;
    const std::size_t sz = (std::size_t)(Uext_ + 1) * M_;
    chi_.resize(sz);
    K_.resize(sz);
    Xi_.resize(sz);
    ginv_.resize(sz);
    gpr_.resize(sz);
    delta_.resize(sz);
    tauDelta_.resize(sz);
    zeta_.resize(sz);
    theta_.resize(sz);
    tauTheta_.resize(sz);
    pi_.resize(sz);
    xiThetaDelay_.resize(sz);
    b0chi_.resize(sz);
    thnchi_.resize(sz);
    b0D_.resize(sz);
    thnD_.resize(sz);
    b0T_.resize(sz);
    thnT_.resize(sz);
    cellChi_.resize(sz);
    cellY_.resize(sz);
    cellD_.resize(sz);
    cellT_.resize(sz);
    fracChi_.resize(sz);
    fracY_.resize(sz);
    fracD_.resize(sz);
    fracT_.resize(sz);

    const auto& flow = maps_.flow();
    const auto& V = coeffs_.velocity;
    const auto& delta_rate = coeffs_.resting_loss;
    const auto& gamma_rate = coeffs_.apoptosis;
    const bool analytic = flow.backend() == CharacteristicFlow::Backend::Analytic;
    const auto& rule = num::gauss_legendre(16);

    num::parallel_for((std::size_t)M_, opt_.threads, [&](std::size_t js) {
        const int j = (int)js;
        double A = 0.0, B = 0.0;
        chi_[idx(0, j)] = mg_[j];
        K_[idx(0, j)] = 1.0;
        Xi_[idx(0, j)] = 1.0;
        for (int u = 1; u <= Uext_; ++u) {
            const double s0 = (u - 1) * dt_;
            const double x_prev = chi_[idx(u - 1, j)];
            // one Gauss panel over [s0, s0 + dt] along this characteristic
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const double off = 0.5 * dt_ * (1.0 + rule.nodes[q]);
                const double x =
                    analytic ? flow.chi(-(s0 + off), mg_[j]) : flow.chi(-off, x_prev);
                const double w = 0.5 * dt_ * rule.weights[q];
                const double vp = V.derivative(x);
                A += w * (delta_rate(x) + vp);
                B += w * (gamma_rate(x) + vp);
            }
            chi_[idx(u, j)] = analytic ? flow.chi(-u * dt_, mg_[j]) : flow.chi(-dt_, x_prev);
            K_[idx(u, j)] = std::exp(-A);
            Xi_[idx(u, j)] = std::exp(-B);
        }
    });

    const auto& tau = coeffs_.division_age;
    const auto& beta = coeffs_.reintroduction;

    // clamp geometry: where characteristics cross g(1), the birth factor
    // (g^{-1})' drops to zero and the quadrature must subdivide
    g1_ = coeffs_.division_map.g1();
    gp_left_ = coeffs_.division_map.inverse(g1_ * (1.0 - 1e-12)).second;
    delta_g1_ = maps_.theta(1.0);
    tau_g1_ = tau(delta_g1_);
    if (hill_) {
        b0_g1_ = beta.beta0(g1_);
        thn_g1_ = pow_n(beta.threshold(g1_));
        b0_dg1_ = beta.beta0(delta_g1_);
        thn_dg1_ = pow_n(beta.threshold(delta_g1_));
    }
    tof_g1_.assign(M_, 1e300);
    for (int j = 0; j < M_; ++j)
        if (mg_[j] > g1_ + 1e-13) tof_g1_[j] = flow.time_of_flight(g1_, mg_[j]);

    num::parallel_for((std::size_t)M_, opt_.threads, [&](std::size_t js) {
        const int j = (int)js;
        for (int u = 0; u <= Uext_; ++u) {
            const std::size_t k = idx(u, j);
            const double x = chi_[k];
            cell_of(x, cellChi_[k], fracChi_[k]);
            const auto [gi, gp] = coeffs_.division_map.inverse(x);
            ginv_[k] = gi;
            gpr_[k] = gp;
            cell_of(gi, cellY_[k], fracY_[k]);
            const double d = maps_.theta(gi);
            delta_[k] = d;
            tauDelta_[k] = tau(d);
            cell_of(d, cellD_[k], fracD_[k]);
            zeta_[k] = (gp == 0.0) ? 0.0 : 2.0 * gp * xi_bilinear(tauDelta_[k], gi);
            const double th = maps_.theta(x);
            theta_[k] = th;
            tauTheta_[k] = tau(th);
            cell_of(th, cellT_[k], fracT_[k]);
            pi_[k] = 1.0 / (1.0 + V(th) * tau.derivative(th));
            xiThetaDelay_[k] =
                std::exp(-(Blog_at(u * dt_ + tauTheta_[k], j) - Blog_at(u * dt_, j)));
            if (hill_) {
                b0chi_[k] = beta.beta0(x);
                thnchi_[k] = pow_n(beta.threshold(x));
                b0D_[k] = beta.beta0(d);
                thnD_[k] = pow_n(beta.threshold(d));
                b0T_[k] = beta.beta0(th);
                thnT_[k] = pow_n(beta.threshold(th));
            }
        }
    });
}

Split PicardEngine::find_branch_seam(int n, int j, int l_right) const {
    Split s;
    const double t_n = n * dt_;
    const double s_left = (l_right - 1) * dt_;
    const double s_right = l_right * dt_;
    const auto& flow = maps_.flow();
    const auto& tau = coeffs_.division_age;
    auto psi = [&](double sv) {
        const double x = flow.chi(-(t_n - sv), mg_[j]);
        return sv - tau(maps_.delta(x));
    };
    if (psi(s_left) > 0.0 || psi(s_right) < 0.0) return s;  // no crossing after all
    if (tau.kind == DivisionAge::Kind::Constant) {
        s.s_star = tau.tau0;  // psi(s) = s - tau0
    } else {
        s.s_star = num::bisect(psi, s_left, s_right, 1e-10, 60);
    }
    // a seam sitting on a sample needs no refinement
    if (s.s_star - s_left < 1e-12 || s_right - s.s_star < 1e-12) return s;
    s.l_right = l_right;
    s.k_star = K_interp(t_n - s.s_star, j);
    const double xstar = flow.chi(-(t_n - s.s_star), mg_[j]);
    const auto [y, gp] = coeffs_.division_map.inverse(xstar);
    s.delta = maps_.theta(y);
    s.tau = tau(s.delta);
    s.left_kind = Split::kStatic;
    s.right_kind = Split::kDelay;
    s.m_star = xstar;
    if (hill_) {
        s.b0_m = coeffs_.reintroduction.beta0(xstar);
        s.thn_m = pow_n(coeffs_.reintroduction.threshold(xstar));
    }
    if (gp == 0.0) {
        s.f_static = 0.0;
        s.zeta = 0.0;
    } else {
        s.f_static = 2.0 * gp * xi_bilinear(s.s_star, y) *
                     data_.gamma(chi_bilinear(s.s_star, y), s.tau - s.s_star);
        s.zeta = 2.0 * gp * xi_bilinear(s.tau, y);
    }
    if (hill_) {
        s.b0 = coeffs_.reintroduction.beta0(s.delta);
        s.thn = pow_n(coeffs_.reintroduction.threshold(s.delta));
    }
    return s;
}

void PicardEngine::build_node_cache(int n, int j, int n1) {
    const std::size_t slot = (std::size_t)n * M_ + j;
    const double t_n = n * dt_;

    // clamp crossing of this node's characteristic, if inside the window
    double s_clamp = -1.0;
    if (mg_[j] > g1_ && tof_g1_[j] < t_n - n1 * dt_ - 1e-13) s_clamp = t_n - tof_g1_[j];

    double stat = 0.0;
    int l = n1;
    for (; l <= n; ++l) {
        const std::size_t k = idx(n - l, j);
        if (l * dt_ > tauDelta_[k]) break;
        const double w = (l == n1 || l == n) ? 0.5 * dt_ : dt_;
        stat += w * K_[k] * birth_initial_layer(l, n - l, j);
    }

    NodeSplits ns;
    const int lstart = l;
    const bool clamp_in_layer = s_clamp > 0.0 && s_clamp < (lstart - 1) * dt_ + 1e-15;
    if (clamp_in_layer) {
        // refine the frozen initial-layer sum at the crossing; the factor
        // (g^{-1})' is zero past it, so the right side vanishes
        const int lc = (int)std::floor(s_clamp / dt_) + 1;
        if (lc > n1 && lc < lstart && std::abs(s_clamp - (lc - 1) * dt_) > 1e-13) {
            const double fl = birth_initial_layer(lc - 1, n - lc + 1, j);
            const double fr = birth_initial_layer(lc, n - lc, j);
            const double kl = K_[idx(n - lc + 1, j)];
            const double kr = K_[idx(n - lc, j)];
            const double ks = K_interp(t_n - s_clamp, j);
            const double fs = 2.0 * gp_left_ * xi_bilinear(s_clamp, 1.0) *
                              data_.gamma(chi_bilinear(s_clamp, 1.0), tau_g1_ - s_clamp);
            const double sl = (lc - 1) * dt_;
            stat += 0.5 * (s_clamp - sl) * (kl * fl + ks * fs) +
                    0.0  /* right side is zero */
                    - 0.5 * dt_ * (kl * fl + kr * fr);
        }
        // the loss integrand still has its kink here; the birth side is
        // handled in the static sum above (in_layer)
        Split sp;
        sp.l_right = (int)std::floor(s_clamp / dt_) + 1;
        sp.s_star = s_clamp;
        sp.k_star = K_interp(t_n - s_clamp, j);
        sp.left_kind = Split::kStatic;
        sp.right_kind = Split::kZero;
        sp.f_static = 2.0 * gp_left_ * xi_bilinear(s_clamp, 1.0) *
                      data_.gamma(chi_bilinear(s_clamp, 1.0), tau_g1_ - s_clamp);
        sp.in_layer = true;
        sp.fix_loss = true;
        sp.m_star = g1_;
        sp.b0_m = b0_g1_;
        sp.thn_m = thn_g1_;
        if (sp.l_right > n1 && sp.l_right <= n &&
            std::abs(s_clamp - (sp.l_right - 1) * dt_) > 1e-13)
            ns.s[ns.count++] = sp;
    }

    staticF_[slot] = stat;
    lstart_[slot] = lstart;

    if (lstart <= n && lstart > n1) {
        Split seam = find_branch_seam(n, j, lstart);
        if (seam.left_kind != Split::kNone) ns.s[ns.count++] = seam;
    }

    if (s_clamp > 0.0 && !clamp_in_layer) {
        // crossing in the delayed era: the birth integrand jumps to zero
        const int lc = (int)std::floor(s_clamp / dt_) + 1;
        if (lc > n1 && lc <= n && lc >= lstart &&
            std::abs(s_clamp - (lc - 1) * dt_) > 1e-13) {
            Split sp;
            sp.l_right = lc;
            sp.s_star = s_clamp;
            sp.k_star = K_interp(t_n - s_clamp, j);
            sp.left_kind = Split::kDelay;
            sp.right_kind = Split::kZero;
            sp.zeta = gp_left_ == 0.0 ? 0.0 : 2.0 * gp_left_ * xi_bilinear(tau_g1_, 1.0);
            sp.delta = delta_g1_;
            sp.tau = tau_g1_;
            sp.b0 = b0_dg1_;
            sp.thn = thn_dg1_;
            sp.fix_loss = true;
            sp.m_star = g1_;
            sp.b0_m = b0_g1_;
            sp.thn_m = thn_g1_;
            ns.s[ns.count++] = sp;
        }
    }
    // keep the splits ordered in s
    if (ns.count == 2 && ns.s[0].s_star > ns.s[1].s_star) std::swap(ns.s[0], ns.s[1]);
    if (ns.count == 2 && ns.s[0].l_right == ns.s[1].l_right &&
        ns.s[0].right_kind == Split::kZero) {
        // the characteristic passes g(1) while still in the initial layer:
        // the birth source vanishes from the crossing on, so the branch seam
        // behind it is moot
        Split sp = ns.s[0];
        sp.left_kind = Split::kStatic;
        sp.f_static = 2.0 * gp_left_ * xi_bilinear(sp.s_star, 1.0) *
                      data_.gamma(chi_bilinear(sp.s_star, 1.0), tau_g1_ - sp.s_star);
        ns.s[0] = sp;
        ns.count = 1;
    }
    splits_[slot] = ns;
}

double PicardEngine::birth_sample(const SolutionField& cur, int n, int j, int l) const {
    const std::size_t k = idx(n - l, j);
    if (l * dt_ <= tauDelta_[k]) return birth_initial_layer(l, n - l, j);
    const double td = l * dt_ - tauDelta_[k];
    const double x = field_interp(cur, td, cellD_[k], fracD_[k]);
    return zeta_[k] * beta_at(delta_[k], b0D_[k], thnD_[k], x) * x;
}

double PicardEngine::loss_sample(const SolutionField& cur, int n, int j, int l) const {
    const std::size_t k = idx(n - l, j);
    const double xN = row_interp(cur, hist_ + l, cellChi_[k], fracChi_[k]);
    return beta_at(chi_[k], b0chi_[k], thnchi_[k], xN) * xN;
}

double PicardEngine::split_side(const SolutionField& cur, const Split& sp, bool left) const {
    const int kind = left ? sp.left_kind : sp.right_kind;
    switch (kind) {
        case Split::kZero: return 0.0;
        case Split::kStatic: return sp.f_static;
        case Split::kDelay: {
            const double x = cur.eval(sp.s_star - sp.tau, sp.delta);
            return sp.zeta * beta_at(sp.delta, sp.b0, sp.thn, x) * x;
        }
        default: return 0.0;
    }
}

// Corrections to the two trapezoid sums from the refinement points of this
// node. Returns {birth correction, loss correction}.
std::pair<double, double> PicardEngine::split_corrections(const SolutionField& cur, int n, int j,
                                                          const NodeSplits& ns) const {
    double birth = 0.0, loss = 0.0;
    const double hdt = 0.5 * dt_;
    auto kl_of = [&](int l) { return K_[idx(n - l + 1, j)]; };
    auto kr_of = [&](int l) { return K_[idx(n - l, j)]; };

    const bool merged = ns.count == 2 && ns.s[0].l_right == ns.s[1].l_right &&
                        ns.s[0].left_kind != Split::kNone && ns.s[1].left_kind != Split::kNone;
    if (merged) {
        const Split& a = ns.s[0];
        const Split& b = ns.s[1];
        const int l = a.l_right;
        const double sl = (l - 1) * dt_, sr = l * dt_;
        const double Fl = birth_sample(cur, n, j, l - 1);
        const double Fr = birth_sample(cur, n, j, l);
        birth += 0.5 * (a.s_star - sl) * (kl_of(l) * Fl + a.k_star * split_side(cur, a, true)) +
                 0.5 * (b.s_star - a.s_star) *
                     (a.k_star * split_side(cur, a, false) + b.k_star * split_side(cur, b, true)) +
                 0.5 * (sr - b.s_star) * (b.k_star * split_side(cur, b, false) + kr_of(l) * Fr) -
                 hdt * (kl_of(l) * Fl + kr_of(l) * Fr);
    }
    for (int i = 0; i < ns.count; ++i) {
        const Split& sp = ns.s[i];
        const int l = sp.l_right;
        const double sl = (l - 1) * dt_, sr = l * dt_;
        if (!merged && sp.left_kind != Split::kNone && !sp.in_layer) {
            const double Fl = birth_sample(cur, n, j, l - 1);
            const double Fr = birth_sample(cur, n, j, l);
            birth += 0.5 * (sp.s_star - sl) *
                         (kl_of(l) * Fl + sp.k_star * split_side(cur, sp, true)) +
                     0.5 * (sr - sp.s_star) *
                         (sp.k_star * split_side(cur, sp, false) + kr_of(l) * Fr) -
                     hdt * (kl_of(l) * Fl + kr_of(l) * Fr);
        }
        if (sp.fix_loss) {
            const double fl = loss_sample(cur, n, j, l - 1);
            const double fr = loss_sample(cur, n, j, l);
            const double x = cur.eval(sp.s_star, sp.m_star);
            const double fs = beta_at(sp.m_star, sp.b0_m, sp.thn_m, x) * x;
            loss += 0.5 * (sp.s_star - sl) * (kl_of(l) * fl + sp.k_star * fs) +
                    0.5 * (sr - sp.s_star) * (sp.k_star * fs + kr_of(l) * fr) -
                    hdt * (kl_of(l) * fl + kr_of(l) * fr);
        }
    }
    return {birth, loss};
}

double PicardEngine::node_value(const SolutionField& cur, int n, int j, int n1) const {
    const int u1 = n - n1;
    const std::size_t k1 = idx(u1, j);
    const double base = K_[k1] * row_interp(cur, hist_ + n1, cellChi_[k1], fracChi_[k1]);

    const double hdt = 0.5 * dt_;
    double loss = 0.0;
    for (int l = n1; l <= n; ++l) {
        const std::size_t k = idx(n - l, j);
        const double w = (l == n1 || l == n) ? hdt : dt_;
        const double xN = row_interp(cur, hist_ + l, cellChi_[k], fracChi_[k]);
        loss += w * K_[k] * beta_at(chi_[k], b0chi_[k], thnchi_[k], xN) * xN;
    }

    const std::size_t slot = (std::size_t)n * M_ + j;
    double birth = staticF_[slot];
    const int lstart = lstart_[slot];
    for (int l = lstart; l <= n; ++l) {
        const std::size_t k = idx(n - l, j);
        double f;
        if (l * dt_ <= tauDelta_[k]) {
            f = birth_initial_layer(l, n - l, j);  // only under non-monotone seams
        } else {
            const double td = l * dt_ - tauDelta_[k];
            const double x = field_interp(cur, td, cellD_[k], fracD_[k]);
            f = zeta_[k] * beta_at(delta_[k], b0D_[k], thnD_[k], x) * x;
        }
        const double w = (l == n1 || l == n) ? hdt : dt_;
        birth += w * K_[k] * f;
    }

    const NodeSplits& ns = splits_[slot];
    if (ns.count > 0) {
        const auto [birth_fix, loss_fix] = split_corrections(cur, n, j, ns);
        birth += birth_fix;
        loss += loss_fix;
    }
    return base - loss + birth;
}

SolutionField PicardEngine::proliferating(const SolutionField& N) const {
    SolutionField P;
    P.t_begin = 0.0;
    P.dt = dt_;
    P.m = mg_;
    P.nt = nsteps_ + 1;
    P.values.assign((std::size_t)P.nt * M_, 0.0);

    const auto& tau = coeffs_.division_age;
    const auto& flow = maps_.flow();
    const double hdt = 0.5 * dt_;

    num::parallel_for((std::size_t)(nsteps_ + 1) * M_, opt_.threads, [&](std::size_t kk) {
        const int n = (int)(kk / M_);
        const int j = (int)(kk % M_);
        const double t_n = n * dt_;
        const std::size_t kn = idx(n, j);
        double acc = Xi_[kn] * gamma_bar(data_, maps_, chi_[kn]);

        int l_right = -1;
        double g_first = 0.0, g_left_node = 0.0;
        for (int l = 0; n > 0 && l <= n; ++l) {
            const std::size_t k = idx(n - l, j);
            const double w = (l == 0 || l == n) ? hdt : dt_;
            const double s = l * dt_;
            const double xN = row_interp(N, hist_ + l, cellChi_[k], fracChi_[k]);
            acc += w * Xi_[k] * beta_at(chi_[k], b0chi_[k], thnchi_[k], xN) * xN;

            double g;
            if (s <= tauTheta_[k]) {
                // the initial layer rides this same characteristic: xi(s, m_s)
                // and chi(-s, m_s) come straight off the (n, j) tables
                const double xi_ratio = Xi_[idx(n, j)] / Xi_[k];
                g = pi_[k] * xi_ratio * data_.gamma(chi_[idx(n, j)], tauTheta_[k] - s);
                if (l_right < 0) g_left_node = g;
            } else {
                const double x = field_interp(N, s - tauTheta_[k], cellT_[k], fracT_[k]);
                g = pi_[k] * xiThetaDelay_[k] * beta_at(theta_[k], b0T_[k], thnT_[k], x) * x;
                if (l_right < 0) {
                    l_right = l;
                    g_first = g;
                }
            }
            acc -= w * Xi_[k] * g;
        }

        // seam refinement between the initial layer and the delayed branch
        if (l_right > 0) {
            const double s_left = (l_right - 1) * dt_;
            const double s_right = l_right * dt_;
            auto psi = [&](double sv) {
                const double x = flow.chi(-(t_n - sv), mg_[j]);
                return sv - tau(maps_.theta(x));
            };
            if (psi(s_left) <= 0.0 && psi(s_right) >= 0.0) {
                const double sstar = num::bisect(psi, s_left, s_right, 1e-13, 80);
                const double xi_left = Xi_[idx(n - l_right + 1, j)];
                const double xi_right = Xi_[idx(n - l_right, j)];
                const double xstar = flow.chi(-(t_n - sstar), mg_[j]);
                const double th_star = maps_.theta(xstar);
                const double tau_star = tau(th_star);
                const double pi_star =
                    1.0 / (1.0 + coeffs_.velocity(th_star) * tau.derivative(th_star));
                const double b_foot = Blog_at(t_n - sstar, j);
                // xi(sstar, xstar) rides the same characteristic as (n, j)
                const double xi_star = std::exp(-(Blog_at(t_n, j) - b_foot));
                // chi(-sstar, xstar) is the foot of the full characteristic
                const double g_star_left =
                    pi_star * xi_star * data_.gamma(chi_[idx(n, j)], tau_star - sstar);
                const double xi_tau = std::exp(-(Blog_at(t_n - sstar + tau_star, j) - b_foot));
                const double xd = N.eval(sstar - tau_star, th_star);
                const double g_star_right =
                    pi_star * xi_tau * coeffs_.reintroduction(th_star, xd) * xd;
                const double plain = hdt * (xi_left * g_left_node + xi_right * g_first);
                const double refined =
                    0.5 * (sstar - s_left) * (xi_left * g_left_node + xi_star * g_star_left) +
                    0.5 * (s_right - sstar) * (xi_star * g_star_right + xi_right * g_first);
                acc -= refined - plain;
            }
        }
        P.at(n, j) = acc;
    });
    return P;
}

SolutionField PicardEngine::shifted_apply(const SolutionField& N,
                                          const std::function<double(double)>& a) const {
    SolutionField out = N;
    const double hdt = 0.5 * dt_;
    std::vector<double> aChi((std::size_t)(Uext_ + 1) * M_);
    for (int u = 0; u <= Uext_; ++u)
        for (int j = 0; j < M_; ++j) aChi[idx(u, j)] = a(chi_[idx(u, j)]);

    // Cumulative shift exponent along each stored characteristic,
    // Ashift(u, j) = int_0^{u dt} a(chi(-sigma, m_j)) dsigma. The decay
    // factor transported along the characteristic is what makes a fixed
    // point reproduce itself for every continuous shift, constant or not.
    std::vector<double> Ashift((std::size_t)(Uext_ + 1) * M_);
    const auto& flow = maps_.flow();
    const bool analytic = flow.backend() == CharacteristicFlow::Backend::Analytic;
    const auto& rule = num::gauss_legendre(16);
    num::parallel_for((std::size_t)M_, opt_.threads, [&](std::size_t js) {
        const int j = (int)js;
        double A = 0.0;
        Ashift[idx(0, j)] = 0.0;
        for (int u = 1; u <= Uext_; ++u) {
            const double s0 = (u - 1) * dt_;
            const double x_prev = chi_[idx(u - 1, j)];
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const double off = 0.5 * dt_ * (1.0 + rule.nodes[q]);
                const double x =
                    analytic ? flow.chi(-(s0 + off), mg_[j]) : flow.chi(-off, x_prev);
                A += 0.5 * dt_ * rule.weights[q] * a(x);
            }
            Ashift[idx(u, j)] = A;
        }
    });
    auto shift_decay = [&](double t, int j) {
        const double r = std::clamp(t / dt_, 0.0, (double)Uext_);
        const int u0 = std::min((int)r, Uext_ - 1);
        const double f = r - u0;
        return std::exp(-(Ashift[idx(u0, j)] * (1 - f) + Ashift[idx(u0 + 1, j)] * f));
    };

    num::parallel_for((std::size_t)nsteps_ * M_, opt_.threads, [&](std::size_t kk) {
        const int n = 1 + (int)(kk / M_);
        const int j = (int)(kk % M_);
        const double t_n = n * dt_;
        const std::size_t kn = idx(n, j);
        double acc = std::exp(-Ashift[kn]) * K_[kn] *
                     row_interp(N, hist_, cellChi_[kn], fracChi_[kn]);

        for (int l = 0; l <= n; ++l) {
            const std::size_t k = idx(n - l, j);
            const double w = (l == 0 || l == n) ? hdt : dt_;
            const double s = l * dt_;
            const double decay = std::exp(-Ashift[k]);
            const double xN = row_interp(N, hist_ + l, cellChi_[k], fracChi_[k]);
            const double bracket =
                aChi[k] * xN - beta_at(chi_[k], b0chi_[k], thnchi_[k], xN) * xN;
            double f;
            if (s <= tauDelta_[k]) {
                f = birth_initial_layer(l, n - l, j);
            } else {
                const double td = s - tauDelta_[k];
                const double x = field_interp(N, td, cellD_[k], fracD_[k]);
                f = zeta_[k] * beta_at(delta_[k], b0D_[k], thnD_[k], x) * x;
            }
            acc += w * decay * K_[k] * (bracket + f);
        }

        // the same quadrature refinements as the plain operator, with the
        // shift decay riding along; the bracket is continuous across each
        // split, the birth side switches form
        const NodeSplits& ns = splits_[(std::size_t)n * M_ + j];
        auto combined = [&](int l) {
            const std::size_t k = idx(n - l, j);
            const double xN = row_interp(N, hist_ + l, cellChi_[k], fracChi_[k]);
            return aChi[k] * xN - beta_at(chi_[k], b0chi_[k], thnchi_[k], xN) * xN +
                   birth_sample(N, n, j, l);
        };
        auto star_bracket = [&](const Split& sp) {
            const double x = N.eval(sp.s_star, sp.m_star);
            return a(sp.m_star) * x - beta_at(sp.m_star, sp.b0_m, sp.thn_m, x) * x;
        };
        const bool merged = ns.count == 2 && ns.s[0].l_right == ns.s[1].l_right;
        if (merged) {
            const Split& sa = ns.s[0];
            const Split& sb = ns.s[1];
            const int l = sa.l_right;
            const double sl = (l - 1) * dt_, sr = l * dt_;
            const double dl = std::exp(-Ashift[idx(n - l + 1, j)]);
            const double dr = std::exp(-Ashift[idx(n - l, j)]);
            const double da = shift_decay(t_n - sa.s_star, j);
            const double db = shift_decay(t_n - sb.s_star, j);
            const double Gl = dl * K_[idx(n - l + 1, j)] * combined(l - 1);
            const double Gr = dr * K_[idx(n - l, j)] * combined(l);
            const double ba = star_bracket(sa), bb = star_bracket(sb);
            acc += 0.5 * (sa.s_star - sl) * (Gl + da * sa.k_star * (ba + split_side(N, sa, true))) +
                   0.5 * (sb.s_star - sa.s_star) *
                       (da * sa.k_star * (ba + split_side(N, sa, false)) +
                        db * sb.k_star * (bb + split_side(N, sb, true))) +
                   0.5 * (sr - sb.s_star) *
                       (db * sb.k_star * (bb + split_side(N, sb, false)) + Gr) -
                   hdt * (Gl + Gr);
        } else {
            for (int i = 0; i < ns.count; ++i) {
                const Split& sp = ns.s[i];
                const int l = sp.l_right;
                const double sl = (l - 1) * dt_, sr = l * dt_;
                const double dl = std::exp(-Ashift[idx(n - l + 1, j)]);
                const double dr = std::exp(-Ashift[idx(n - l, j)]);
                const double ds = shift_decay(t_n - sp.s_star, j);
                const double Gl = dl * K_[idx(n - l + 1, j)] * combined(l - 1);
                const double Gr = dr * K_[idx(n - l, j)] * combined(l);
                const double bs = star_bracket(sp);
                acc += 0.5 * (sp.s_star - sl) *
                           (Gl + ds * sp.k_star * (bs + split_side(N, sp, true))) +
                       0.5 * (sr - sp.s_star) *
                           (ds * sp.k_star * (bs + split_side(N, sp, false)) + Gr) -
                       hdt * (Gl + Gr);
            }
        }
        out.at(hist_ + n, j) = acc;
    });
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

PicardStepResult picard_step(const SolutionField& field, const InitialData& data,
                             const CommitmentMaps& maps, double window_start,
                             const SolverOptions& options) {
    PicardEngine engine(data, maps, field, options);
    const int n1 = (int)std::llround(window_start / field.dt);
    if (std::abs(n1 * field.dt - window_start) > 1e-9 || n1 < 0 || n1 > engine.nsteps())
        throw SolverError("picard_step: window start must be a grid time in [0, horizon]");
    engine.prepare_window(n1, engine.nsteps());
    PicardStepResult result{field, 0.0};
    result.sup_change = engine.sweep(field, result.field, n1, engine.nsteps());
    return result;
}

SolutionField proliferating_field(const SolutionField& N, const InitialData& data,
                                  const CommitmentMaps& maps, const SolverOptions& options) {
    PicardEngine engine(data, maps, N, options);
    return engine.proliferating(N);
}

SolutionField apply_shifted_picard(const SolutionField& N,
                                   const std::function<double(double)>& shift,
                                   const InitialData& data, const CommitmentMaps& maps,
                                   const SolverOptions& options) {
    PicardEngine engine(data, maps, N, options);
    engine.prepare_window(0, engine.nsteps());
    return engine.shifted_apply(N, shift);
}

double fixed_point_residual(const SolutionField& N, const InitialData& data,
                            const CommitmentMaps& maps, const std::vector<double>& window_starts,
                            const SolverOptions& options) {
    PicardEngine engine(data, maps, N, options);
    std::vector<int> starts;
    for (double t : window_starts) starts.push_back((int)std::llround(t / N.dt));
    std::sort(starts.begin(), starts.end());
    if (starts.empty() || starts.front() != 0)
        throw SolverError("fixed_point_residual: partition must start at 0");
    double res = 0.0;
    SolutionField scratch = N;
    const int hist = N.zero_row();
    for (std::size_t w = 0; w < starts.size(); ++w) {
        const int n1 = starts[w];
        const int n2 = (w + 1 < starts.size()) ? starts[w + 1] : engine.nsteps();
        if (n2 <= n1) continue;
        engine.prepare_window(n1, n2);
        engine.sweep(N, scratch, n1, n2);
        for (int n = n1 + 1; n <= n2; ++n)
            for (int j = 0; j < N.nm(); ++j)
                res = std::max(res, std::abs(scratch.at(hist + n, j) - N.at(hist + n, j)));
    }
    return res;
}

SolveResult solve(const InitialData& data, const CommitmentMaps& maps, double horizon,
                  const GridSpec& grid, const SolverOptions& options) {
    const double tau_max = maps.tau_max();
    const double tau_d = maps.tau_delta_min();
    const double dt = grid.dt > 0.0 ? grid.dt : tau_d / grid.dt_factor;
    std::vector<double> mgrid =
        grid.explicit_nodes.empty() ? graded_maturity_grid(grid.maturity_nodes, grid.min_cell)
                                    : grid.explicit_nodes;
    // pin a node at the clamp point: the birth source jumps there, so the
    // solution's maturity profile has a stationary kink at g(1)
    const double g1 = maps.g1();
    if (g1 > mgrid.front() && g1 < mgrid.back()) {
        const std::size_t c = num::find_cell(mgrid, g1);
        if (std::abs(mgrid[c] - g1) > 1e-12 && std::abs(mgrid[c + 1] - g1) > 1e-12)
            mgrid.insert(mgrid.begin() + c + 1, g1);
    }

    SolveResult result;
    SolutionField field = make_initial_field(mgrid, dt, tau_max, horizon, data.mu_bar);
    PicardEngine engine(data, maps, field, options);
    const int hist = engine.hist();
    const int nsteps = engine.nsteps();

    const double mu_norm = sup_grid(data.mu_bar, mgrid);
    const double zeta_norm = maps.zeta_norm();
    const double K_bound = engine.kernel_bound(nsteps);

    SolutionField scratch = field;
    int n1 = 0;
    while (n1 < nsteps) {
        double r = std::max(mu_norm, field.max_abs_row(hist + n1)) + 1.0;
        int retries = 0;
        int forced_cap = nsteps - n1;
        for (;;) {
            const double L = lipschitz_xbeta(maps.coeffs().reintroduction, r);
            const double rate = K_bound * (1.0 + zeta_norm) * L;
            int W = (rate * dt > 0.0) ? (int)std::floor(options.q_target / (rate * dt))
                                      : nsteps - n1;
            W = std::clamp(W, 1, std::min(nsteps - n1, forced_cap));
            const double q = rate * W * dt;
            if (q >= 1.0)
                throw SolverError(
                    "window contraction estimate >= 1 at a single step; time step too coarse "
                    "for this reintroduction rate");
            const int n2 = n1 + W;
            engine.prepare_window(n1, n2);
            engine.seed_window(field, n1, n2);
            scratch.values = field.values;

            WindowReport report;
            report.t_begin = n1 * dt;
            report.t_end = n2 * dt;
            report.contraction_q = q;
            report.radius = r;
            report.retries = retries;

            bool accepted = false, diverged = false;
            double prev_change = 0.0;
            int grow_count = 0;
            for (int iter = 1; iter <= options.max_iterations; ++iter) {
                const double change = engine.sweep(field, scratch, n1, n2);
                std::swap(field.values, scratch.values);
                report.changes.push_back(change);
                report.iterations = iter;
                report.final_change = change;
                if (change < options.tol) {
                    accepted = true;
                    break;
                }
                if (iter > 1 && change > 1.5 * prev_change) {
                    if (++grow_count >= 2) {
                        diverged = true;
                        break;
                    }
                } else {
                    grow_count = 0;
                }
                prev_change = change;
            }
            if (accepted) {
                result.diagnostics.windows.push_back(std::move(report));
                n1 = n2;
                break;
            }
            if (!diverged) throw SolverError("picard iteration cap exceeded without convergence");
            if (W == 1)
                throw SolverError(
                    "picard window shrank to a single step and still diverges; the "
                    "reintroduction rate is not Lipschitz at this radius or the solution "
                    "is blowing up");
            ++retries;
            if (retries > options.max_window_retries)
                throw SolverError("picard window retry budget exhausted");
            forced_cap = std::max(1, W / 2);
            r *= 2.0;
        }
    }

    result.diagnostics.kernel_bound = K_bound;
    result.diagnostics.zeta_norm = zeta_norm;
    result.diagnostics.lipschitz = lipschitz_xbeta(maps.coeffs().reintroduction, mu_norm + 1.0);
    result.diagnostics.tau_max = tau_max;
    result.diagnostics.tau_delta_min = tau_d;
    result.diagnostics.dt = dt;
    result.diagnostics.maturity_nodes = (int)mgrid.size();
    result.diagnostics.horizon = nsteps * dt;

    double residual = 0.0;
    for (std::size_t w = 0; w < result.diagnostics.windows.size(); ++w) {
        const int rn1 = (int)std::llround(result.diagnostics.windows[w].t_begin / dt);
        const int rn2 = (int)std::llround(result.diagnostics.windows[w].t_end / dt);
        engine.prepare_window(rn1, rn2);
        engine.sweep(field, scratch, rn1, rn2);
        for (int n = rn1 + 1; n <= rn2; ++n)
            for (int j = 0; j < field.nm(); ++j)
                residual = std::max(residual,
                                    std::abs(scratch.at(hist + n, j) - field.at(hist + n, j)));
    }
    result.diagnostics.residual_sup = residual;

    result.P = engine.proliferating(field);
    result.N = std::move(field);
    return result;
}

}  // namespace matpop
