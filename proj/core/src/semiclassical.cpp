#include "conormal_lab/semiclassical.hpp"

#include <algorithm>
#include <cmath>

#include "conormal_lab/rng.hpp"

namespace clab::semiclassical {

using conormal::MeasureTag;
using geometry::make_phase_point;
using geometry::ModelKind;
using spectral::EigenMode;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

bool is_power_of_two(int g) { return g > 0 && (g & (g - 1)) == 0; }

// Iterative radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * kPi / double(len) * (inverse ? 1.0 : -1.0);
        std::complex<double> wl = std::polar(1.0, ang);
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w = 1.0;
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& z : a) z /= double(n);
}

void fft2(Grid& g, int G, bool inverse) {
    std::vector<std::complex<double>> line(G);
    for (int r = 0; r < G; ++r) {
        std::copy(g.begin() + std::size_t(r) * G, g.begin() + std::size_t(r + 1) * G,
                  line.begin());
        fft(line, inverse);
        std::copy(line.begin(), line.end(), g.begin() + std::size_t(r) * G);
    }
    for (int c = 0; c < G; ++c) {
        for (int r = 0; r < G; ++r) line[r] = g[std::size_t(r) * G + c];
        fft(line, inverse);
        for (int r = 0; r < G; ++r) g[std::size_t(r) * G + c] = line[r];
    }
}

int signed_mode(int k, int G) { return k <= G / 2 ? k : k - G; }

struct SpectrumEntry {
    int m1, m2;
    std::complex<double> coeff;
};

struct ModeSpectrum {
    Grid values;
    std::vector<SpectrumEntry> entries;
};

void check_grid(double h, int G) {
    if (!is_power_of_two(G)) throw GridTooCoarse("grid size must be a power of two");
    double need = 4.0 / (2.0 * kPi * h);  // four points per shortest wavelength
    if (double(G) < need - 1e-9)
        throw GridTooCoarse("grid does not resolve the mode oscillation");
}

ModeSpectrum spectrum_of(const Grid& u, int G) {
    ModeSpectrum sp;
    sp.values = u;
    Grid hat = u;
    fft2(hat, G, false);
    double scale = 1.0 / (double(G) * G);
    double top = 0.0;
    for (auto& z : hat) {
        z *= scale;
        top = std::max(top, std::abs(z));
    }
    for (int r = 0; r < G; ++r)
        for (int c = 0; c < G; ++c) {
            std::complex<double> z = hat[std::size_t(r) * G + c];
            if (std::abs(z) > 1e-13 * top)
                sp.entries.push_back({signed_mode(r, G), signed_mode(c, G), z});
        }
    return sp;
}

Grid apply_to_spectrum(const Symbol& a, double h, const ModeSpectrum& sp, int G) {
    Grid out(std::size_t(G) * G, 0.0);
    std::vector<std::complex<double>> row_phase(G), col_phase(G);
    for (const auto& e : sp.entries) {
        Vec xi{2.0 * kPi * h * e.m1, 2.0 * kPi * h * e.m2};
        if (xi.norm() > a.support_radius) continue;
        for (int r = 0; r < G; ++r) row_phase[r] = std::polar(1.0, 2.0 * kPi * e.m1 * r / double(G));
        for (int c = 0; c < G; ++c) col_phase[c] = std::polar(1.0, 2.0 * kPi * e.m2 * c / double(G));
        for (int r = 0; r < G; ++r) {
            double x1 = double(r) / G;
            for (int c = 0; c < G; ++c) {
                Vec x{x1, double(c) / G};
                out[std::size_t(r) * G + c] +=
                    e.coeff * a.eval(x, xi) * row_phase[r] * col_phase[c];
            }
        }
    }
    return out;
}

std::complex<double> grid_pairing(const Grid& u, const Grid& v, int G) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += std::conj(u[i]) * v[i];
    return acc / (double(G) * G);
}

// Lawson-Hanson nonnegative least squares; dense column-major A (rows x cols).
std::vector<double> nnls(const std::vector<double>& A, int rows, int cols,
                         const std::vector<double>& b) {
    std::vector<double> x(cols, 0.0);
    std::vector<bool> passive(cols, false);
    auto residual_gradient = [&](const std::vector<double>& xx) {
        std::vector<double> r(rows);
        for (int i = 0; i < rows; ++i) {
            double s = b[i];
            for (int j = 0; j < cols; ++j) s -= A[std::size_t(j) * rows + i] * xx[j];
            r[i] = s;
        }
        std::vector<double> w(cols);
        for (int j = 0; j < cols; ++j) {
            double s = 0;
            for (int i = 0; i < rows; ++i) s += A[std::size_t(j) * rows + i] * r[i];
            w[j] = s;
        }
        return w;
    };
    auto solve_passive = [&]() {
        std::vector<int> idx;
        for (int j = 0; j < cols; ++j)
            if (passive[j]) idx.push_back(j);
        const int m = static_cast<int>(idx.size());
        std::vector<double> z(cols, 0.0);
        if (m == 0) return z;
        // Normal equations with a tiny ridge, solved by Cholesky.
        std::vector<double> G(std::size_t(m) * m, 0.0), rhs(m, 0.0);
        for (int p = 0; p < m; ++p) {
            for (int q = p; q < m; ++q) {
                double s = 0;
                for (int i = 0; i < rows; ++i)
                    s += A[std::size_t(idx[p]) * rows + i] * A[std::size_t(idx[q]) * rows + i];
                G[std::size_t(p) * m + q] = G[std::size_t(q) * m + p] = s;
            }
            G[std::size_t(p) * m + p] += 1e-12;
            double s = 0;
            for (int i = 0; i < rows; ++i) s += A[std::size_t(idx[p]) * rows + i] * b[i];
            rhs[p] = s;
        }
        std::vector<double> L(std::size_t(m) * m, 0.0);
        for (int p = 0; p < m; ++p) {
            for (int q = 0; q <= p; ++q) {
                double s = G[std::size_t(p) * m + q];
                for (int k = 0; k < q; ++k)
                    s -= L[std::size_t(p) * m + k] * L[std::size_t(q) * m + k];
                if (p == q)
                    L[std::size_t(p) * m + p] = std::sqrt(std::max(s, 1e-300));
                else
                    L[std::size_t(p) * m + q] = s / L[std::size_t(q) * m + q];
            }
        }
        std::vector<double> y(m);
        for (int p = 0; p < m; ++p) {
            double s = rhs[p];
            for (int k = 0; k < p; ++k) s -= L[std::size_t(p) * m + k] * y[k];
            y[p] = s / L[std::size_t(p) * m + p];
        }
        std::vector<double> zz(m);
        for (int p = m - 1; p >= 0; --p) {
            double s = y[p];
            for (int k = p + 1; k < m; ++k) s -= L[std::size_t(k) * m + p] * zz[k];
            zz[p] = s / L[std::size_t(p) * m + p];
        }
        for (int p = 0; p < m; ++p) z[idx[p]] = zz[p];
        return z;
    };

    const double tol = 1e-10;
    for (int outer = 0; outer < 4 * cols; ++outer) {
        std::vector<double> w = residual_gradient(x);
        int best = -1;
        double best_w = tol;
        for (int j = 0; j < cols; ++j)
            if (!passive[j] && w[j] > best_w) {
                best_w = w[j];
                best = j;
            }
        if (best < 0) break;
        passive[best] = true;
        std::vector<double> z = solve_passive();
        for (int inner = 0; inner < 4 * cols; ++inner) {
            double alpha = 1.0;
            bool clipped = false;
            for (int j = 0; j < cols; ++j) {
                if (!passive[j] || z[j] > 0) continue;
                double step = x[j] / (x[j] - z[j]);
                if (step < alpha) alpha = step;
                clipped = true;
            }
            if (!clipped) break;
            for (int j = 0; j < cols; ++j)
                if (passive[j]) x[j] += alpha * (z[j] - x[j]);
            for (int j = 0; j < cols; ++j)
                if (passive[j] && x[j] <= tol) {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            z = solve_passive();
        }
        x = z;
        for (int j = 0; j < cols; ++j) x[j] = std::max(x[j], 0.0);
    }
    return x;
}

}  // namespace

double radial_bump(double r, double center, double width) {
    double s = (r - center) / width;
    if (std::abs(s) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

Grid mode_grid(const EigenMode& mode, int G) {
    Grid u(std::size_t(G) * G);
    for (int r = 0; r < G; ++r)
        for (int c = 0; c < G; ++c)
            u[std::size_t(r) * G + c] = mode.eval(Vec{double(r) / G, double(c) / G});
    return u;
}

Grid quantize_apply(const Symbol& a, double h, const Grid& u, int G) {
    if (static_cast<std::size_t>(G) * G != u.size())
        throw Error("grid function size does not match G x G");
    check_grid(h, G);
    ModeSpectrum sp = spectrum_of(u, G);
    return apply_to_spectrum(a, h, sp, G);
}

PairingSequence defect_pairing(const Symbol& a, const std::vector<EigenMode>& family, int G) {
    if (family.empty()) throw Error("defect pairing needs at least one mode");
    PairingSequence seq;
    for (const EigenMode& mode : family) {
        if (mode.kind() != spectral::ModeKind::TorusPlaneWave)
            throw ModelMismatch("defect pairings are computed for torus plane waves");
        check_grid(mode.h(), G);
        Grid u = mode_grid(mode, G);
        ModeSpectrum sp = spectrum_of(u, G);
        Grid v = apply_to_spectrum(a, mode.h(), sp, G);
        seq.values.push_back(grid_pairing(u, v, G));
    }
    const std::size_t n = seq.values.size();
    if (n == 1) {
        seq.limit = seq.values[0];
    } else {
        double h1 = family[n - 2].h(), h2 = family[n - 1].h();
        seq.limit = seq.values[n - 1] +
                    (seq.values[n - 1] - seq.values[n - 2]) * (h2 / (h1 - h2));
    }
    return seq;
}

WeightedSampleSet estimate_defect_measure(const std::vector<EigenMode>& family,
                                          const MuEstimateOptions& opts) {
    if (family.empty()) throw Error("measure estimation needs a mode family");
    const int G = opts.grid;
    const int nx = opts.x_cells, na = opts.angle_bins;
    const int n_cells = nx * nx * na;

    // Spatial basis functions: 1, cos/sin(2 pi p.x) over a half-lattice.
    struct XFun {
        int p1, p2;
        bool use_sin;
    };
    std::vector<XFun> xfuns{{0, 0, false}};
    for (int p1 = -opts.max_x_mode; p1 <= opts.max_x_mode; ++p1)
        for (int p2 = -opts.max_x_mode; p2 <= opts.max_x_mode; ++p2) {
            if (p1 < 0 || (p1 == 0 && p2 <= 0)) continue;
            xfuns.push_back({p1, p2, false});
            xfuns.push_back({p1, p2, true});
        }
    struct AFun {
        int q;
        bool use_sin;
    };
    std::vector<AFun> afuns{{0, false}};
    for (int q = 1; q <= opts.max_angle_mode; ++q) {
        afuns.push_back({q, false});
        afuns.push_back({q, true});
    }

    auto xfun_eval = [](const XFun& f, const Vec& x) {
        double ph = 2.0 * kPi * (f.p1 * x[0] + f.p2 * x[1]);
        return f.use_sin ? std::sin(ph) : std::cos(ph);
    };
    auto afun_eval = [](const AFun& f, double theta) {
        return f.use_sin ? std::sin(f.q * theta) : std::cos(f.q * theta);
    };

    // Precompute mode spectra once; reuse across the basis.
    std::vector<ModeSpectrum> spectra;
    std::vector<double> hs;
    for (const EigenMode& mode : family) {
        if (mode.kind() != spectral::ModeKind::TorusPlaneWave)
            throw ModelMismatch("measure estimation expects torus plane waves");
        check_grid(mode.h(), G);
        spectra.push_back(spectrum_of(mode_grid(mode, G), G));
        hs.push_back(mode.h());
    }

    // Radial shells: the on-shell bump carries the reconstruction; the
    // off-shell control shell must pair to zero for genuine quasimodes, which
    // the least squares verifies through its zero rows.
    struct Shell {
        double center, width;
    };
    const Shell shells[2] = {{1.0, 0.5}, {0.45, 0.2}};

    const int rows = static_cast<int>(xfuns.size() * afuns.size()) * 2;
    std::vector<double> A(std::size_t(rows) * n_cells, 0.0);
    std::vector<double> b(rows, 0.0);
    int row = 0;
    for (const Shell& shell : shells) {
        for (const XFun& xf : xfuns) {
            for (const AFun& af : afuns) {
                Symbol a;
                a.support_radius = shell.center + shell.width;
                a.sup_bound = 1.0;
                a.eval = [&xf, &af, &xfun_eval, &afun_eval, &shell](
                             const Vec& x, const Vec& xi) -> std::complex<double> {
                    double bump = radial_bump(xi.norm(), shell.center, shell.width);
                    if (bump == 0.0) return 0.0;
                    double theta = std::atan2(xi[1], xi[0]);
                    return xfun_eval(xf, x) * afun_eval(af, theta) * bump;
                };
                // Pairings across the family, Richardson limit.
                std::vector<std::complex<double>> vals;
                for (std::size_t k = 0; k < spectra.size(); ++k)
                    vals.push_back(
                        grid_pairing(spectra[k].values,
                                     apply_to_spectrum(a, hs[k], spectra[k], G), G));
                std::complex<double> limit = vals.back();
                if (vals.size() > 1) {
                    double h1 = hs[vals.size() - 2], h2 = hs.back();
                    limit =
                        vals.back() + (vals.back() - vals[vals.size() - 2]) * (h2 / (h1 - h2));
                }
                b[row] = limit.real();
                // Cells live on the unit cosphere, where only the on-shell
                // shell is active.
                double shell_value = radial_bump(1.0, shell.center, shell.width);
                if (shell_value != 0.0) {
                    for (int ix = 0; ix < nx; ++ix)
                        for (int iy = 0; iy < nx; ++iy)
                            for (int ia = 0; ia < na; ++ia) {
                                int cell = (ix * nx + iy) * na + ia;
                                Vec xc{(ix + 0.5) / nx, (iy + 0.5) / nx};
                                double theta = 2.0 * kPi * ia / na;  // centers include 0
                                A[std::size_t(cell) * rows + row] =
                                    xfun_eval(xf, xc) * afun_eval(af, theta) * shell_value;
                            }
                }
                ++row;
            }
        }
    }

    std::vector<double> masses = nnls(A, rows, n_cells, b);
    double total = 0.0;
    for (double& m : masses) {
        if (m < 1e-10) m = 0.0;
        total += m;
    }
    if (total <= 0.0) throw Error("estimated measure has no mass");

    // Expand cells into stratified samples.
    WeightedSampleSet out;
    out.tag = MeasureTag::Mu;
    out.total_mass = total;
    const auto model = ManifoldModel::torus(2);
    std::vector<std::size_t> counts(n_cells, 0);
    std::size_t assigned = 0;
    for (int c = 0; c < n_cells; ++c) {
        counts[c] = static_cast<std::size_t>(std::floor(opts.n_samples * masses[c] / total));
        assigned += counts[c];
    }
    for (int c = 0; assigned < opts.n_samples; c = (c + 1) % n_cells) {
        if (masses[c] > 0) {
            ++counts[c];
            ++assigned;
        }
    }
    std::size_t sample_index = 0;
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < nx; ++iy)
            for (int ia = 0; ia < na; ++ia) {
                int cell = (ix * nx + iy) * na + ia;
                if (counts[cell] == 0 || masses[cell] <= 0.0) continue;
                double theta = 2.0 * kPi * ia / na;
                Vec xi{std::cos(theta), std::sin(theta)};
                double w = masses[cell] / double(counts[cell]);
                // x1 stratified at sample granularity inside the cell, x2 in
                // round-robin strata aligned with the 128 default parameter
                // bins of a hypersurface partition.
                const std::size_t sub = std::max<std::size_t>(1, 128 / nx);
                for (std::size_t k = 0; k < counts[cell]; ++k) {
                    StreamRng rng(opts.seed, sample_index++);
                    double x2 = (double(k % sub) + rng.uniform()) / double(sub);
                    Vec x{(ix + (double(k) + rng.uniform()) / double(counts[cell])) / nx,
                          (iy + x2) / nx};
                    out.samples.push_back({make_phase_point(model, x, xi), w, 0.0, 0.0});
                }
            }
    return out;
}

BoundCheckReport bound_check(const Submanifold& H, std::span<const spectral::Interval> A,
                             const spectral::Weight& w,
                             const std::vector<EigenMode>& family, const CellPartition& cells,
                             const BoundCheckOptions& opts) {
    if (H.model().kind() != ModelKind::FlatTorus)
        throw ModelMismatch("the bound check runs on the torus");
    const int k = H.codim();
    BoundCheckReport rep;
    for (const EigenMode& mode : family) {
        std::complex<double> avg = spectral::average(H, A, w, mode);
        rep.h_values.push_back(mode.h());
        rep.lhs.push_back(std::pow(mode.h(), (k - 1) / 2.0) * std::abs(avg));
    }
    rep.lhs_tail = rep.lhs.back();

    WeightedSampleSet mu = estimate_defect_measure(family, opts.mu);
    std::vector<double> masses =
        conormal::flowout_cell_masses(mu, H, opts.t0, cells, opts.eps);

    rep.f_cells.assign(masses.size(), 0.0);
    double rhs = 0.0;
    bool any_density = false;
    for (std::size_t c = 0; c < masses.size(); ++c) {
        rep.mu_H_mass += masses[c];
        double sigma = cells.sigma_mass(H, static_cast<int>(c));
        rep.f_cells[c] = masses[c] / sigma;
        if (rep.f_cells[c] <= 0.0) continue;
        any_density = true;
        double u, fiber;
        cells.cell_center(H, static_cast<int>(c), u, fiber);
        bool in_A = false;
        for (const auto& iv : A)
            if (u >= iv.a && u <= iv.b) in_A = true;
        if (!in_A) continue;
        double speed = conormal::hp_r(H, H.conormal_point(u, fiber));
        rhs += std::abs(w(u)) * std::sqrt(rep.f_cells[c] / speed) * sigma;
    }
    rep.rhs = rhs;
    rep.singular_only = !any_density;
    if (rhs > 0.0) {
        for (double l : rep.lhs) rep.ratio_max = std::max(rep.ratio_max, l / rhs);
    }
    return rep;
}

}  // namespace clab::semiclassical
