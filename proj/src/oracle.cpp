#include "eaqec/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "json.hpp"

namespace eaqec {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) {
    throw std::invalid_argument(message);
  }
}

CMatrix random_complex(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  CMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      m(i, j) = Complex(gauss(rng), gauss(rng));
    }
  }
  return m;
}

// Entrywise Wirtinger gradient of a scalar functional by central differences:
// independent real and imaginary perturbations combined as (d/dx - i d/dy)/2.
CMatrix numeric_gradient(const std::function<Complex(const CMatrix&)>& f,
                         const CMatrix& z) {
  const double h = 1e-5;
  CMatrix grad(z.rows(), z.cols());
  for (int i = 0; i < z.rows(); ++i) {
    for (int j = 0; j < z.cols(); ++j) {
      CMatrix probe = z;
      probe(i, j) = z(i, j) + Complex(h, 0.0);
      const Complex fxp = f(probe);
      probe(i, j) = z(i, j) - Complex(h, 0.0);
      const Complex fxm = f(probe);
      probe(i, j) = z(i, j) + Complex(0.0, h);
      const Complex fyp = f(probe);
      probe(i, j) = z(i, j) - Complex(0.0, h);
      const Complex fym = f(probe);
      const Complex gx = (fxp - fxm) / (2.0 * h);
      const Complex gy = (fyp - fym) / (2.0 * h);
      grad(i, j) = (gx - Complex(0.0, 1.0) * gy) / 2.0;
    }
  }
  return grad;
}

double relative_error(const CMatrix& numeric, const CMatrix& exact) {
  const double scale = std::max(1.0, exact.cwiseAbs().maxCoeff());
  return (numeric - exact).cwiseAbs().maxCoeff() / scale;
}

double trace_sqrt_clamped(const CMatrix& m) {
  const EighResult eig = eigh(m);
  double total = 0.0;
  for (int i = 0; i < eig.values.size(); ++i) {
    total += std::sqrt(std::max(eig.values[i], 0.0));
  }
  return total;
}

}  // namespace

std::vector<GradCheckReport> check_trace_gradients(std::mt19937_64& rng,
                                                   int trials) {
  require(trials >= 1, "check_trace_gradients: trials must be at least 1");
  std::vector<GradCheckReport> reports;
  const int sizes[] = {3, 4};

  struct Identity {
    const char* name;
    // Returns (numeric gradient, exact gradient) for one random instance.
    std::function<std::pair<CMatrix, CMatrix>(int, std::mt19937_64&)> run;
    std::function<std::vector<int>(int)> dims;
  };

  const std::vector<Identity> identities = {
      {"d2a",
       [](int n, std::mt19937_64& r) {
         const CMatrix a = random_complex(n, n, r);
         const CMatrix z = random_complex(n, n, r);
         auto f = [&a](const CMatrix& zz) { return (a * zz).trace(); };
         return std::make_pair(numeric_gradient(f, z),
                               CMatrix(a.transpose()));
       },
       [](int n) { return std::vector<int>{n, n}; }},
      {"d2b",
       [](int n, std::mt19937_64& r) {
         const CMatrix a = random_complex(n, n, r);
         const CMatrix z = random_complex(n, n, r);
         auto f = [&a](const CMatrix& zz) { return (a * zz.adjoint()).trace(); };
         return std::make_pair(numeric_gradient(f, z),
                               CMatrix(CMatrix::Zero(n, n)));
       },
       [](int n) { return std::vector<int>{n, n}; }},
      {"d4a",
       [](int n, std::mt19937_64& r) {
         const CMatrix z = random_complex(n, n, r);
         auto f = [](const CMatrix& zz) { return (zz * zz.adjoint()).trace(); };
         return std::make_pair(numeric_gradient(f, z),
                               CMatrix(z.conjugate()));
       },
       [](int n) { return std::vector<int>{n, n}; }},
      {"d4b",
       [](int n, std::mt19937_64& r) {
         const CMatrix a = random_complex(n, n, r);
         const CMatrix z = random_complex(n, n, r);
         auto f = [&a](const CMatrix& zz) {
           return (a * zz.adjoint() * zz).trace();
         };
         return std::make_pair(numeric_gradient(f, z),
                               CMatrix(z.conjugate() * a.transpose()));
       },
       [](int n) { return std::vector<int>{n, n}; }},
      {"d5",
       [](int n, std::mt19937_64& r) {
         const CMatrix a = random_complex(2 * n, 2 * n, r);
         const CMatrix z = random_complex(n, n, r);
         const CMatrix eye2 = CMatrix::Identity(2, 2);
         auto f = [&a, &eye2](const CMatrix& zz) {
           return (a * kron(zz, eye2)).trace();
         };
         const CMatrix exact =
             partial_trace(a, {n, 2}, {0}).transpose();
         return std::make_pair(numeric_gradient(f, z), exact);
       },
       [](int n) { return std::vector<int>{n, 2 * n}; }},
  };

  for (const Identity& identity : identities) {
    for (int n : sizes) {
      GradCheckReport report;
      report.identity_name = identity.name;
      report.matrix_dims = identity.dims(n);
      for (int t = 0; t < trials; ++t) {
        const auto [numeric, exact] = identity.run(n, rng);
        report.max_rel_error =
            std::max(report.max_rel_error, relative_error(numeric, exact));
      }
      report.passed = report.max_rel_error <= 1e-5;
      reports.push_back(std::move(report));
    }
  }
  return reports;
}

GammaGridResult gamma_grid_search(const KrausChannel& e, double resolution) {
  require(std::isfinite(resolution) && resolution > 0.0,
          "gamma_grid_search: resolution must be positive");
  require(e.m() <= 2,
          "gamma_grid_search: at most two Kraus operators supported");

  if (e.m() == 1) {
    CMatrix one = CMatrix::Constant(1, 1, Complex(1.0, 0.0));
    GammaMatrix gamma(one);
    const double objective = gamma_objective(gamma, e);
    return GammaGridResult{std::move(gamma), objective};
  }

  const CMatrix p_op = e.kraus[0] * e.kraus[0].adjoint();
  const CMatrix q_op = e.kraus[1] * e.kraus[1].adjoint();
  const CMatrix s_op = e.kraus[0] * e.kraus[1].adjoint();
  // M(Gamma) = base + z*axis + x*hx + y*hy in Bloch coordinates.
  const CMatrix base = 0.5 * (p_op + q_op);
  const CMatrix axis = 0.5 * (p_op - q_op);
  const CMatrix hx = 0.5 * (s_op + s_op.adjoint());
  const CMatrix hy =
      Complex(0.0, 0.5) * (s_op.adjoint() - s_op);

  const int steps = static_cast<int>(std::floor(2.0 / resolution + 0.5));
  require(steps >= 1, "gamma_grid_search: resolution too coarse");

  double best_objective = -1.0;
  double best_x = 0.0, best_y = 0.0, best_z = 0.0;
  const bool fast = e.dim == 2;

  for (int iz = 0; iz <= steps; ++iz) {
    const double z = -1.0 + iz * resolution;
    const CMatrix mz = base + z * axis;
    for (int iy = 0; iy <= steps; ++iy) {
      const double y = -1.0 + iy * resolution;
      const double ball_zy = z * z + y * y;
      if (ball_zy > 1.0 + 1e-9) {
        continue;
      }
      const CMatrix mzy = mz + y * hy;
      if (fast) {
        const double b00 = mzy(0, 0).real();
        const double b11 = mzy(1, 1).real();
        const Complex b01 = mzy(0, 1);
        const double a00 = hx(0, 0).real();
        const double a11 = hx(1, 1).real();
        const Complex a01 = hx(0, 1);
        for (int ix = 0; ix <= steps; ++ix) {
          const double x = -1.0 + ix * resolution;
          if (ball_zy + x * x > 1.0 + 1e-9) {
            continue;
          }
          const double m00 = b00 + x * a00;
          const double m11 = b11 + x * a11;
          const double re01 = b01.real() + x * a01.real();
          const double im01 = b01.imag() + x * a01.imag();
          const double det = m00 * m11 - (re01 * re01 + im01 * im01);
          const double trace = m00 + m11;
          const double objective =
              std::sqrt(std::max(trace + 2.0 * std::sqrt(std::max(det, 0.0)),
                                 0.0));
          if (objective > best_objective) {
            best_objective = objective;
            best_x = x;
            best_y = y;
            best_z = z;
          }
        }
      } else {
        for (int ix = 0; ix <= steps; ++ix) {
          const double x = -1.0 + ix * resolution;
          if (ball_zy + x * x > 1.0 + 1e-9) {
            continue;
          }
          const double objective = trace_sqrt_clamped(mzy + x * hx);
          if (objective > best_objective) {
            best_objective = objective;
            best_x = x;
            best_y = y;
            best_z = z;
          }
        }
      }
    }
  }

  // Round-off can leave the winner a hair outside the ball; pull it back in
  // before building the density matrix.
  const double radius =
      std::sqrt(best_x * best_x + best_y * best_y + best_z * best_z);
  if (radius > 1.0) {
    best_x /= radius;
    best_y /= radius;
    best_z /= radius;
  }
  CMatrix gamma(2, 2);
  gamma(0, 0) = 0.5 * (1.0 + best_z);
  gamma(1, 1) = 0.5 * (1.0 - best_z);
  gamma(0, 1) = Complex(0.5 * best_x, -0.5 * best_y);
  gamma(1, 0) = Complex(0.5 * best_x, 0.5 * best_y);
  return GammaGridResult{GammaMatrix(std::move(gamma)), best_objective};
}

double random_search_fidelity(const KrausChannel& e, const SystemLayout& layout,
                              const CMatrix& l_dat, int samples,
                              std::mt19937_64& rng,
                              const RandomSearchSetup& setup) {
  require(samples >= 1, "random_search_fidelity: samples must be at least 1");
  require(e.dim == layout.dim(),
          "random_search_fidelity: channel dimension must match the layout");
  const int d = layout.dim();
  const CMatrix u =
      setup.u.size() > 0 ? setup.u : CMatrix(CMatrix::Identity(d, d));
  const CMatrix i_rec = CMatrix::Identity(layout.d_rec, layout.d_rec);

  double best = 0.0;
  const auto consider = [&](const CMatrix& c_prime, const CMatrix& r_stack) {
    const CMatrix c_full = kron(c_prime, i_rec);
    best = std::max(best, fidelity_data(r_stack, e, c_full, u, layout,
                                        setup.output_factor, l_dat));
  };

  consider(CMatrix::Identity(layout.d_code(), layout.d_code()),
           CMatrix::Identity(d, d));
  for (const auto& [c_prime, r_stack] : setup.injected) {
    consider(c_prime, r_stack);
  }
  for (int s = 1; s < samples; ++s) {
    const CMatrix c_prime = haar_random_unitary(layout.d_code(), rng);
    const CMatrix r = haar_random_unitary(d, rng);
    consider(c_prime, r);
  }
  return best;
}

std::string reports_to_json(const std::vector<GradCheckReport>& reports) {
  nlohmann::json out = nlohmann::json::array();
  for (const GradCheckReport& report : reports) {
    out.push_back({{"identity", report.identity_name},
                   {"matrix_dims", report.matrix_dims},
                   {"max_rel_error", report.max_rel_error},
                   {"passed", report.passed}});
  }
  return out.dump(2);
}

}  // namespace eaqec
