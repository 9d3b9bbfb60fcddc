#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>
#include <string>

#include "aif/csv.hpp"
#include "aif/errors.hpp"
#include "aif/rng.hpp"
#include "aif/suite.hpp"

namespace aif::suite {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::uint64_t kSuiteRoot = 0xA1F0'07B0'B5EE'D001ULL;

// Oscillation transform, applied per coordinate.
double t_osz(double x) {
  if (x == 0.0) return 0.0;
  const double xh = std::log(std::abs(x));
  const double c1 = x > 0.0 ? 10.0 : 5.5;
  const double c2 = x > 0.0 ? 7.9 : 3.1;
  const double v = std::exp(xh + 0.049 * (std::sin(c1 * xh) + std::sin(c2 * xh)));
  return x > 0.0 ? v : -v;
}

Vector t_osz(const Vector& x) { return x.unaryExpr([](double v) { return t_osz(v); }); }

// Asymmetry transform with exponent beta.
Vector t_asy(const Vector& x, double beta) {
  const auto d = x.size();
  Vector out = x;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (x[i] > 0.0) {
      const double frac = d > 1 ? static_cast<double>(i) / static_cast<double>(d - 1) : 0.0;
      out[i] = std::pow(x[i], 1.0 + beta * frac * std::sqrt(x[i]));
    }
  }
  return out;
}

// Diagonal of the conditioning matrix Lambda^alpha.
Vector lambda(double alpha, int d) {
  Vector out(d);
  for (int i = 0; i < d; ++i) {
    const double frac = d > 1 ? static_cast<double>(i) / static_cast<double>(d - 1) : 0.0;
    out[i] = std::pow(alpha, 0.5 * frac);
  }
  return out;
}

double f_pen(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) {
    const double e = std::abs(v) - 5.0;
    if (e > 0.0) s += e * e;
  }
  return s;
}

double f_pen(const Vector& x) { return f_pen(std::span<const double>(x.data(), x.size())); }

// Orthogonal matrix from the QR factorisation of a seeded Gaussian matrix,
// with column signs fixed by the diagonal of R.
Matrix random_rotation(int d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

double rastrigin_term(const Vector& z) {
  double s = 0.0;
  for (double v : z) s += 1.0 - std::cos(kTwoPi * v);
  return 10.0 * s;
}

double rosenbrock_sum(const Vector& z) {
  double s = 0.0;
  for (Eigen::Index i = 0; i + 1 < z.size(); ++i) {
    const double a = z[i] * z[i] - z[i + 1];
    const double b = z[i] - 1.0;
    s += 100.0 * a * a + b * b;
  }
  return s;
}

double schaffer(const Vector& z) {
  const auto d = z.size();
  double s = 0.0;
  for (Eigen::Index i = 0; i + 1 < d; ++i) {
    const double si = std::sqrt(z[i] * z[i] + z[i + 1] * z[i + 1]);
    const double root = std::sqrt(si);
    const double sn = std::sin(50.0 * std::pow(si, 0.2));
    s += root + root * sn * sn;
  }
  const double m = s / static_cast<double>(d - 1);
  return m * m;
}

constexpr double kSchwefelOpt = 4.2096874633 / 2.0;
constexpr double kLunacekMu0 = 2.5;

}  // namespace

struct ProblemInstance::Data {
  InstanceKey key;
  std::uint64_t seed = 0;
  Vector shift;
  double f_offset = 0.0;
  Matrix rot_r;
  Matrix rot_q;
  Vector signs;  // random +-1 vector (Schwefel, Lunacek, linear slope direction)
  double rosen_scale = 1.0;

  // Schwefel / Lunacek: canonical optimum and the unshifted value there.
  Vector canonical_opt;
  double canonical_value = 0.0;

  // Gallagher peaks, stored already rotated by R.
  Matrix peaks_rotated;
  Vector peak_weights;
  Matrix peak_conditioning;  // one row of diagonal weights per peak

  double raw(const Vector& x) const;
  double schwefel_raw(const Vector& y) const;
};

double ProblemInstance::Data::schwefel_raw(const Vector& y) const {
  const int d = key.dimension;
  const Vector two_abs = 2.0 * canonical_opt.cwiseAbs();
  Vector xh = 2.0 * signs.cwiseProduct(y);
  Vector zh = xh;
  for (int i = 1; i < d; ++i) zh[i] = xh[i] + 0.25 * (xh[i - 1] - two_abs[i - 1]);
  const Vector z = 100.0 * (lambda(10.0, d).cwiseProduct(zh - two_abs) + two_abs);
  double s = 0.0;
  for (double v : z) s += v * std::sin(std::sqrt(std::abs(v)));
  return -s / (100.0 * d) + 4.189828872724339 + 100.0 * f_pen(Vector(z / 100.0));
}

double ProblemInstance::Data::raw(const Vector& x) const {
  const int d = key.dimension;
  const Vector dx = x - shift;
  switch (key.problem_id) {
    case 1:
      return dx.squaredNorm();
    case 2: {
      const Vector z = t_osz(dx);
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += std::pow(10.0, 6.0 * i / (d - 1)) * z[i] * z[i];
      return s;
    }
    case 3: {
      const Vector z = lambda(10.0, d).cwiseProduct(t_asy(t_osz(dx), 0.2));
      return rastrigin_term(z) + z.squaredNorm();
    }
    case 4: {
      Vector z = t_osz(dx);
      for (int i = 0; i < d; ++i) {
        double s = std::pow(10.0, 0.5 * i / (d - 1));
        if (z[i] > 0.0 && i % 2 == 0) s *= 10.0;
        z[i] *= s;
      }
      return rastrigin_term(z) + z.squaredNorm() + 100.0 * f_pen(x);
    }
    case 5: {
      double s = 0.0;
      for (int i = 0; i < d; ++i) {
        const double slope = std::pow(10.0, static_cast<double>(i) / (d - 1));
        s += slope * std::max(0.0, signs[i] * (shift[i] - x[i]));
      }
      return s;
    }
    case 6: {
      const Vector z = rot_q * lambda(10.0, d).asDiagonal() * rot_r * dx;
      double s = 0.0;
      for (int i = 0; i < d; ++i) {
        const double w = z[i] * shift[i] > 0.0 ? 100.0 : 1.0;
        s += (w * z[i]) * (w * z[i]);
      }
      return std::pow(t_osz(s), 0.9);
    }
    case 7: {
      const Vector zh = lambda(10.0, d).cwiseProduct(rot_r * dx);
      Vector zt(d);
      for (int i = 0; i < d; ++i) {
        zt[i] = std::abs(zh[i]) > 0.5 ? std::floor(0.5 + zh[i]) : std::floor(0.5 + 10.0 * zh[i]) / 10.0;
      }
      const Vector z = rot_q * zt;
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += std::pow(10.0, 2.0 * i / (d - 1)) * z[i] * z[i];
      return 0.1 * std::max(std::abs(zh[0]) / 1e4, s) + f_pen(x);
    }
    case 8:
      return rosenbrock_sum((rosen_scale * dx).array() + 1.0);
    case 9:
      return rosenbrock_sum((rosen_scale * (rot_r * dx)).array() + 1.0);
    case 10: {
      const Vector z = t_osz(rot_r * dx);
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += std::pow(10.0, 6.0 * i / (d - 1)) * z[i] * z[i];
      return s;
    }
    case 11: {
      const Vector z = t_osz(rot_r * dx);
      return 1e6 * z[0] * z[0] + (z.squaredNorm() - z[0] * z[0]);
    }
    case 12: {
      const Vector z = rot_r * t_asy(rot_r * dx, 0.5);
      return z[0] * z[0] + 1e6 * (z.squaredNorm() - z[0] * z[0]);
    }
    case 13: {
      const Vector z = rot_q * lambda(10.0, d).asDiagonal() * rot_r * dx;
      return z[0] * z[0] + 100.0 * std::sqrt(std::max(0.0, z.tail(d - 1).squaredNorm()));
    }
    case 14: {
      const Vector z = rot_r * dx;
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += std::pow(std::abs(z[i]), 2.0 + 4.0 * i / (d - 1));
      return std::sqrt(s);
    }
    case 15: {
      const Vector z =
          rot_r * lambda(10.0, d).asDiagonal() * rot_q * t_asy(t_osz(rot_r * dx), 0.2);
      return rastrigin_term(z) + z.squaredNorm();
    }
    case 16: {
      const Vector z = rot_r * lambda(0.01, d).asDiagonal() * rot_q * t_osz(rot_r * dx);
      double f0 = 0.0;
      for (int k = 0; k < 12; ++k) {
        f0 += std::pow(0.5, k) * std::cos(kTwoPi * std::pow(3.0, k) * 0.5);
      }
      double s = 0.0;
      for (int i = 0; i < d; ++i) {
        double inner = 0.0;
        for (int k = 0; k < 12; ++k) {
          inner += std::pow(0.5, k) * std::cos(kTwoPi * std::pow(3.0, k) * (z[i] + 0.5));
        }
        s += inner - f0;
      }
      const double m = s / d;
      return 10.0 * m * m * m + 10.0 / d * f_pen(x);
    }
    case 17:
      return schaffer(lambda(10.0, d).cwiseProduct(rot_q * t_asy(rot_r * dx, 0.5))) +
             10.0 * f_pen(x);
    case 18:
      return schaffer(lambda(1000.0, d).cwiseProduct(rot_q * t_asy(rot_r * dx, 0.5))) +
             10.0 * f_pen(x);
    case 19: {
      const Vector z = (rosen_scale * (rot_r * dx)).array() + 1.0;
      double s = 0.0;
      for (int i = 0; i + 1 < d; ++i) {
        const double a = z[i] * z[i] - z[i + 1];
        const double b = z[i] - 1.0;
        const double si = 100.0 * a * a + b * b;
        s += si / 4000.0 + (1.0 - std::cos(si));
      }
      return 10.0 * s / (d - 1);
    }
    case 20:
      return schwefel_raw(dx + canonical_opt) - canonical_value;
    case 21:
    case 22: {
      const Vector xv = x;
      const Vector rx = rot_r * xv;
      double best = 0.0;
      for (Eigen::Index p = 0; p < peaks_rotated.rows(); ++p) {
        double q = 0.0;
        for (int j = 0; j < d; ++j) {
          const double e = rx[j] - peaks_rotated(p, j);
          q += peak_conditioning(p, j) * e * e;
        }
        best = std::max(best, peak_weights[p] * std::exp(-q / (2.0 * d)));
      }
      const double g = t_osz(std::max(0.0, 10.0 - best));
      return g * g + f_pen(x);
    }
    case 23: {
      const Vector z = rot_q * lambda(100.0, d).asDiagonal() * rot_r * dx;
      const double scale = 10.0 / (static_cast<double>(d) * d);
      const double expo = 10.0 / std::pow(static_cast<double>(d), 1.2);
      double prod = 1.0;
      for (int i = 0; i < d; ++i) {
        double s = 0.0;
        for (int j = 1; j <= 32; ++j) {
          const double p2 = std::ldexp(1.0, j);
          const double v = p2 * z[i];
          s += std::abs(v - std::nearbyint(v)) / p2;
        }
        prod *= std::pow(1.0 + (i + 1) * s, expo);
      }
      return scale * (prod - 1.0) + f_pen(x);
    }
    case 24: {
      const double dd = 1.0;
      const double s = 1.0 - 1.0 / (2.0 * std::sqrt(d + 20.0) - 8.2);
      const double mu1 = -std::sqrt((kLunacekMu0 * kLunacekMu0 - dd) / s);
      const Vector xh = 2.0 * signs.cwiseProduct(dx + canonical_opt);
      double s0 = 0.0;
      double s1 = 0.0;
      for (int i = 0; i < d; ++i) {
        s0 += (xh[i] - kLunacekMu0) * (xh[i] - kLunacekMu0);
        s1 += (xh[i] - mu1) * (xh[i] - mu1);
      }
      const Vector z = rot_q * lambda(100.0, d).asDiagonal() * rot_r *
                       (xh.array() - kLunacekMu0).matrix();
      return std::min(s0, dd * d + s * s1) + rastrigin_term(z) + 1e4 * f_pen(x);
    }
    default:
      throw ContractViolation("unknown problem id " + std::to_string(key.problem_id));
  }
}

ProblemInstance::ProblemInstance(int problem_id, int instance_id, int dimension) {
  if (problem_id < 1 || problem_id > kNumProblems) {
    throw ConfigError("problem_id " + std::to_string(problem_id) + " outside 1..24");
  }
  if (instance_id < 1) throw ConfigError("instance_id must be >= 1");
  if (dimension < 2) throw ConfigError("dimension must be >= 2");

  auto data = std::make_shared<Data>();
  data->key = {problem_id, instance_id, dimension};
  const std::uint64_t pi_seed =
      derive_seed(derive_seed(kSuiteRoot, static_cast<std::uint64_t>(problem_id)),
                  static_cast<std::uint64_t>(instance_id));
  data->seed = derive_seed(pi_seed, static_cast<std::uint64_t>(dimension));
  const int d = dimension;

  Rng shift_rng(derive_seed(data->seed, "shift"));
  data->shift.resize(d);
  for (int i = 0; i < d; ++i) data->shift[i] = shift_rng.uniform(-4.0, 4.0);

  // Offset depends on (problem, instance) only: Cauchy draw, clipped, two decimals.
  Rng offset_rng(derive_seed(pi_seed, "offset"));
  const double cauchy = std::tan(std::numbers::pi * (offset_rng.uniform() - 0.5));
  data->f_offset = std::round(100.0 * std::clamp(100.0 * cauchy, -1000.0, 1000.0)) / 100.0;

  data->rot_r = random_rotation(d, derive_seed(data->seed, "R"));
  data->rot_q = random_rotation(d, derive_seed(data->seed, "Q"));

  Rng sign_rng(derive_seed(data->seed, "signs"));
  data->signs.resize(d);
  for (int i = 0; i < d; ++i) data->signs[i] = sign_rng.uniform() < 0.5 ? -1.0 : 1.0;
  if (problem_id == 5) {
    for (int i = 0; i < d; ++i) data->signs[i] = data->shift[i] < 0.0 ? -1.0 : 1.0;
  }
  data->rosen_scale = std::max(1.0, std::sqrt(static_cast<double>(d)) / 8.0);

  if (problem_id == 20) {
    data->canonical_opt = kSchwefelOpt * data->signs;
    data->canonical_value = data->schwefel_raw(data->canonical_opt);
  } else if (problem_id == 24) {
    data->canonical_opt = (kLunacekMu0 / 2.0) * data->signs;
  } else {
    data->canonical_opt = Vector::Zero(d);
  }

  if (problem_id == 21 || problem_id == 22) {
    const bool many = problem_id == 21;
    const int n_peaks = many ? 101 : 21;
    const double peak_bound = many ? 5.0 : 4.9;
    Rng peak_rng(derive_seed(data->seed, "peaks"));
    Matrix peaks(n_peaks, d);
    peaks.row(0) = data->shift.transpose();
    for (int p = 1; p < n_peaks; ++p) {
      for (int j = 0; j < d; ++j) peaks(p, j) = peak_rng.uniform(-peak_bound, peak_bound);
    }
    // Same matrix-vector kernel as evaluate(), so peak 0 matches R*x_opt bit for bit.
    data->peaks_rotated.resize(n_peaks, d);
    for (int p = 0; p < n_peaks; ++p) {
      const Vector yp = peaks.row(p).transpose();
      data->peaks_rotated.row(p) = (data->rot_r * yp).transpose();
    }

    data->peak_weights.resize(n_peaks);
    data->peak_weights[0] = 10.0;
    for (int p = 1; p < n_peaks; ++p) {
      data->peak_weights[p] = 1.1 + 8.0 * (p - 1) / (n_peaks - 2);
    }

    std::vector<double> alphas(static_cast<std::size_t>(n_peaks - 1));
    for (int j = 0; j < n_peaks - 1; ++j) {
      alphas[static_cast<std::size_t>(j)] = std::pow(1000.0, 2.0 * j / (n_peaks - 2));
    }
    peak_rng.shuffle(std::span<double>(alphas));
    data->peak_conditioning.resize(n_peaks, d);
    std::vector<int> perm(static_cast<std::size_t>(d));
    for (int p = 0; p < n_peaks; ++p) {
      const double alpha =
          p == 0 ? (many ? 1000.0 : 1e6) : alphas[static_cast<std::size_t>(p - 1)];
      const Vector diag = lambda(alpha, d) / std::pow(alpha, 0.25);
      for (int j = 0; j < d; ++j) perm[static_cast<std::size_t>(j)] = j;
      peak_rng.shuffle(std::span<int>(perm));
      for (int j = 0; j < d; ++j) {
        data->peak_conditioning(p, j) = diag[perm[static_cast<std::size_t>(j)]];
      }
    }
  }
  data_ = std::move(data);
}

const InstanceKey& ProblemInstance::key() const { return data_->key; }

std::span<const double> ProblemInstance::shift() const {
  return {data_->shift.data(), static_cast<std::size_t>(data_->shift.size())};
}

double ProblemInstance::f_offset() const { return data_->f_offset; }

std::uint64_t ProblemInstance::seed() const { return data_->seed; }

double ProblemInstance::evaluate(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(data_->key.dimension)) {
    throw ContractViolation("evaluate: expected " + std::to_string(data_->key.dimension) +
                            " coordinates, got " + std::to_string(x.size()));
  }
  const Vector xv = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  return data_->raw(xv) + data_->f_offset;
}

double precision(const ProblemInstance& instance, double f_value) {
  return std::max(0.0, f_value - instance.f_offset());
}

std::vector<ProblemInstance> make_suite(const SuiteConfig& config) {
  if (config.problem_ids.empty() || config.instance_ids.empty()) {
    throw ConfigError("suite: problem and instance id sets must be non-empty");
  }
  for (int p : config.problem_ids) {
    if (p < 1 || p > kNumProblems) {
      throw ConfigError("suite: unknown problem_id " + std::to_string(p));
    }
  }
  const std::set<int> problems(config.problem_ids.begin(), config.problem_ids.end());
  const std::set<int> instances(config.instance_ids.begin(), config.instance_ids.end());

  std::vector<ProblemInstance> out;
  out.reserve(problems.size() * instances.size());
  for (int p : problems) {
    const std::size_t first = out.size();
    for (int i : instances) {
      out.emplace_back(p, i, config.dimension);
      for (std::size_t j = first; j + 1 < out.size(); ++j) {
        if (std::ranges::equal(out[j].shift(), out.back().shift())) {
          throw ContractViolation("suite: seed derivation produced identical shifts");
        }
      }
    }
  }
  return out;
}

std::string_view function_name(int problem_id) {
  static constexpr std::string_view names[] = {
      "Sphere",
      "Separable Ellipsoidal",
      "Rastrigin",
      "Bueche-Rastrigin",
      "Linear Slope",
      "Attractive Sector",
      "Step Ellipsoidal",
      "Rosenbrock",
      "Rotated Rosenbrock",
      "Ellipsoidal",
      "Discus",
      "Bent Cigar",
      "Sharp Ridge",
      "Different Powers",
      "Rotated Rastrigin",
      "Weierstrass",
      "Schaffers F7",
      "Schaffers F7 (ill-conditioned)",
      "Composite Griewank-Rosenbrock",
      "Schwefel",
      "Gallagher 101 Peaks",
      "Gallagher 21 Peaks",
      "Katsuura",
      "Lunacek bi-Rastrigin",
  };
  if (problem_id < 1 || problem_id > kNumProblems) return "unknown";
  return names[problem_id - 1];
}

void write_manifest(std::ostream& out, std::span<const ProblemInstance> instances) {
  csv::Writer w(out);
  const int d = instances.empty() ? 0 : instances.front().dimension();
  w.field("problem_id").field("instance_id").field("dimension").field("f_offset");
  for (int i = 1; i <= d; ++i) w.field("shift_" + std::to_string(i));
  w.end_row();
  for (const auto& inst : instances) {
    w.field(inst.problem_id()).field(inst.instance_id()).field(inst.dimension());
    w.field(inst.f_offset());
    for (double s : inst.shift()) w.field(s);
    w.end_row();
  }
}

std::vector<InstanceKey> read_manifest_keys(std::istream& in) {
  const auto table = csv::read(in);
  const auto cp = table.column("problem_id");
  const auto ci = table.column("instance_id");
  const auto cd = table.column("dimension");
  std::vector<InstanceKey> keys;
  for (const auto& row : table.rows) {
    keys.push_back({static_cast<int>(csv::parse_int(row[cp])),
                    static_cast<int>(csv::parse_int(row[ci])),
                    static_cast<int>(csv::parse_int(row[cd]))});
  }
  return keys;
}

}  // namespace aif::suite
