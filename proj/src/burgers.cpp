#include "emlab/burgers.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "emlab/decay.hpp"
#include "emlab/sobolev.hpp"

namespace emlab {

namespace {

std::string where(const Vec3& p) {
  std::ostringstream os;
  os << std::setprecision(17) << "(" << p[0] << ", " << p[1] << ", " << p[2] << ")";
  return os.str();
}

MatGrad zero_grad() { return {Mat3::Zero(), Mat3::Zero(), Mat3::Zero()}; }

}  // namespace

InitialVelocity InitialVelocity::affine(const Mat3& M, const Vec3& c) {
  if (!M.allFinite() || !c.allFinite()) throw Error("affine initial velocity: non-finite coefficients");
  return InitialVelocity(Affine{M, c});
}

InitialVelocity InitialVelocity::gradient_bump(double delta, double width, const Vec3& center) {
  if (!(delta >= 0.0 && delta < 1.0)) throw Error("gradient bump: delta must lie in [0, 1)");
  if (!(width > 0.0)) throw Error("gradient bump: width must be positive");
  return InitialVelocity(GradientBump{delta, width, center});
}

std::string InitialVelocity::name() const {
  if (is_identity()) return "identity";
  if (is_affine()) return "affine";
  return "gradient-bump";
}

Vec3 InitialVelocity::value(const Vec3& y) const {
  if (const auto* a = affine_part()) return a->M * y + a->c;
  if (const auto* b = bump()) {
    const Vec3 z = y - b->center;
    const double g = std::exp(-z.squaredNorm() / (2.0 * b->width * b->width));
    return y - b->delta * g * z;
  }
  return y;
}

Mat3 InitialVelocity::jacobian(const Vec3& y) const {
  if (const auto* a = affine_part()) return a->M;
  if (const auto* b = bump()) {
    const Vec3 z = y - b->center;
    const double w2 = b->width * b->width;
    const double g = std::exp(-z.squaredNorm() / (2.0 * w2));
    return Mat3::Identity() + b->delta * g * (z * z.transpose() / w2 - Mat3::Identity());
  }
  return Mat3::Identity();
}

MatGrad InitialVelocity::hessian(const Vec3& y) const {
  MatGrad h = zero_grad();
  const auto* b = bump();
  if (!b) return h;
  const Vec3 z = y - b->center;
  const double w2 = b->width * b->width;
  const double g = std::exp(-z.squaredNorm() / (2.0 * w2));
  const double c = b->delta * g;
  for (int m = 0; m < 3; ++m)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double v = -z[i] * z[j] * z[m] / (w2 * w2);
        if (i == j) v += z[m] / w2;
        if (i == m) v += z[j] / w2;
        if (j == m) v += z[i] / w2;
        h[m](i, j) = c * v;
      }
  return h;
}

double distance_to_negative_axis(std::complex<double> lambda) {
  return lambda.real() <= 0.0 ? std::abs(lambda.imag()) : std::abs(lambda);
}

HZeroReport check_H0(const InitialVelocity& v0, double epsilon, const std::vector<Vec3>& samples) {
  if (samples.empty()) throw Error("check_H0: empty sample set");
  if (!(epsilon > 0.0)) throw Error("check_H0: epsilon must be positive");
  HZeroReport r;
  r.epsilon = epsilon;
  r.global_min = std::numeric_limits<double>::infinity();
  r.distances.reserve(samples.size());
  for (const Vec3& x : samples) {
    Eigen::EigenSolver<Mat3> es(v0.jacobian(x), false);
    if (es.info() != Eigen::Success) throw Error("check_H0: eigenvalue solver failed at " + where(x));
    double d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) d = std::min(d, distance_to_negative_axis(es.eigenvalues()[k]));
    r.distances.push_back(d);
    r.global_min = std::min(r.global_min, d);
  }
  r.pass = r.global_min >= epsilon;
  return r;
}

FlowEval::FlowEval(InitialVelocity v0, double tolerance, int max_iterations)
    : v0_(std::move(v0)), tol_(tolerance), max_iter_(max_iterations) {
  if (!(tol_ > 0.0)) throw Error("FlowEval: tolerance must be positive");
  if (max_iter_ < 1) throw Error("FlowEval: iteration cap must be >= 1");
}

Vec3 FlowEval::forward_flow(double t, const Vec3& y) const { return y + t * v0_.value(y); }

Vec3 FlowEval::invert_flow(double t, const Vec3& x) const {
  if (!(t >= 0.0)) throw Error("invert_flow: t must be >= 0");
  if (v0_.is_identity()) return x / (1.0 + t);
  if (const auto* a = v0_.affine_part()) {
    const Eigen::FullPivLU<Mat3> lu(Mat3::Identity() + t * a->M);
    if (!lu.isInvertible()) throw Error("invert_flow: I + tM is singular at t = " + std::to_string(t));
    return lu.solve(x - t * a->c);
  }

  const double threshold = tol_ * (1.0 + x.norm());
  Vec3 y = x / (1.0 + t);
  Vec3 r = forward_flow(t, y) - x;
  double rn = r.norm();
  for (int it = 0; it < max_iter_; ++it) {
    if (rn <= threshold) return y;
    const Vec3 step = (Mat3::Identity() + t * v0_.jacobian(y)).partialPivLu().solve(r);
    if (!step.allFinite()) break;
    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 10; ++halving, lambda *= 0.5) {
      const Vec3 trial = y - lambda * step;
      const Vec3 rt = forward_flow(t, trial) - x;
      if (rt.norm() < rn) {
        y = trial;
        r = rt;
        rn = rt.norm();
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (rn <= threshold) return y;
  throw Error("invert_flow: Newton did not converge at t = " + std::to_string(t) + ", x = " + where(x));
}

FlowEval::Point FlowEval::evaluate(double t, const Vec3& x) const {
  Point p;
  if (v0_.is_identity()) {
    p.y = x / (1.0 + t);
    p.v = p.y;
    p.Dv = Mat3::Identity() / (1.0 + t);
    p.K = Mat3::Zero();
    return p;
  }
  p.y = invert_flow(t, x);
  p.v = v0_.value(p.y);
  const Mat3 J = v0_.jacobian(p.y);
  const Mat3 Ninv = (Mat3::Identity() + t * J).inverse();
  p.Dv = Ninv * J;
  p.K = (1.0 + t) * Ninv * (J - Mat3::Identity());
  return p;
}

Vec3 FlowEval::eval_v(double t, const Vec3& x) const { return evaluate(t, x).v; }
Mat3 FlowEval::eval_Dv(double t, const Vec3& x) const { return evaluate(t, x).Dv; }
Mat3 FlowEval::eval_K(double t, const Vec3& x) const { return evaluate(t, x).K; }

MatGrad FlowEval::eval_D2v(double t, const Vec3& x) const {
  MatGrad out = zero_grad();
  if (!v0_.is_bump()) return out;
  const Vec3 y = invert_flow(t, x);
  const Mat3 Ninv = (Mat3::Identity() + t * v0_.jacobian(y)).inverse();
  const MatGrad H = v0_.hessian(y);
  MatGrad dy;
  for (int m = 0; m < 3; ++m) dy[m] = Ninv * H[m] * Ninv;
  for (int k = 0; k < 3; ++k)
    for (int m = 0; m < 3; ++m) out[k] += dy[m] * Ninv(m, k);
  return out;
}

Mat3 finite_difference_Dv(const FlowEval& flow, double t, const Vec3& x, double dh) {
  Mat3 J;
  for (int j = 0; j < 3; ++j) {
    Vec3 e = Vec3::Zero();
    e[j] = dh;
    J.col(j) = (flow.eval_v(t, x + e) - flow.eval_v(t, x - e)) / (2.0 * dh);
  }
  return J;
}

double residual_check(const FlowEval& flow, double t, const Vec3& x, double dh, double dt) {
  if (!(dh > 0.0) || !(dt > 0.0) || t - dt < 0.0) throw Error("residual_check: need dh, dt > 0 and t >= dt");
  const Vec3 v = flow.eval_v(t, x);
  const Vec3 dvdt = (flow.eval_v(t + dt, x) - flow.eval_v(t - dt, x)) / (2.0 * dt);
  const Mat3 J = finite_difference_Dv(flow, t, x, dh);
  const Vec3 curl(J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1));
  return (dvdt + J * v - curl.cross(v)).norm();
}

double operator_norm(const Mat3& A) {
  return std::sqrt(std::max(0.0, Eigen::SelfAdjointEigenSolver<Mat3>(A.transpose() * A).eigenvalues().maxCoeff()));
}

double tensor_norm(const MatGrad& T) {
  return std::sqrt(T[0].squaredNorm() + T[1].squaredNorm() + T[2].squaredNorm());
}

EstimateReport estimate_suite(const FlowEval& flow, const std::vector<double>& times, const GridSpec& grid,
                              const EstimateOptions& opt) {
  if (times.empty()) throw Error("estimate_suite: empty time list");
  if (opt.cloud_n < 2 || !(opt.cloud_radius > 0.0)) throw Error("estimate_suite: bad sample cloud");
  const Vec3 centre = flow.initial().bump() ? flow.initial().bump()->center : Vec3::Zero();

  std::vector<Vec3> cloud;
  for (int i = 0; i < opt.cloud_n; ++i)
    for (int j = 0; j < opt.cloud_n; ++j)
      for (int k = 0; k < opt.cloud_n; ++k) {
        const auto c = [&](int a) { return -opt.cloud_radius + 2.0 * opt.cloud_radius * a / (opt.cloud_n - 1); };
        cloud.push_back(centre + Vec3(c(i), c(j), c(k)));
      }

  EstimateReport rep;
  rep.sigmas = opt.sigmas;
  double last_safe = -1.0;
  for (double t : times) {
    EstimateRow row;
    row.t = t;
    for (const Vec3& y : cloud) {
      const Vec3 x = flow.forward_flow(t, y);
      const auto p = flow.evaluate(t, x);
      row.sup_Dv = std::max(row.sup_Dv, operator_norm(p.Dv));
      row.sup_K = std::max(row.sup_K, operator_norm(p.K));
      row.sup_D2v = std::max(row.sup_D2v, tensor_norm(flow.eval_D2v(t, x)));
    }

    const GridSpec g = GridSpec::make(grid.dims, grid.n, grid.half_width * (1.0 + t));
    std::vector<ScalarField> K(9, ScalarField(g)), V(3, ScalarField(g));
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto pos = g.position(i);
      const Vec3 x(pos[0], pos[1], pos[2]);
      const auto p = flow.evaluate(t, x);
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) K[static_cast<std::size_t>(3 * a + b)][i] = p.K(a, b);
        V[static_cast<std::size_t>(a)][i] = p.v[a] - x[a] / (1.0 + t);
      }
    }

    double inside = 0.0, outside = 0.0;
    const double inner = opt.support_fraction * g.half_width;
    for (const auto& f : K)
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto pos = g.position(i);
        bool out = false;
        for (int a = 0; a < g.dims; ++a) out = out || std::abs(pos[a]) > inner;
        double& slot = out ? outside : inside;
        slot = std::max(slot, std::abs(f[i]));
      }
    if (outside > opt.support_tolerance * std::max(inside, outside)) {
      std::ostringstream os;
      os << "estimate_suite: K leaves the inner region of the box at t = " << t << "; maximal safe time "
         << (last_safe < 0.0 ? std::string("none (initial data not confined)") : std::to_string(last_safe));
      throw Error(os.str());
    }
    last_safe = t;

    std::vector<const ScalarField*> kp, vp;
    for (const auto& f : K) kp.push_back(&f);
    for (const auto& f : V) vp.push_back(&f);
    for (double s : opt.sigmas) {
      const double kn = sobolev_seminorm(kp, s);
      row.K_seminorm.push_back(kn);
      row.K_scaled_seminorm.push_back(kn / (1.0 + t));
      row.v_seminorm.push_back(sobolev_seminorm(vp, s));
    }
    rep.rows.push_back(std::move(row));
  }

  const double t0 = std::max(1.0, times.front());
  const double t1 = times.back();
  const auto summarize = [&](const std::string& name, double reference, auto pick) {
    Series series;
    for (const auto& r : rep.rows) series.push_back({r.t, pick(r)});
    SlopeSummary s{name, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), reference};
    bool positive = true;
    std::size_t count = 0;
    for (const auto& x : series)
      if (x.t >= t0 && x.t <= t1) {
        positive = positive && x.value > 0.0;
        ++count;
      }
    if (positive && count >= kMinFitSamples && t1 > t0) {
      const auto fit = fit_exponent(series, t0, t1);
      s.slope = fit.slope;
      s.constant = fit.constant;
    }
    rep.slopes.push_back(s);
  };
  summarize("sup_Dv", -1.0, [](const EstimateRow& r) { return r.sup_Dv; });
  summarize("sup_D2v", -3.0, [](const EstimateRow& r) { return r.sup_D2v; });
  summarize("sup_K", 0.0, [](const EstimateRow& r) { return r.sup_K; });
  for (std::size_t k = 0; k < opt.sigmas.size(); ++k) {
    const double s = opt.sigmas[k];
    std::ostringstream tag;
    tag << s;
    summarize("K_H" + tag.str(), 0.5 - s, [k](const EstimateRow& r) { return r.K_seminorm[k]; });
    summarize("K_scaled_H" + tag.str(), 0.5 - s, [k](const EstimateRow& r) { return r.K_scaled_seminorm[k]; });
    summarize("v_H" + tag.str(), 0.5 - s, [k](const EstimateRow& r) { return r.v_seminorm[k]; });
  }
  return rep;
}

void write_estimate_csv(const std::string& path, const EstimateReport& report) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << std::setprecision(17);
  os << "t,sup_Dv,sup_D2v,sup_K";
  for (double s : report.sigmas) os << ",K_H" << s << ",K_scaled_H" << s << ",v_H" << s;
  os << "\n";
  for (const auto& r : report.rows) {
    os << r.t << "," << r.sup_Dv << "," << r.sup_D2v << "," << r.sup_K;
    for (std::size_t k = 0; k < report.sigmas.size(); ++k)
      os << "," << r.K_seminorm[k] << "," << r.K_scaled_seminorm[k] << "," << r.v_seminorm[k];
    os << "\n";
  }
  os << "\nquantity,slope,constant,reference_slope\n";
  for (const auto& s : report.slopes)
    os << s.quantity << "," << s.slope << "," << s.constant << "," << s.reference_slope << "\n";
}

}  // namespace emlab
