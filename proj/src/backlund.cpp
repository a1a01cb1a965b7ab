#include "qdef/backlund.h"

#include <cmath>
#include <functional>

namespace qdef {

namespace {

// Quadratic coefficients recovered from exact samples at -1, 0, 1.  The
// driving Delta functions are exact quadratics in the partner parameter, so
// three samples determine them with no truncation error.
struct Quad {
  double c0 = 0, c1 = 0, c2 = 0;

  double eval(double t) const { return c0 + t * (c1 + t * c2); }
  // Companion in the reciprocal chart: t^2 f(1/t) = c2 + c1 t + c0 t^2.
  double eval_recip(double w) const { return c2 + w * (c1 + w * c0); }
  double bound() const { return std::abs(c0) + std::abs(c1) + std::abs(c2); }
};

Quad fit_quad(const std::function<double(double)>& f) {
  double fm = f(-1.0), f0 = f(0.0), fp = f(1.0);
  return {f0, 0.5 * (fp - fm), 0.5 * (fp + fm) - f0};
}

// Driving quadratic at station v0: Delta^- in v1 for the U family, Delta'^-
// in u1 for the V family.
Quad station_quad(const ConfocalFamily& fam, double z, Ruling flag,
                  double v0) {
  if (flag == Ruling::U)
    return fit_quad(
        [&](double t) { return delta_minus(fam, z, v0, t); });
  return fit_quad(
      [&](double t) { return delta_prime_minus(fam, z, v0, t); });
}

// Projective state of the marching parameter: val is the parameter itself or
// its reciprocal, whichever lies in the unit band.
struct PState {
  bool recip = false;
  double val = 0;

  double value() const { return recip ? 1.0 / val : val; }
};

void normalize(PState& s) {
  if (std::abs(s.val) > 1.0) {
    s.val = 1.0 / s.val;
    s.recip = !s.recip;
  }
}

// One RK4 substep with the chart frozen; in either chart the right-hand side
// is a polynomial with the coefficients of the station quadratics.
double rk4_substep(bool recip, double val, double h, const Quad& q0,
                   double k0, const Quad& qm, double km, const Quad& qe,
                   double ke) {
  auto f = [recip](const Quad& q, double k, double x) {
    return recip ? -k * q.eval_recip(x) : k * q.eval(x);
  };
  double s1 = f(q0, k0, val);
  double s2 = f(qm, km, val + 0.5 * h * s1);
  double s3 = f(qm, km, val + 0.5 * h * s2);
  double s4 = f(qe, ke, val + h * s3);
  return val + h / 6.0 * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
}

// March one grid interval [s0, s1], subdividing so that no substep can move
// the in-band coordinate by more than a fraction of the band.
PState advance_interval(const ConfocalFamily& fam, double z, Ruling flag,
                        const std::function<double(double)>& phi, PState y,
                        double s0, double s1) {
  double h_full = s1 - s0;
  double bound = 0;
  for (double s : {s0, 0.5 * (s0 + s1), s1}) {
    Quad q = station_quad(fam, z, flag, s);
    bound = std::max(bound, std::abs(phi(s) / (2.0 * z)) * q.bound());
  }
  double nsub_f = std::ceil(std::abs(h_full) * bound / 0.2);
  if (nsub_f > 2e5)
    throw RicattiBlowup("leaf equation stiff beyond the substep budget");
  int nsub = std::max(1, static_cast<int>(nsub_f));
  double hs = h_full / nsub;

  for (int k = 0; k < nsub; ++k) {
    double a = s0 + k * hs;
    Quad q0 = station_quad(fam, z, flag, a);
    Quad qm = station_quad(fam, z, flag, a + 0.5 * hs);
    Quad qe = station_quad(fam, z, flag, a + hs);
    double k0 = phi(a) / (2.0 * z);
    double km = phi(a + 0.5 * hs) / (2.0 * z);
    double ke = phi(a + hs) / (2.0 * z);

    PState before = y;
    y.val = rk4_substep(y.recip, y.val, hs, q0, k0, qm, km, qe, ke);
    if (!std::isfinite(y.val)) {
      // Retry the substep in the other chart.
      if (before.val == 0.0)
        throw RicattiBlowup("leaf equation leaves both charts in one step");
      double redo = rk4_substep(!before.recip, 1.0 / before.val, hs, q0, k0,
                                qm, km, qe, ke);
      if (!std::isfinite(redo))
        throw RicattiBlowup("leaf equation leaves both charts in one step");
      y.recip = !before.recip;
      y.val = redo;
    }
    normalize(y);
  }
  return y;
}

// Grid finite differences at fourth order (five-point stencils); margin 2.
struct Fd4 {
  const std::vector<Vec3>& f;
  const GridSpec& g;

  Vec3 at(int i, int j) const { return f[g.index(i, j)]; }
  Vec3 du(int i, int j) const {
    return (-at(i + 2, j) + 8.0 * at(i + 1, j) - 8.0 * at(i - 1, j) +
            at(i - 2, j)) /
           (12.0 * g.du());
  }
  Vec3 dv(int i, int j) const {
    return (-at(i, j + 2) + 8.0 * at(i, j + 1) - 8.0 * at(i, j - 1) +
            at(i, j - 2)) /
           (12.0 * g.dv());
  }
  Vec3 duu(int i, int j) const {
    return (-at(i + 2, j) + 16.0 * at(i + 1, j) - 30.0 * at(i, j) +
            16.0 * at(i - 1, j) - at(i - 2, j)) /
           (12.0 * g.du() * g.du());
  }
  Vec3 dvv(int i, int j) const {
    return (-at(i, j + 2) + 16.0 * at(i, j + 1) - 30.0 * at(i, j) +
            16.0 * at(i, j - 1) - at(i, j - 2)) /
           (12.0 * g.dv() * g.dv());
  }
  Vec3 duv(int i, int j) const {
    return (-dv(i + 2, j) + 8.0 * dv(i + 1, j) - 8.0 * dv(i - 1, j) +
            dv(i - 2, j)) /
           (12.0 * g.du());
  }
  double gauss(int i, int j) const {
    Vec3 xu = du(i, j), xv = dv(i, j);
    double E = xu.dot(xu), F = xu.dot(xv), G = xv.dot(xv);
    Vec3 n = xu.cross(xv).normalized();
    double L = n.dot(duu(i, j)), M = n.dot(duv(i, j)), N = n.dot(dvv(i, j));
    return (L * N - M * M) / (E * G - F * F);
  }
  Vec3 unit_normal(int i, int j) const {
    return du(i, j).cross(dv(i, j)).normalized();
  }
};

}  // namespace

Leaf leaf_integrate(const Seed& seed, double z, double v1_init, Ruling flag) {
  require_admissible(seed.fam, z);
  if (std::abs(z) < eps_deg)
    throw OutOfRange("leaf parameter z must be nonzero");
  if (!seed.phi)
    throw OutOfRange("leaf integration needs a ruled seed profile");
  const GridSpec& g = seed.grid;
  if (g.nu < 2 || g.nv < 2)
    throw GridTooCoarse("leaf needs at least a 2x2 seed grid");

  // March the driving parameter down the v-stations; it is constant in u0.
  std::vector<PState> traj(g.nv);
  traj[0] = {false, v1_init};
  normalize(traj[0]);
  for (int j = 0; j + 1 < g.nv; ++j)
    traj[j + 1] = advance_interval(seed.fam, z, flag, seed.phi, traj[j],
                                   g.v(j), g.v(j + 1));

  Leaf leaf;
  leaf.fam = seed.fam;
  leaf.z = z;
  leaf.flag = flag;
  leaf.grid = g;
  leaf.u1.resize(g.nu, g.nv);
  leaf.v1.resize(g.nu, g.nv);
  leaf.x1.resize(static_cast<size_t>(g.nu) * g.nv);

  for (int j = 0; j < g.nv; ++j) {
    double driven = traj[j].value();
    for (int i = 0; i < g.nu; ++i) {
      double u1, v1;
      try {
        if (flag == Ruling::U) {
          v1 = driven;
          u1 = tc_solve_u1(seed.fam, z, g.u(i), g.v(j), v1);
        } else {
          u1 = driven;
          v1 = tc_solve_v1(seed.fam, z, g.u(i), g.v(j), u1);
        }
      } catch (const DegenerateHomography&) {
        throw SingularDelta("partner chart recovery degenerate at a node");
      }
      // The recovery is a homography; near its pole the partner point runs
      // off along the ruling and the node is unusable.
      if (!(std::abs(u1) < 1e8) || !(std::abs(v1) < 1e8))
        throw SingularDelta("partner ruling parameter diverges at a node");
      leaf.u1(i, j) = u1;
      leaf.v1(i, j) = v1;
      leaf.x1[g.index(i, j)] =
          seed.motion[g.index(i, j)](evaluate(seed.fam, z, u1, v1));
    }
  }
  return leaf;
}

double acpia_check(const Leaf& leaf) {
  const GridSpec& g = leaf.grid;
  if (g.nu < 5 || g.nv < 5)
    throw GridTooCoarse("applicability check needs a 3x3 interior");

  // Partner pullback grid: the chart values transplanted back to z = 0.
  std::vector<Vec3> y(static_cast<size_t>(g.nu) * g.nv);
  for (int i = 0; i < g.nu; ++i)
    for (int j = 0; j < g.nv; ++j)
      y[g.index(i, j)] =
          evaluate(leaf.fam, 0, leaf.u1(i, j), leaf.v1(i, j));

  double du = g.du(), dv = g.dv();
  double worst = 0;
  auto first_forms = [&](const std::vector<Vec3>& p, int i, int j, double& E,
                         double& F, double& G) {
    Vec3 pu = (p[g.index(i + 1, j)] - p[g.index(i - 1, j)]) / (2.0 * du);
    Vec3 pv = (p[g.index(i, j + 1)] - p[g.index(i, j - 1)]) / (2.0 * dv);
    E = pu.dot(pu);
    F = pu.dot(pv);
    G = pv.dot(pv);
  };
  for (int i = 1; i + 1 < g.nu; ++i)
    for (int j = 1; j + 1 < g.nv; ++j) {
      double Ea, Fa, Ga, Eb, Fb, Gb;
      first_forms(leaf.x1, i, j, Ea, Fa, Ga);
      first_forms(y, i, j, Eb, Fb, Gb);
      double scale = std::max({Ea, Ga, Eb, Gb, eps_deg});
      double gap = std::max({std::abs(Ea - Eb), std::abs(Fa - Fb),
                             std::abs(Ga - Gb)}) /
                   scale;
      worst = std::max(worst, gap);
    }
  return worst;
}

const std::vector<RigidMotion>& inversion_rolling(const Seed& seed,
                                                  Leaf& leaf) {
  const GridSpec& g = leaf.grid;
  leaf.rolling.assign(static_cast<size_t>(g.nu) * g.nv,
                      RigidMotion::identity());
  for (int i = 0; i < g.nu; ++i)
    for (int j = 0; j < g.nv; ++j) {
      RigidMotion pia =
          rmpia(leaf.fam, leaf.z, g.u(i), g.v(j), leaf.u1(i, j),
                leaf.v1(i, j), leaf.flag, leaf.flag);
      leaf.rolling[g.index(i, j)] = seed.motion[g.index(i, j)] * pia.inverse();
    }
  return leaf.rolling;
}

WeingartenReport weingarten_check(const Seed& seed, const Leaf& leaf) {
  const GridSpec& g = leaf.grid;
  WeingartenReport rep;

  // Closed form at the exact chart values, every node.
  double a2 = leaf.fam.calA() * leaf.fam.calA();
  for (int i = 0; i < g.nu; ++i)
    for (int j = 0; j < g.nv; ++j) {
      double k0 = gauss_curvature_chart(leaf.fam, 0, g.u(i), g.v(j));
      double k1 =
          gauss_curvature_chart(leaf.fam, 0, leaf.u1(i, j), leaf.v1(i, j));
      double n0 =
          normal_hat(leaf.fam, 0, evaluate(leaf.fam, 0, g.u(i), g.v(j)))
              .squaredNorm();
      double n1 = normal_hat(leaf.fam, 0,
                             evaluate(leaf.fam, 0, leaf.u1(i, j),
                                      leaf.v1(i, j)))
                      .squaredNorm();
      rep.closed_form = std::max(
          rep.closed_form, std::abs(k0 * k1 * a2 * a2 * n0 * n0 * n1 * n1 - 1.0));
    }

  // A leaf collapsed onto a line carries no second curvature; skip the
  // finite-difference criterion for those.
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : leaf.x1) mean += p;
  mean /= static_cast<double>(leaf.x1.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : leaf.x1) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  double lam_top = std::max(0.0, eig.eigenvalues()(2));
  double lam_mid = std::max(0.0, eig.eigenvalues()(1));
  // Compare variances, not singular values: an exactly collinear cloud still
  // measures lam_mid ~ eps*lam_top through the eigensolver, and taking square
  // roots would halve the exponent gap between that floor and a real leaf.
  if (lam_mid <= 1e-12 * lam_top + eps_deg * eps_deg) {
    rep.degenerate = true;
    return rep;
  }

  if (g.nu < 7 || g.nv < 7)
    throw GridTooCoarse("curvature differences need a 7x7 grid");
  Fd4 f0{seed.x, g}, f1{leaf.x1, g};
  for (int i = 2; i + 2 < g.nu; ++i)
    for (int j = 2; j + 2 < g.nv; ++j) {
      double lhs = f0.gauss(i, j) * f1.gauss(i, j);
      double sinb = f0.unit_normal(i, j).cross(f1.unit_normal(i, j)).norm();
      double d = (leaf.x1[g.index(i, j)] - seed.x[g.index(i, j)]).norm();
      double rhs = std::pow(sinb, 4) / std::pow(d, 4);
      double rel = std::abs(lhs - rhs) / std::max({lhs, rhs, eps_deg});
      rep.criterion = std::max(rep.criterion, rel);
    }
  return rep;
}

}  // namespace qdef
