#include "qdef/rolling.h"

#include <cmath>

namespace qdef {

namespace {

Mat3 skew(const Vec3& w) {
  Mat3 S;
  S << 0, -w[2], w[1], w[2], 0, -w[0], -w[1], w[0], 0;
  return S;
}

// Reconstruct the vector coefficients at a node from the chart components.
std::pair<Vec3, Vec3> node_pq(const ConnectionForm& f, int i, int j) {
  double u = f.grid.u(i), v = f.grid.v(j);
  Vec3 xu = point_du(f.fam, 0, u, v), xv = point_dv(f.fam, 0, u, v);
  double B = f.fam.B_factor(u, v);
  Vec3 P = B * (f.o_uu(i, j) * xu - f.o_uv(i, j) * xv);
  Vec3 Q = B * (f.o_vu(i, j) * xu - f.o_uu(i, j) * xv);
  return {P, Q};
}

double anchor_u(const ConfocalFamily& fam, double v) {
  return fam.central() ? v + 1.0 : 0.0;
}

}  // namespace

ConnectionForm connection_from_shapes(const Seed& seed) {
  const GridSpec& g = seed.grid;
  if (g.nu < 3 || g.nv < 3)
    throw GridTooCoarse("need at least 3 nodes per direction");

  ConnectionForm form;
  form.fam = seed.fam;
  form.grid = g;
  form.o_uu = Eigen::ArrayXXd::Zero(g.nu, g.nv);
  form.o_uv = Eigen::ArrayXXd::Zero(g.nu, g.nv);
  form.o_vu = Eigen::ArrayXXd::Zero(g.nu, g.nv);

  // Chart points on the same grid, so both shapes share one stencil.
  std::vector<Vec3> x0(g.nu * g.nv);
  for (int i = 0; i < g.nu; ++i)
    for (int j = 0; j < g.nv; ++j)
      x0[g.index(i, j)] = evaluate(seed.fam, 0, g.u(i), g.v(j));

  double du = g.du(), dv = g.dv();
  for (int i = 1; i + 1 < g.nu; ++i) {
    for (int j = 1; j + 1 < g.nv; ++j) {
      auto at = [&](const std::vector<Vec3>& w, int di, int dj) -> const Vec3& {
        return w[g.index(i + di, j + dj)];
      };
      auto second = [&](const std::vector<Vec3>& w) {
        Vec3 uu = (at(w, 1, 0) - 2 * at(w, 0, 0) + at(w, -1, 0)) / (du * du);
        Vec3 vv = (at(w, 0, 1) - 2 * at(w, 0, 0) + at(w, 0, -1)) / (dv * dv);
        Vec3 uv = (at(w, 1, 1) - at(w, 1, -1) - at(w, -1, 1) + at(w, -1, -1)) /
                  (4 * du * dv);
        return std::array<Vec3, 3>{uu, uv, vv};
      };
      auto dx = second(seed.x);
      auto dx0 = second(x0);

      const Mat3& R = seed.motion[g.index(i, j)].R;
      double u = g.u(i), v = g.v(j);
      Vec3 xu = point_du(seed.fam, 0, u, v), xv = point_dv(seed.fam, 0, u, v);
      Vec3 nvec = xu.cross(xv);
      double sqrtg = nvec.norm();
      Vec3 N0 = nvec / sqrtg;
      double denom = sqrtg * seed.fam.B_factor(u, v);

      double s11 = N0.dot(R.transpose() * dx[0] - dx0[0]);
      double s12 = N0.dot(R.transpose() * dx[1] - dx0[1]);
      double s22 = N0.dot(R.transpose() * dx[2] - dx0[2]);
      form.o_uu(i, j) = s12 / denom;
      form.o_uv(i, j) = s11 / denom;
      form.o_vu(i, j) = s22 / denom;
    }
  }

  // Replicate the nearest interior value on the border.
  auto clampi = [](int k, int n) { return std::min(std::max(k, 1), n - 2); };
  for (int i = 0; i < g.nu; ++i)
    for (int j = 0; j < g.nv; ++j)
      if (i == 0 || j == 0 || i + 1 == g.nu || j + 1 == g.nv) {
        int ci = clampi(i, g.nu), cj = clampi(j, g.nv);
        form.o_uu(i, j) = form.o_uu(ci, cj);
        form.o_uv(i, j) = form.o_uv(ci, cj);
        form.o_vu(i, j) = form.o_vu(ci, cj);
      }
  return form;
}

Eigen::ArrayXXd flatness_residual(const ConnectionForm& form) {
  const GridSpec& g = form.grid;
  Eigen::ArrayXXd res = Eigen::ArrayXXd::Zero(g.nu, g.nv);
  double du = g.du(), dv = g.dv();
  for (int i = 1; i + 1 < g.nu; ++i) {
    for (int j = 1; j + 1 < g.nv; ++j) {
      auto [P, Q] = node_pq(form, i, j);
      Vec3 Qu = (node_pq(form, i + 1, j).second - node_pq(form, i - 1, j).second) /
                (2 * du);
      Vec3 Pv = (node_pq(form, i, j + 1).first - node_pq(form, i, j - 1).first) /
                (2 * dv);
      res(i, j) = (Qu - Pv + P.cross(Q)).norm();
    }
  }
  return res;
}

Omega ruled_omega(const ConfocalFamily& fam, std::function<double(double)> phi) {
  return [fam, phi = std::move(phi)](double, double v) {
    return std::make_pair(Vec3(Vec3::Zero()),
                          Vec3(phi(v) * ruling_u_dir(fam, 0, v)));
  };
}

Omega omega_from_connection(const ConnectionForm& form) {
  return [form](double u, double v) {
    const GridSpec& g = form.grid;
    double fu = (u - g.u_lo) / g.du(), fv = (v - g.v_lo) / g.dv();
    int i = std::min(std::max(int(std::floor(fu)), 0), g.nu - 2);
    int j = std::min(std::max(int(std::floor(fv)), 0), g.nv - 2);
    double a = fu - i, b = fv - j;
    auto c00 = node_pq(form, i, j), c10 = node_pq(form, i + 1, j);
    auto c01 = node_pq(form, i, j + 1), c11 = node_pq(form, i + 1, j + 1);
    Vec3 P = (1 - a) * (1 - b) * c00.first + a * (1 - b) * c10.first +
             (1 - a) * b * c01.first + a * b * c11.first;
    Vec3 Q = (1 - a) * (1 - b) * c00.second + a * (1 - b) * c10.second +
             (1 - a) * b * c01.second + a * b * c11.second;
    return std::make_pair(P, Q);
  };
}

std::vector<RigidMotion> integrate_frame(const ConfocalFamily& fam,
                                         const Omega& omega,
                                         const std::vector<Vec2>& path,
                                         const RigidMotion& init) {
  if (path.empty()) return {};
  std::vector<RigidMotion> out;
  out.reserve(path.size());

  Mat3 R = init.R;
  Vec3 t = init.t;
  out.push_back({R, t});

  auto project = [&](Mat3& M) {
    double drift = (M.transpose() * M - Mat3::Identity()).norm();
    if (drift > 1e-4)
      throw StepTooLarge("orthogonality drift " + std::to_string(drift));
    M = polar_rotation(M);
  };

  // Derivative of (R, t) at fraction s of the current segment.
  for (size_t k = 0; k + 1 < path.size(); ++k) {
    Vec2 p0 = path[k], dp = path[k + 1] - path[k];
    auto deriv = [&](double s, const Mat3& Rs, Mat3& dR, Vec3& dt) {
      Vec2 p = p0 + s * dp;
      auto [P, Q] = omega(p[0], p[1]);
      Vec3 w = P * dp[0] + Q * dp[1];
      dR = Rs * skew(w);
      dt = -dR * evaluate(fam, 0, p[0], p[1]);
    };
    Mat3 k1R, k2R, k3R, k4R;
    Vec3 k1t, k2t, k3t, k4t;
    deriv(0.0, R, k1R, k1t);
    deriv(0.5, R + 0.5 * k1R, k2R, k2t);
    deriv(0.5, R + 0.5 * k2R, k3R, k3t);
    deriv(1.0, R + k3R, k4R, k4t);
    R += (k1R + 2 * k2R + 2 * k3R + k4R) / 6.0;
    t += (k1t + 2 * k2t + 2 * k3t + k4t) / 6.0;
    if ((k + 1) % 64 == 0) project(R);
    out.push_back({R, t});
  }
  project(R);
  out.back() = {R, t};
  return out;
}

Seed ruled_seed(const ConfocalFamily& fam, std::function<double(double)> phi,
                const GridSpec& grid) {
  if (fam.central()) {
    for (int i = 0; i < grid.nu; ++i)
      for (int j = 0; j < grid.nv; ++j)
        if (std::abs(grid.u(i) - grid.v(j)) <= eps_sing)
          throw SingularRuling("grid touches the u = v band");
  }

  std::vector<Vec2> path(grid.nv);
  for (int j = 0; j < grid.nv; ++j)
    path[j] = Vec2(anchor_u(fam, grid.v(j)), grid.v(j));
  auto frames = integrate_frame(fam, ruled_omega(fam, phi), path,
                                RigidMotion::identity());

  Seed seed;
  seed.fam = fam;
  seed.grid = grid;
  seed.phi = std::move(phi);
  seed.x.resize(grid.nu * grid.nv);
  seed.motion.resize(grid.nu * grid.nv);
  for (int i = 0; i < grid.nu; ++i) {
    for (int j = 0; j < grid.nv; ++j) {
      seed.motion[grid.index(i, j)] = frames[j];
      seed.x[grid.index(i, j)] =
          frames[j](evaluate(fam, 0, grid.u(i), grid.v(j)));
    }
  }
  return seed;
}

std::vector<PlanarMotion> roll_curves(const std::vector<CurveSample>& c0,
                                      const std::vector<CurveSample>& c1) {
  if (c0.size() != c1.size())
    throw ArcLengthMismatch("sample counts differ");
  std::vector<PlanarMotion> out(c0.size());
  double prev = 0;
  for (size_t k = 0; k < c0.size(); ++k) {
    double n0 = c0[k].dc.norm(), n1 = c1[k].dc.norm();
    if (std::abs(n0 - n1) > 1e-8 * std::max(1.0, std::max(n0, n1)))
      throw ArcLengthMismatch("speeds differ at s = " +
                              std::to_string(c0[k].s));
    double a0 = std::atan2(c0[k].dc[1], c0[k].dc[0]);
    double a1 = std::atan2(c1[k].dc[1], c1[k].dc[0]);
    double angle = a1 - a0;
    // Unwrap relative to the previous node for a continuous motion.
    double two_pi = 2 * M_PI;
    while (angle - prev > M_PI) angle -= two_pi;
    while (angle - prev < -M_PI) angle += two_pi;
    prev = angle;
    out[k].angle = angle;
    out[k].t = c1[k].c - out[k].rot() * c0[k].c;
  }
  return out;
}

}  // namespace qdef
