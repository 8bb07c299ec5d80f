#include "invlab/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>

#include "invlab/errors.hpp"

namespace invlab::catalog {
namespace {

Vec scalar(double v) {
  Vec u(1);
  u << v;
  return u;
}

Vec pair(double a, double b) {
  Vec u(2);
  u << a, b;
  return u;
}

Entry circle() {
  ControlSystem s;
  s.name = "circle";
  s.n = 2;
  s.d = 1;
  s.k = 0;
  s.drift = [](const Vec& x, const Vec&) -> Vec { return -0.5 * x; };
  s.diffusion = [](const Vec& x, const Vec&) -> Mat {
    Mat m(2, 1);
    m << -x(1), x(0);
    return m;
  };
  s.diffusion_jacobian = [](const Vec&, const Vec&, int) -> Mat {
    Mat j(2, 2);
    j << 0.0, -1.0, 1.0, 0.0;
    return j;
  };
  s.controls = {Vec(0)};
  auto exact = [](const Vec& x0, const Vec&, const Vec& w) -> Vec {
    const double c = std::cos(w(0));
    const double sn = std::sin(w(0));
    return pair(c * x0(0) - sn * x0(1), sn * x0(0) + c * x0(1));
  };
  return Entry{std::move(s), "disk", exact};
}

Entry sphere(int n) {
  if (n < 2) throw InvalidArgument("sphere-n needs n >= 2");
  std::vector<std::pair<int, int>> planes;
  for (int p = 0; p < n; ++p) {
    for (int q = p + 1; q < n; ++q) planes.emplace_back(p, q);
  }
  ControlSystem s;
  s.name = n == 3 ? "sphere-n" : "sphere-" + std::to_string(n);
  s.n = n;
  s.d = static_cast<int>(planes.size());
  s.k = 1;
  const double contraction = 0.5 * (n - 1);
  s.drift = [contraction](const Vec& x, const Vec& u) -> Vec {
    Vec b = -contraction * x;
    b(0) -= u(0) * x(1);
    b(1) += u(0) * x(0);
    return b;
  };
  s.diffusion = [n, planes](const Vec& x, const Vec&) -> Mat {
    Mat m = Mat::Zero(n, static_cast<Eigen::Index>(planes.size()));
    for (std::size_t c = 0; c < planes.size(); ++c) {
      const auto [p, q] = planes[c];
      m(q, static_cast<Eigen::Index>(c)) = x(p);
      m(p, static_cast<Eigen::Index>(c)) = -x(q);
    }
    return m;
  };
  s.diffusion_jacobian = [n, planes](const Vec&, const Vec&, int i) -> Mat {
    Mat j = Mat::Zero(n, n);
    const auto [p, q] = planes[static_cast<std::size_t>(i)];
    j(q, p) = 1.0;
    j(p, q) = -1.0;
    return j;
  };
  s.controls = {scalar(-1.0), scalar(0.0), scalar(1.0)};
  return Entry{std::move(s), "ball", {}};
}

Entry halfspace_tangent() {
  ControlSystem s;
  s.name = "halfspace-tangent";
  s.n = 2;
  s.d = 1;
  s.k = 2;
  s.drift = [](const Vec&, const Vec& u) -> Vec { return pair(-u(0), u(1)); };
  s.diffusion = [](const Vec& x, const Vec&) -> Mat {
    Mat m(2, 1);
    m << 0.0, 1.0 + 0.5 * std::sin(x(1));
    return m;
  };
  s.diffusion_jacobian = [](const Vec& x, const Vec&, int) -> Mat {
    Mat j = Mat::Zero(2, 2);
    j(1, 1) = 0.5 * std::cos(x(1));
    return j;
  };
  s.controls = {pair(1.0, 0.0), pair(0.0, 1.0), pair(0.5, -1.0)};
  return Entry{std::move(s), "halfspace", {}};
}

Entry halfspace_crossing() {
  ControlSystem s;
  s.name = "halfspace-crossing";
  s.n = 2;
  s.d = 1;
  s.k = 1;
  s.drift = [](const Vec&, const Vec& u) -> Vec { return pair(0.0, u(0)); };
  s.diffusion = [](const Vec&, const Vec&) -> Mat {
    Mat m(2, 1);
    m << 1.0, 0.0;
    return m;
  };
  s.diffusion_jacobian = [](const Vec&, const Vec&, int) -> Mat { return Mat::Zero(2, 2); };
  s.controls = {scalar(0.0), scalar(1.0)};
  return Entry{std::move(s), "halfspace", {}};
}

Entry inward_drift() {
  ControlSystem s;
  s.name = "inward-drift";
  s.n = 2;
  s.d = 1;
  s.k = 1;
  s.drift = [](const Vec& x, const Vec& u) -> Vec { return -u(0) * x; };
  s.diffusion = [](const Vec&, const Vec&) -> Mat { return Mat::Zero(2, 1); };
  s.diffusion_jacobian = [](const Vec&, const Vec&, int) -> Mat { return Mat::Zero(2, 2); };
  s.controls = {scalar(0.5), scalar(1.0)};
  return Entry{std::move(s), "disk", {}};
}

ClosedSet ball(std::string name, int n) {
  ClosedSet k;
  k.name = std::move(name);
  k.n = n;
  k.g = [](const Vec& x) { return x.squaredNorm() - 1.0; };
  k.dg = [](const Vec& x) -> Vec { return 2.0 * x; };
  k.d2g = [n](const Vec&) -> Mat { return 2.0 * Mat::Identity(n, n); };
  k.exact_distance = [](const Vec& x) {
    return x.squaredNorm() <= 1.0 ? 0.0 : std::max(0.0, x.norm() - 1.0);
  };
  k.sample_radius = 2.0;
  return k;
}

ClosedSet halfspace(int n) {
  ClosedSet k;
  k.name = "halfspace";
  k.n = n;
  k.g = [](const Vec& x) { return x(0); };
  k.dg = [n](const Vec&) -> Vec {
    Vec e = Vec::Zero(n);
    e(0) = 1.0;
    return e;
  };
  k.d2g = [n](const Vec&) -> Mat { return Mat::Zero(n, n); };
  k.exact_distance = [](const Vec& x) { return std::max(0.0, x(0)); };
  k.sample_radius = 2.0;
  return k;
}

}  // namespace

Entry system(std::string_view name) {
  if (name == "circle") return circle();
  if (name == "sphere-n") return sphere(3);
  if (name.starts_with("sphere-")) {
    int n = 0;
    const auto digits = name.substr(7);
    const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (res.ec == std::errc() && res.ptr == digits.data() + digits.size() && n >= 2 && n <= 12) {
      return sphere(n);
    }
  }
  if (name == "halfspace-tangent") return halfspace_tangent();
  if (name == "halfspace-crossing") return halfspace_crossing();
  if (name == "inward-drift") return inward_drift();
  throw InvalidArgument("unknown catalog system '" + std::string(name) + "'");
}

ClosedSet set(std::string_view name, int n) {
  if (name == "disk") {
    if (n != 2) throw InvalidArgument("set 'disk' is two-dimensional, system has n = " + std::to_string(n));
    return ball("disk", 2);
  }
  if (name == "ball") return ball("ball", n);
  if (name == "halfspace") return halfspace(n);
  throw InvalidArgument("unknown catalog set '" + std::string(name) + "'");
}

std::vector<std::string> system_names() {
  return {"circle", "sphere-n", "halfspace-tangent", "halfspace-crossing", "inward-drift"};
}

std::vector<Pair> pairs() {
  std::vector<Pair> out;
  for (const auto& name : system_names()) out.push_back({name, system(name).default_set});
  return out;
}

}  // namespace invlab::catalog
