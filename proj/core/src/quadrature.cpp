#include "dinilab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

namespace dinilab {
namespace {

// Nodes and weights of the 15-point Kronrod rule and its embedded 7-point Gauss rule.
constexpr double kXk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                           0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                           0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                           0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                           0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                           0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                           0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

}  // namespace

double gauss_kronrod_15(const std::function<double(double)>& f, double a, double b, double& err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double k15 = kWk[7] * fc;
  double g7 = kWg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kXk[i];
    const double pair = f(c - dx) + f(c + dx);
    k15 += kWk[i] * pair;
    if (i % 2 == 1) g7 += kWg[i / 2] * pair;
  }
  k15 *= h;
  g7 *= h;
  err = std::abs(k15 - g7);
  return k15;
}

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opts) {
  QuadratureResult out;
  if (a == b) return out;
  std::priority_queue<Panel> heap;
  double err0 = 0.0;
  const double v0 = gauss_kronrod_15(f, a, b, err0);
  heap.push({a, b, v0, err0});
  double total = v0;
  double total_err = err0;
  int panels = 1;
  while (panels < opts.max_panels) {
    if (total_err <= std::max(opts.abs_tol, opts.rel_tol * std::abs(total))) break;
    Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // Panel can no longer be split in floating point; keep it as is.
      heap.push(worst);
      break;
    }
    double el = 0.0, er = 0.0;
    const double vl = gauss_kronrod_15(f, worst.a, mid, el);
    const double vr = gauss_kronrod_15(f, mid, worst.b, er);
    total += vl + vr - worst.value;
    total_err += el + er - worst.error;
    heap.push({worst.a, mid, vl, el});
    heap.push({mid, worst.b, vr, er});
    ++panels;
  }
  // Re-sum from the panels so that cancellation in the running totals does not leak in.
  std::vector<Panel> all;
  all.reserve(heap.size());
  while (!heap.empty()) {
    all.push_back(heap.top());
    heap.pop();
  }
  std::sort(all.begin(), all.end(), [](const Panel& l, const Panel& r) { return l.a < r.a; });
  double sum = 0.0, esum = 0.0;
  for (const auto& p : all) {
    sum += p.value;
    esum += p.error;
  }
  out.value = sum;
  out.error = esum;
  out.panels = panels;
  out.converged = esum <= std::max(opts.abs_tol, opts.rel_tol * std::abs(sum)) || esum == 0.0;
  return out;
}

}  // namespace dinilab
